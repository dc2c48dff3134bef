#include <vanauth.h>

#include <exception>
#include <string>
#include <utility>
#include <vector>

#include "bench.hpp"
#include "engine.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "scenario.hpp"
#include "trace.hpp"

struct vanauth_scenario {
    vanauth::Scenario sc;
};

struct vanauth_report {
    std::string trace;
    std::string json;
    std::string table;
};

namespace {

thread_local std::string t_last_error;

vanauth_status status_of(vanauth::Errc code) {
    using vanauth::Errc;
    switch (code) {
        case Errc::ConfigError:
            return VANAUTH_ERR_CONFIG;
        case Errc::InvariantViolation:
            return VANAUTH_ERR_INVARIANT;
        case Errc::CorruptTrace:
            return VANAUTH_ERR_CORRUPT_TRACE;
        case Errc::BadParams:
        case Errc::BadBranching:
        case Errc::IndivisibleK:
            return VANAUTH_ERR_BAD_ARGUMENT;
        default:
            return VANAUTH_ERR_INTERNAL;
    }
}

template <typename Fn>
vanauth_status guarded(Fn&& fn) {
    try {
        fn();
        t_last_error.clear();
        return VANAUTH_OK;
    } catch (const vanauth::Error& e) {
        t_last_error = e.what();
        return status_of(e.code());
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return VANAUTH_ERR_INTERNAL;
    } catch (...) {
        t_last_error = "unidentified failure";
        return VANAUTH_ERR_INTERNAL;
    }
}

vanauth_status fail_argument(const char* msg) {
    t_last_error = msg;
    return VANAUTH_ERR_BAD_ARGUMENT;
}

vanauth_report* report_of(const vanauth::RunResult& rr) {
    auto* r = new vanauth_report;
    r->trace = rr.trace;
    r->json = vanauth::metrics_to_json(rr.metrics).dump(2) + "\n";
    r->table = vanauth::metrics_to_table(rr.metrics);
    return r;
}

vanauth_report* report_of_metrics(const vanauth::MetricsReport& m) {
    auto* r = new vanauth_report;
    r->json = vanauth::metrics_to_json(m).dump(2) + "\n";
    r->table = vanauth::metrics_to_table(m);
    return r;
}

}  // namespace

extern "C" {

const char* vanauth_version(void) { return "1.0.0"; }

const char* vanauth_last_error(void) { return t_last_error.c_str(); }

vanauth_status vanauth_scenario_parse(const char* text, vanauth_scenario** out) {
    if (!text || !out) return fail_argument("null argument");
    return guarded([&] { *out = new vanauth_scenario{vanauth::parse_scenario(text)}; });
}

vanauth_status vanauth_scenario_load(const char* path, vanauth_scenario** out) {
    if (!path || !out) return fail_argument("null argument");
    return guarded([&] { *out = new vanauth_scenario{vanauth::load_scenario_file(path)}; });
}

vanauth_status vanauth_scenario_set_seed(vanauth_scenario* sc, uint64_t seed) {
    if (!sc) return fail_argument("null scenario");
    sc->sc.seed = seed;
    t_last_error.clear();
    return VANAUTH_OK;
}

vanauth_status vanauth_scenario_set_variant(vanauth_scenario* sc, const char* variant) {
    if (!sc || !variant) return fail_argument("null argument");
    const std::string v = variant;
    if (v != "tree" && v != "flat" && v != "both")
        return fail_argument("variant must be tree, flat, or both");
    sc->sc.variant = v;
    t_last_error.clear();
    return VANAUTH_OK;
}

uint64_t vanauth_scenario_seed(const vanauth_scenario* sc) { return sc ? sc->sc.seed : 0; }

const char* vanauth_scenario_variant(const vanauth_scenario* sc) {
    return sc ? sc->sc.variant.c_str() : "";
}

void vanauth_scenario_free(vanauth_scenario* sc) { delete sc; }

vanauth_status vanauth_run(const vanauth_scenario* sc, vanauth_report** out) {
    if (!sc || !out) return fail_argument("null argument");
    return guarded([&] { *out = report_of(vanauth::run_simulation(sc->sc)); });
}

vanauth_status vanauth_replay(const char* trace_text, vanauth_report** out) {
    if (!trace_text || !out) return fail_argument("null argument");
    return guarded([&] {
        const vanauth::ParsedTrace t = vanauth::parse_trace(trace_text);
        *out = report_of_metrics(vanauth::fold_metrics(t.events));
    });
}

vanauth_status vanauth_replay_file(const char* path, vanauth_report** out) {
    if (!path || !out) return fail_argument("null argument");
    return guarded([&] {
        const vanauth::ParsedTrace t = vanauth::load_trace_file(path);
        *out = report_of_metrics(vanauth::fold_metrics(t.events));
    });
}

vanauth_status vanauth_keytree_bench(const uint32_t* branching, size_t levels,
                                     uint32_t keyring_k, uint32_t population,
                                     uint64_t trials, uint64_t seed, vanauth_report** out) {
    if (!branching || !levels || !out) return fail_argument("null argument");
    return guarded([&] {
        vanauth::BenchParams p;
        p.branching.assign(branching, branching + levels);
        p.k = keyring_k;
        p.population = population;
        p.trials = trials;
        p.seed = seed;
        const vanauth::Record report = vanauth::keytree_bench(p);
        auto* r = new vanauth_report;
        r->json = report.dump(2) + "\n";
        r->table = vanauth::bench_to_table(report);
        *out = r;
    });
}

const char* vanauth_report_trace(const vanauth_report* r) { return r ? r->trace.c_str() : ""; }

const char* vanauth_report_json(const vanauth_report* r) { return r ? r->json.c_str() : ""; }

const char* vanauth_report_table(const vanauth_report* r) { return r ? r->table.c_str() : ""; }

void vanauth_report_free(vanauth_report* r) { delete r; }

}  // extern "C"
