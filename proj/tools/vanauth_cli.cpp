#include <CLI11.hpp>
#include <vanauth.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace {

namespace fs = std::filesystem;

using ScenarioPtr = std::unique_ptr<vanauth_scenario, decltype(&vanauth_scenario_free)>;
using ReportPtr = std::unique_ptr<vanauth_report, decltype(&vanauth_report_free)>;

int exit_code_of(vanauth_status st) {
    switch (st) {
        case VANAUTH_OK:
            return 0;
        case VANAUTH_ERR_CONFIG:
        case VANAUTH_ERR_CORRUPT_TRACE:
        case VANAUTH_ERR_BAD_ARGUMENT:
            return 2;
        case VANAUTH_ERR_INVARIANT:
            return 3;
        default:
            return 1;
    }
}

int fail(vanauth_status st, const std::string& doing) {
    std::cerr << "vanauth: " << doing << ": " << vanauth_last_error() << "\n";
    return exit_code_of(st);
}

struct OutFile {
    std::string name;
    const char* text;
};

// All files land under dir, written to temporaries first and renamed into
// place together, so a crashed or failed invocation leaves no half files.
int write_outputs(const std::string& dir, const std::vector<OutFile>& files) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        std::cerr << "vanauth: cannot create " << dir << ": " << ec.message() << "\n";
        return 1;
    }
    std::vector<std::pair<fs::path, fs::path>> pending;
    for (const OutFile& f : files) {
        const fs::path tmp = fs::path(dir) / (".tmp-" + f.name);
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << f.text;
        out.close();
        if (!out) {
            std::cerr << "vanauth: cannot write " << tmp.string() << "\n";
            for (const auto& p : pending) fs::remove(p.first, ec);
            fs::remove(tmp, ec);
            return 1;
        }
        pending.emplace_back(tmp, fs::path(dir) / f.name);
    }
    for (const auto& [tmp, final_path] : pending) {
        fs::rename(tmp, final_path, ec);
        if (ec) {
            std::cerr << "vanauth: cannot move " << tmp.string() << " into place: "
                      << ec.message() << "\n";
            return 1;
        }
    }
    return 0;
}

void print_report(const vanauth_report* rep, const std::string& format) {
    std::cout << (format == "structured" ? vanauth_report_json(rep)
                                         : vanauth_report_table(rep));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Highway node-authentication simulator"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir, trace_path;
    std::string format = "table";
    std::string variant;
    uint64_t seed = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_dir, "directory for result files");
        cmd->add_option("--format", format, "stdout form: table or structured")
            ->check(CLI::IsMember({"table", "structured"}));
    };

    CLI::App* cmd_run = app.add_subcommand("run", "simulate a scenario and record a trace");
    cmd_run->add_option("--scenario", scenario_path, "scenario file")->required();
    cmd_run->add_option("--seed", seed, "override the scenario seed")
        ->each([&](const std::string&) { seed_set = true; });
    cmd_run->add_option("--variant", variant, "identification variant: tree, flat, or both")
        ->check(CLI::IsMember({"tree", "flat", "both"}));
    add_common(cmd_run);

    CLI::App* cmd_replay = app.add_subcommand("replay", "recompute metrics from a trace file");
    cmd_replay->add_option("--trace", trace_path, "trace file (NDJSON)")->required();
    add_common(cmd_replay);

    std::vector<uint32_t> branching{4, 4, 4};
    uint32_t keyring_k = 6;
    uint32_t population = 500;
    uint64_t trials = 10000;
    uint64_t bench_seed = 1;
    CLI::App* cmd_keytree =
        app.add_subcommand("keytree", "measure a key pool without simulating a road");
    cmd_keytree->add_option("--branching", branching, "per-level branching factors");
    cmd_keytree->add_option("--k", keyring_k, "keys per vehicle");
    cmd_keytree->add_option("--population", population, "vehicles drawing key rings");
    cmd_keytree->add_option("--trials", trials, "identification runs and ring pairs");
    cmd_keytree->add_option("--seed", bench_seed, "measurement seed");
    add_common(cmd_keytree);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (app.got_subcommand(cmd_run)) {
        vanauth_scenario* raw_sc = nullptr;
        vanauth_status st = vanauth_scenario_load(scenario_path.c_str(), &raw_sc);
        if (st != VANAUTH_OK) return fail(st, "loading " + scenario_path);
        ScenarioPtr sc(raw_sc, &vanauth_scenario_free);
        if (seed_set) vanauth_scenario_set_seed(sc.get(), seed);
        if (!variant.empty()) {
            st = vanauth_scenario_set_variant(sc.get(), variant.c_str());
            if (st != VANAUTH_OK) return fail(st, "setting variant");
        }
        vanauth_report* raw_rep = nullptr;
        st = vanauth_run(sc.get(), &raw_rep);
        if (st != VANAUTH_OK) return fail(st, "running " + scenario_path);
        ReportPtr rep(raw_rep, &vanauth_report_free);
        if (!out_dir.empty()) {
            const int rc = write_outputs(out_dir, {
                {"trace.ndjson", vanauth_report_trace(rep.get())},
                {"metrics.json", vanauth_report_json(rep.get())},
                {"metrics.txt", vanauth_report_table(rep.get())},
            });
            if (rc) return rc;
        }
        print_report(rep.get(), format);
        return 0;
    }

    if (app.got_subcommand(cmd_replay)) {
        vanauth_report* raw_rep = nullptr;
        const vanauth_status st = vanauth_replay_file(trace_path.c_str(), &raw_rep);
        if (st != VANAUTH_OK) return fail(st, "replaying " + trace_path);
        ReportPtr rep(raw_rep, &vanauth_report_free);
        if (!out_dir.empty()) {
            const int rc = write_outputs(out_dir, {
                {"metrics.json", vanauth_report_json(rep.get())},
                {"metrics.txt", vanauth_report_table(rep.get())},
            });
            if (rc) return rc;
        }
        print_report(rep.get(), format);
        return 0;
    }

    vanauth_report* raw_rep = nullptr;
    const vanauth_status st =
        vanauth_keytree_bench(branching.data(), branching.size(), keyring_k, population,
                              trials, bench_seed, &raw_rep);
    if (st != VANAUTH_OK) return fail(st, "measuring the key pool");
    ReportPtr rep(raw_rep, &vanauth_report_free);
    if (!out_dir.empty()) {
        const int rc = write_outputs(out_dir, {
            {"keytree.json", vanauth_report_json(rep.get())},
            {"keytree.txt", vanauth_report_table(rep.get())},
        });
        if (rc) return rc;
    }
    print_report(rep.get(), format);
    return 0;
}
