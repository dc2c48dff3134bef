#include "metrics.hpp"

#include <cstdio>

#include "error.hpp"

namespace vanauth {
namespace {

uint64_t u64_of(const Record& rec, const char* key) { return rec.value(key, 0ull); }

void add_causes(const Record& rec, const char* key, std::map<std::string, uint64_t>& into) {
    if (!rec.contains(key)) return;
    for (const auto& kv : rec[key].items()) into[kv.key()] += kv.value().get<uint64_t>();
}

Record causes_json(const std::map<std::string, uint64_t>& causes) {
    Record out = Record::object();
    for (const auto& kv : causes) out[kv.first] = kv.second;
    return out;
}

Record proto_json(const ProtoStats& p) {
    Record out;
    out["runs"] = p.runs();
    out["accepted"] = p.accepted;
    out["rejected"] = p.rejected_total();
    out["reject_causes"] = causes_json(p.rejected);
    return out;
}

Record trials_json(const TrialStats& t) {
    Record out;
    out["runs"] = t.runs;
    out["total"] = t.total;
    out["max"] = t.max;
    out["mean"] = t.mean();
    return out;
}

}  // namespace

uint64_t MetricsReport::anonymity_min() const {
    return anonymity.empty() ? 0 : anonymity.begin()->first;
}

uint64_t MetricsReport::anonymity_max() const {
    return anonymity.empty() ? 0 : anonymity.rbegin()->first;
}

double MetricsReport::anonymity_mean() const {
    uint64_t n = 0, sum = 0;
    for (const auto& kv : anonymity) {
        n += kv.second;
        sum += kv.first * kv.second;
    }
    return n ? double(sum) / double(n) : 0.0;
}

void MetricsFold::add(const Record& rec) {
    MetricsReport& m = report_;
    std::string kind = rec.value("rec", "");

    if (kind == "send") {
        ++m.sent;
        ++m.sent_by_kind[rec.value("env", "?")];
        return;
    }

    if (kind == "dlv") {
        uint64_t acc = u64_of(rec, "acc"), rej = u64_of(rec, "rej");
        uint64_t drop = u64_of(rec, "drop"), fwd = u64_of(rec, "fwd");
        m.intended += u64_of(rec, "n");
        m.accepted += acc;
        m.rejected += rej;
        m.dropped += drop;
        m.forwarded += fwd;
        add_causes(rec, "rej_causes", m.reject_causes);
        add_causes(rec, "drop_causes", m.drop_causes);
        if (rec.contains("tam")) {
            const Record& tam = rec["tam"];
            m.tampered += u64_of(tam, "n");
            m.tampered_rejected += u64_of(tam, "rej");
            m.tampered_accepted += u64_of(tam, "acc");
        }
        std::string env = rec.value("env", "");
        ProtoStats* proto = nullptr;
        if (env == "I2V-BCAST") proto = &m.i2v;
        if (env == "INTRA") proto = &m.intra;
        if (proto) {
            proto->accepted += acc;
            if (rej) add_causes(rec, "rej_causes", proto->rejected);
        }
        return;
    }

    if (kind == "auth") {
        std::string proto_name = rec.value("proto", "");
        ProtoStats* proto = nullptr;
        if (proto_name == "v2i") proto = &m.v2i;
        if (proto_name == "inter") proto = &m.inter;
        if (!proto) return;
        if (rec.value("ok", false)) {
            ++proto->accepted;
        } else {
            ++proto->rejected[rec.value("cause", "unknown")];
        }
        if (rec.contains("trials_tree")) {
            uint64_t t = u64_of(rec, "trials_tree");
            ++m.tree.runs;
            m.tree.total += t;
            if (t > m.tree.max) m.tree.max = t;
        }
        if (rec.contains("trials_flat")) {
            uint64_t t = u64_of(rec, "trials_flat");
            ++m.flat.runs;
            m.flat.total += t;
            if (t > m.flat.max) m.flat.max = t;
        }
        if (rec.contains("anon")) ++m.anonymity[u64_of(rec, "anon")];
        return;
    }

    if (kind == "grp") {
        std::string op = rec.value("op", "");
        if (op == "found") ++m.groups_formed;
        if (op == "join") ++m.joins;
        if (op == "leave") ++m.leaves;
        if (op == "handover") {
            ++m.handovers;
            ++m.rekeys;
        }
        if (op == "rekey") ++m.rekeys;
        if (op == "dissolve") ++m.dissolves;
        return;
    }

    if (kind == "dsm") {
        ++m.disseminations;
        uint64_t relay = u64_of(rec, "relay_tx"), flood = u64_of(rec, "flood_tx");
        m.relay_tx += relay;
        m.flood_tx += flood;
        if (relay > flood) ++m.relay_exceeded;
        return;
    }

    if (kind == "check") {
        ++m.checks_run;
        ++m.checks_by_name[rec.value("name", "?")];
        if (!rec.value("ok", false)) ++m.checks_failed;
        return;
    }
}

MetricsReport fold_metrics(const std::vector<Record>& events) {
    MetricsFold fold;
    for (const Record& rec : events) fold.add(rec);
    return fold.report();
}

Record metrics_to_json(const MetricsReport& m) {
    Record out;
    Record protocols;
    protocols["i2v"] = proto_json(m.i2v);
    protocols["v2i"] = proto_json(m.v2i);
    protocols["intra"] = proto_json(m.intra);
    protocols["inter"] = proto_json(m.inter);
    out["protocols"] = protocols;

    Record search;
    search["tree"] = trials_json(m.tree);
    search["flat"] = trials_json(m.flat);
    out["search"] = search;

    Record anon;
    anon["min"] = m.anonymity_min();
    anon["max"] = m.anonymity_max();
    anon["mean"] = m.anonymity_mean();
    Record hist = Record::object();
    for (const auto& kv : m.anonymity) hist[std::to_string(kv.first)] = kv.second;
    anon["hist"] = hist;
    out["anonymity"] = anon;

    Record env;
    env["sent"] = m.sent;
    Record by_kind = Record::object();
    for (const auto& kv : m.sent_by_kind) by_kind[kv.first] = kv.second;
    env["by_kind"] = by_kind;
    env["intended"] = m.intended;
    env["accepted"] = m.accepted;
    env["rejected"] = m.rejected;
    env["dropped"] = m.dropped;
    env["forwarded"] = m.forwarded;
    env["reject_causes"] = causes_json(m.reject_causes);
    env["drop_causes"] = causes_json(m.drop_causes);
    out["envelopes"] = env;

    Record tam;
    tam["copies"] = m.tampered;
    tam["rejected"] = m.tampered_rejected;
    tam["accepted"] = m.tampered_accepted;
    out["tamper"] = tam;

    Record grp;
    grp["formed"] = m.groups_formed;
    grp["joins"] = m.joins;
    grp["leaves"] = m.leaves;
    grp["handovers"] = m.handovers;
    grp["rekeys"] = m.rekeys;
    grp["dissolves"] = m.dissolves;
    out["groups"] = grp;

    Record dsm;
    dsm["events"] = m.disseminations;
    dsm["relay_tx"] = m.relay_tx;
    dsm["flood_tx"] = m.flood_tx;
    dsm["mean_ratio"] = m.flood_tx ? double(m.relay_tx) / double(m.flood_tx) : 0.0;
    dsm["relay_exceeded_flood"] = m.relay_exceeded;
    out["dissemination"] = dsm;

    Record checks;
    checks["run"] = m.checks_run;
    checks["failed"] = m.checks_failed;
    checks["by_name"] = causes_json(m.checks_by_name);
    out["checks"] = checks;
    return out;
}

std::string metrics_to_table(const MetricsReport& m) {
    std::string out;
    char buf[256];
    auto row = [&](const char* fmt, auto... args) {
        std::snprintf(buf, sizeof(buf), fmt, args...);
        out += buf;
        out += '\n';
    };

    row("%-12s %10s %10s %10s", "protocol", "runs", "accepted", "rejected");
    auto proto_row = [&](const char* name, const ProtoStats& p) {
        row("%-12s %10llu %10llu %10llu", name, (unsigned long long)p.runs(),
            (unsigned long long)p.accepted, (unsigned long long)p.rejected_total());
    };
    proto_row("i2v", m.i2v);
    proto_row("v2i", m.v2i);
    proto_row("intra", m.intra);
    proto_row("inter", m.inter);
    out += '\n';

    row("%-12s %10s %10s %10s %10s", "search", "runs", "trials", "max", "mean");
    auto trial_row = [&](const char* name, const TrialStats& t) {
        row("%-12s %10llu %10llu %10llu %10.2f", name, (unsigned long long)t.runs,
            (unsigned long long)t.total, (unsigned long long)t.max, t.mean());
    };
    trial_row("tree", m.tree);
    trial_row("flat", m.flat);
    out += '\n';

    row("%-24s %10llu", "anonymity min", (unsigned long long)m.anonymity_min());
    row("%-24s %10llu", "anonymity max", (unsigned long long)m.anonymity_max());
    row("%-24s %10.2f", "anonymity mean", m.anonymity_mean());
    out += '\n';

    row("%-24s %10llu", "envelopes sent", (unsigned long long)m.sent);
    for (const auto& kv : m.sent_by_kind)
        row("  %-22s %10llu", kv.first.c_str(), (unsigned long long)kv.second);
    row("%-24s %10llu", "copies intended", (unsigned long long)m.intended);
    row("%-24s %10llu", "copies accepted", (unsigned long long)m.accepted);
    row("%-24s %10llu", "copies rejected", (unsigned long long)m.rejected);
    row("%-24s %10llu", "copies dropped", (unsigned long long)m.dropped);
    row("%-24s %10llu", "copies forwarded", (unsigned long long)m.forwarded);
    for (const auto& kv : m.reject_causes)
        row("  rej %-18s %10llu", kv.first.c_str(), (unsigned long long)kv.second);
    for (const auto& kv : m.drop_causes)
        row("  drop %-17s %10llu", kv.first.c_str(), (unsigned long long)kv.second);
    out += '\n';

    row("%-24s %10llu", "tampered copies", (unsigned long long)m.tampered);
    row("%-24s %10llu", "tampered rejected", (unsigned long long)m.tampered_rejected);
    row("%-24s %10llu", "tampered accepted", (unsigned long long)m.tampered_accepted);
    out += '\n';

    row("%-24s %10llu", "groups formed", (unsigned long long)m.groups_formed);
    row("%-24s %10llu", "joins", (unsigned long long)m.joins);
    row("%-24s %10llu", "leaves", (unsigned long long)m.leaves);
    row("%-24s %10llu", "handovers", (unsigned long long)m.handovers);
    row("%-24s %10llu", "rekeys", (unsigned long long)m.rekeys);
    row("%-24s %10llu", "dissolves", (unsigned long long)m.dissolves);
    out += '\n';

    row("%-24s %10llu", "disseminations", (unsigned long long)m.disseminations);
    row("%-24s %10llu", "relay transmissions", (unsigned long long)m.relay_tx);
    row("%-24s %10llu", "flood transmissions", (unsigned long long)m.flood_tx);
    row("%-24s %10llu", "relay exceeded flood", (unsigned long long)m.relay_exceeded);
    out += '\n';

    row("%-24s %10llu", "invariant checks", (unsigned long long)m.checks_run);
    for (const auto& kv : m.checks_by_name)
        row("  %-22s %10llu", kv.first.c_str(), (unsigned long long)kv.second);
    row("%-24s %10llu", "invariant failures", (unsigned long long)m.checks_failed);
    return out;
}

bool operator==(const MetricsReport& a, const MetricsReport& b) {
    return metrics_to_json(a) == metrics_to_json(b);
}

}  // namespace vanauth
