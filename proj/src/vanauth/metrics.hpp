#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trace.hpp"

namespace vanauth {

struct ProtoStats {
    uint64_t accepted = 0;
    std::map<std::string, uint64_t> rejected;

    uint64_t rejected_total() const {
        uint64_t n = 0;
        for (const auto& kv : rejected) n += kv.second;
        return n;
    }
    uint64_t runs() const { return accepted + rejected_total(); }
};

struct TrialStats {
    uint64_t runs = 0;
    uint64_t total = 0;
    uint64_t max = 0;

    double mean() const { return runs ? double(total) / double(runs) : 0.0; }
};

struct MetricsReport {
    ProtoStats i2v, v2i, intra, inter;

    TrialStats tree, flat;
    std::map<uint64_t, uint64_t> anonymity;  // set size -> occurrences

    uint64_t sent = 0;
    std::map<std::string, uint64_t> sent_by_kind;
    uint64_t intended = 0, accepted = 0, rejected = 0, dropped = 0, forwarded = 0;
    std::map<std::string, uint64_t> reject_causes, drop_causes;

    uint64_t tampered = 0, tampered_rejected = 0, tampered_accepted = 0;

    uint64_t groups_formed = 0, joins = 0, leaves = 0, handovers = 0, rekeys = 0,
             dissolves = 0;

    uint64_t disseminations = 0, relay_tx = 0, flood_tx = 0, relay_exceeded = 0;

    uint64_t checks_run = 0, checks_failed = 0;
    std::map<std::string, uint64_t> checks_by_name;

    uint64_t anonymity_min() const;
    uint64_t anonymity_max() const;
    double anonymity_mean() const;
};

// One pass over trace event records. The simulator feeds it live and the
// replayer feeds it from a parsed file, so both produce the same report
// from the same records by construction.
class MetricsFold {
  public:
    void add(const Record& rec);
    const MetricsReport& report() const { return report_; }

  private:
    MetricsReport report_;
};

MetricsReport fold_metrics(const std::vector<Record>& events);

Record metrics_to_json(const MetricsReport& m);
std::string metrics_to_table(const MetricsReport& m);

bool operator==(const MetricsReport& a, const MetricsReport& b);

}  // namespace vanauth
