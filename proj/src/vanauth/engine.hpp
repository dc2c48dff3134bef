#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "metrics.hpp"
#include "scenario.hpp"

namespace vanauth {

struct RunResult {
    std::string trace;
    MetricsReport metrics;
};

// Runs the scenario to completion and returns the full event trace plus the
// metrics folded from it. Throws InvariantViolation when a per-step check
// fails (the debug hook exists to exercise exactly that path).
RunResult run_simulation(const Scenario& sc);

// Transmission count of naive flooding over the given node positions
// starting at `origin`: every node the broadcast reaches rebroadcasts
// exactly once, so the count is the size of origin's radio-connected
// component. An unreachable rest of the set costs nothing.
uint64_t flooding_baseline(const std::vector<double>& positions_m, size_t origin,
                           double range_m);

// Greedy relay chain from origin to target: each hop goes to the in-range
// node strictly closer to the target (closest first, smallest index on
// ties). Returns the node sequence including both ends, empty when stuck.
std::vector<size_t> relay_path(const std::vector<double>& positions_m, size_t origin,
                               size_t target, double range_m);

}  // namespace vanauth
