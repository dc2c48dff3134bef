#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trace.hpp"

namespace vanauth {

struct BenchParams {
    std::vector<uint32_t> branching;
    uint32_t k = 0;
    uint32_t population = 0;
    uint64_t trials = 0;
    uint64_t seed = 1;
};

// Offline key-tree study, no radio involved: identification cost of the
// tree walk versus the structureless scan on the same requests, the
// anonymity-set histogram over a ring population, and the flat-pool
// collision probability, exact versus sampled ring pairs.
Record keytree_bench(const BenchParams& p);

std::string bench_to_table(const Record& report);

}  // namespace vanauth
