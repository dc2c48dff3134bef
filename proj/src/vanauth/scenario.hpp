#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "types.hpp"

namespace vanauth {

struct SpeedClassSpec {
    std::string name;
    double min_mps = 0;
    double max_mps = 0;
    double cell_length_m = 0;
};

// Parsed and validated run configuration. The digest of the raw text goes
// into the trace header so replays can be matched to their scenario.
struct Scenario {
    std::string road_id = "A1";
    double road_length_m = 0;
    uint32_t lanes = 1;

    std::vector<SpeedClassSpec> classes;

    uint32_t vehicle_count = 0;
    std::vector<double> class_mix;  // fractions per class, sums to 1
    uint32_t keyring_k = 0;

    std::vector<uint32_t> branching;

    double radio_range_m = 0;
    double tamper_rate = 0;

    std::vector<double> rsu_positions;

    // traffic generation (means of exponential inter-event times)
    double v2i_mean_s = 30;
    double intra_mean_s = 10;
    double inter_mean_s = 45;
    double i2v_period_s = 5;
    double stop_mean_s = 120;
    double go_mean_s = 15;
    bool encrypt_intra = false;
    std::string intra_profile = "Forward collision warning";
    std::string inter_profile = "Cooperative driving";

    double duration_s = 0;
    uint64_t tick_ms = 100;
    uint64_t seed = 1;
    std::string variant = "tree";  // tree | flat | both

    // test hook: corrupt a named invariant mid-run so the checker trips
    std::string break_invariant;

    std::string digest_hex;
};

// Parses the key = value / [section] format described in the README.
// Throws ConfigError on syntax errors, unknown keys, or invalid values.
Scenario parse_scenario(const std::string& text);

// Reads and parses a scenario file. Throws ConfigError when unreadable.
Scenario load_scenario_file(const std::string& path);

}  // namespace vanauth
