#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

namespace vanauth {

// Simulation time in milliseconds. Integer time keeps traces bit-exact.
using SimTimeMs = uint64_t;

using VehicleId = uint32_t;
using GroupId = uint64_t;

inline std::string vehicle_name(VehicleId id) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "v%04u", id);
    return buf;
}

inline std::string group_name(GroupId id) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "g%04llu", static_cast<unsigned long long>(id));
    return buf;
}

}  // namespace vanauth
