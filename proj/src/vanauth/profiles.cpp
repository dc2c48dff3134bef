#include "profiles.hpp"

#include <algorithm>

#include "error.hpp"

namespace vanauth {

const char* comm_name(CommType c) {
    switch (c) {
        case CommType::V2V: return "V2V";
        case CommType::V2I: return "V2I";
        case CommType::I2V: return "I2V";
    }
    return "?";
}

const char* mechanism_name(Mechanism m) {
    switch (m) {
        case Mechanism::IdentitySignature: return "identity-signature";
        case Mechanism::KeyTreeHandshake: return "keytree-handshake";
        case Mechanism::GroupMac: return "group-mac";
        case Mechanism::GroupSignature: return "group-signature";
    }
    return "?";
}

const std::vector<ApplicationProfile>& default_profiles() {
    static const std::vector<ApplicationProfile> profiles = [] {
        std::vector<ApplicationProfile> v;
        v.push_back({"Intersection collision warning",
                     {CommType::V2V},
                     false,
                     true,
                     true,
                     true,
                     false});
        v.push_back({"Emergency vehicle signal",
                     {CommType::V2I, CommType::I2V},
                     true,
                     true,
                     true,
                     false,
                     false});
        v.push_back({"Work zone warning",
                     {CommType::V2I, CommType::I2V},
                     true,
                     true,
                     true,
                     false,
                     false});
        v.push_back({"Forward collision warning",
                     {CommType::V2V},
                     true,
                     true,
                     true,
                     true,
                     false});
        v.push_back({"Cooperative driving", {CommType::V2V}, true, true, true, true, false});
        return v;
    }();
    return profiles;
}

const ApplicationProfile* find_profile(std::string_view name) {
    for (const auto& p : default_profiles()) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

Mechanism select_mechanism(const ApplicationProfile& profile, CommType comm, Reach reach) {
    const bool supported =
        std::find(profile.comm_types.begin(), profile.comm_types.end(), comm) !=
        profile.comm_types.end();
    if (!supported) {
        raise(Errc::UnsupportedComm,
              profile.name + " does not communicate over " + comm_name(comm));
    }
    switch (comm) {
        case CommType::I2V: return Mechanism::IdentitySignature;
        case CommType::V2I: return Mechanism::KeyTreeHandshake;
        case CommType::V2V:
            return reach == Reach::SameGroup ? Mechanism::GroupMac : Mechanism::GroupSignature;
    }
    raise(Errc::Internal, "unreachable");
}

}  // namespace vanauth
