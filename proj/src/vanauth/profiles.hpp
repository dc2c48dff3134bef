#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vanauth {

enum class CommType { V2V, V2I, I2V };

const char* comm_name(CommType c);

// Which of the four authentication services a flow uses.
enum class Mechanism {
    IdentitySignature,  // infrastructure-to-vehicle broadcast
    KeyTreeHandshake,   // anonymous vehicle-to-infrastructure
    GroupMac,           // within one group
    GroupSignature,     // across groups
};

const char* mechanism_name(Mechanism m);

// Safety-application requirement profile: which directions it talks in and
// what the messages demand.
struct ApplicationProfile {
    std::string name;
    std::vector<CommType> comm_types;
    bool multihop = false;
    bool needs_auth = true;
    bool needs_integrity = true;
    bool needs_privacy = false;
    bool needs_confidentiality = false;  // opt-in payload encryption for V2V
};

// The five built-in safety applications.
const std::vector<ApplicationProfile>& default_profiles();

// Lookup by exact name; nullptr when absent.
const ApplicationProfile* find_profile(std::string_view name);

// Whether a V2V exchange stays inside one group or crosses groups.
enum class Reach { SameGroup, CrossGroup };

// Maps (profile, direction) to the authentication service. Throws
// UnsupportedComm when the profile does not communicate in that direction.
Mechanism select_mechanism(const ApplicationProfile& profile, CommType comm,
                           Reach reach = Reach::SameGroup);

}  // namespace vanauth
