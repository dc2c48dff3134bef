#pragma once

#include <compare>
#include <map>
#include <string>
#include <vector>

#include "crypto.hpp"
#include "envelope.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace vanauth::groups {

// A dynamic road segment. Vehicles in the same cell of the same speed class
// form one group; cell length is chosen per speed class, so faster traffic
// gets longer cells and keeps its group along the trajectory.
struct Cell {
    std::string road_id;
    uint64_t index = 0;
    uint32_t speed_class = 0;

    auto operator<=>(const Cell&) const = default;
};

struct RoadGeometry {
    std::string id;
    double length_m = 0;
    std::vector<double> cell_length_m;  // indexed by speed class
};

// Floor division of position by the class's cell length. Boundary positions
// belong to the higher-index cell (closed start); position == road length is
// accepted as the closed end. Throws OffRoad outside [0, length].
Cell cell_of(const RoadGeometry& road, double position_m, uint32_t speed_class);

struct MembershipRecord {
    VehicleId vehicle = 0;
    SimTimeMs join_time = 0;
    crypto::GroupCredential credential;
    // True once the current epoch's KEY-DELIVERY actually reached the member.
    bool has_group_key = false;
};

struct Group {
    GroupId id = 0;
    Cell cell;
    uint64_t epoch = 0;
    VehicleId leader = 0;
    std::map<VehicleId, MembershipRecord> members;
    crypto::SymmetricKey group_key;
    crypto::GroupKeys gsig;  // opener secret held by the current leader
};

// Longest tenure wins (earliest join_time); ties break to the smallest
// vehicle id. Throws EmptyGroup.
VehicleId elect_leader(const Group& group, SimTimeMs now);

// --- join handshake (exactly two messages) -------------------------------

// Message 1: the joining vehicle authenticates itself with a plain
// public-key signature over its id, the target cell and the timestamp.
Envelope make_join_request(crypto::Provider& provider, VehicleId vehicle,
                           uint64_t vehicle_private_handle, const Cell& cell, SimTimeMs now,
                           uint64_t msg_id);

// Message 2: the leader verifies the request against the vehicle's public
// key from the certification directory, records the member and returns the
// key delivery: group key, epoch, group public handle and the freshly issued
// membership credential, all encrypted under the new member's public key.
// Throws BadSignature (membership unchanged) and WrongCell.
Envelope admit_member(crypto::Provider& provider, Group& group, const Envelope& join_request,
                      const std::map<VehicleId, uint64_t>& pk_directory, SimTimeMs now,
                      uint64_t msg_id);

// Re-delivery of the current epoch's key material to one existing member,
// used after a rekey. Same wire shape as message 2.
Envelope make_key_delivery(crypto::Provider& provider, const Group& group, VehicleId member,
                           const std::map<VehicleId, uint64_t>& pk_directory, SimTimeMs now,
                           uint64_t msg_id);

struct KeyDeliveryContents {
    Block group_key{};
    uint64_t epoch = 0;
    uint64_t group_public = 0;
    uint64_t member_private = 0;
};

// Member side of message 2. Throws WrongKey for a delivery addressed to
// someone else, BadParams for a malformed plaintext.
KeyDeliveryContents open_key_delivery(crypto::Provider& provider, uint64_t vehicle_private_handle,
                                      const Envelope& delivery);

// Removes a member. Throws NotMember. The caller owns the follow-up policy:
// a departure always triggers handover_and_rekey on the surviving group, and
// a group whose last member left is dissolved by its manager.
void remove_member(Group& group, VehicleId vehicle);

// Re-elects the leader, bumps the epoch, draws a fresh group key and group
// signature keys, and issues fresh credentials. Every member except the new
// leader is marked keyless until a KEY-DELIVERY reaches it. Membership is
// unchanged.
void handover_and_rekey(crypto::Provider& provider, Group& group, SimTimeMs now);

// Owns the live groups, the cell -> group index and the global directory
// mapping group id -> current group public handle (the stand-in that lets
// foreign groups verify each other's signatures).
class GroupManager {
public:
    explicit GroupManager(crypto::Provider& provider) : provider_(provider) {}

    // Creates the cell's group with the founder as leader and sole member;
    // costs no messages. The founder issues itself a credential.
    Group& found_group(const Cell& cell, VehicleId founder, SimTimeMs now);

    Group* find_by_cell(const Cell& cell);
    Group* find(GroupId id);
    const Group* find(GroupId id) const;

    // Removes an emptied group and its directory entry.
    void dissolve(GroupId id);

    // Runs handover_and_rekey and republishes the directory entry.
    void rekey(Group& group, SimTimeMs now);

    const std::map<GroupId, uint64_t>& directory() const { return directory_; }
    const std::map<GroupId, Group>& all() const { return groups_; }
    std::map<GroupId, Group>& all() { return groups_; }

private:
    crypto::Provider& provider_;
    GroupId next_id_ = 1;
    std::map<GroupId, Group> groups_;
    std::map<Cell, GroupId> by_cell_;
    std::map<GroupId, uint64_t> directory_;
};

}  // namespace vanauth::groups
