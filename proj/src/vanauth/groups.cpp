#include "groups.hpp"

#include <algorithm>
#include <cctype>

#include "error.hpp"

namespace vanauth::groups {

Cell cell_of(const RoadGeometry& road, double position_m, uint32_t speed_class) {
    if (speed_class >= road.cell_length_m.size()) raise(Errc::BadParams, "unknown speed class");
    const double cell_length = road.cell_length_m[speed_class];
    if (cell_length <= 0) raise(Errc::BadParams, "cell length must be positive");
    if (position_m < 0 || position_m > road.length_m) {
        raise(Errc::OffRoad, "position outside the road extent");
    }
    Cell cell;
    cell.road_id = road.id;
    cell.index = static_cast<uint64_t>(position_m / cell_length);
    cell.speed_class = speed_class;
    return cell;
}

VehicleId elect_leader(const Group& group, SimTimeMs now) {
    if (group.members.empty()) raise(Errc::EmptyGroup, "no members to lead");
    VehicleId best = 0;
    SimTimeMs best_tenure = 0;
    bool first = true;
    for (const auto& [id, rec] : group.members) {
        const SimTimeMs tenure = now >= rec.join_time ? now - rec.join_time : 0;
        if (first || tenure > best_tenure) {
            best = id;
            best_tenure = tenure;
            first = false;
        }
    }
    return best;
}

namespace {

struct JoinClaim {
    VehicleId vehicle = 0;
    Cell cell;
    SimTimeMs time = 0;
};

Bytes encode_join_claim(const JoinClaim& claim) {
    Bytes b = to_bytes("JOIN|");
    append(b, to_bytes(vehicle_name(claim.vehicle)));
    b.push_back('|');
    append(b, to_bytes(claim.cell.road_id));
    b.push_back('|');
    append_u64le(b, claim.cell.index);
    b.push_back(static_cast<uint8_t>(claim.cell.speed_class));
    append_u64le(b, claim.time);
    return b;
}

bool decode_join_claim(const Bytes& payload, JoinClaim& out) {
    const std::string s = to_string(payload);
    if (s.rfind("JOIN|", 0) != 0) return false;
    const size_t id_end = s.find('|', 5);
    if (id_end == std::string::npos) return false;
    const std::string id_str = s.substr(5, id_end - 5);
    if (id_str.size() < 2 || id_str[0] != 'v') return false;
    for (size_t i = 1; i < id_str.size(); ++i) {
        if (!isdigit(static_cast<unsigned char>(id_str[i]))) return false;
    }
    const size_t road_end = s.find('|', id_end + 1);
    if (road_end == std::string::npos) return false;
    if (payload.size() != road_end + 1 + 8 + 1 + 8) return false;

    out.vehicle = static_cast<VehicleId>(std::stoul(id_str.substr(1)));
    out.cell.road_id = s.substr(id_end + 1, road_end - id_end - 1);
    const uint8_t* p = payload.data() + road_end + 1;
    out.cell.index = read_u64le(p);
    out.cell.speed_class = p[8];
    out.time = read_u64le(p + 9);
    return true;
}

}  // namespace

Envelope make_join_request(crypto::Provider& provider, VehicleId vehicle,
                           uint64_t vehicle_private_handle, const Cell& cell, SimTimeMs now,
                           uint64_t msg_id) {
    JoinClaim claim{vehicle, cell, now};
    Envelope env;
    env.msg_id = msg_id;
    env.kind = EnvelopeKind::JoinReq;
    env.sender_hint = vehicle_name(vehicle);
    env.timestamp = now;
    env.payload = encode_join_claim(claim);
    env.sig = provider.sign(vehicle_private_handle, env.payload);
    return env;
}

Envelope admit_member(crypto::Provider& provider, Group& group, const Envelope& join_request,
                      const std::map<VehicleId, uint64_t>& pk_directory, SimTimeMs now,
                      uint64_t msg_id) {
    if (join_request.kind != EnvelopeKind::JoinReq) {
        raise(Errc::BadParams, "not a join request");
    }
    JoinClaim claim;
    if (!decode_join_claim(join_request.payload, claim)) {
        raise(Errc::BadSignature, "malformed join claim");
    }
    const auto pk = pk_directory.find(claim.vehicle);
    if (pk == pk_directory.end()) raise(Errc::BadSignature, "vehicle identity not on record");
    if (!join_request.sig ||
        !provider.verify(pk->second, join_request.payload, *join_request.sig)) {
        raise(Errc::BadSignature, "join signature rejected");
    }
    if (join_request.sender_hint != vehicle_name(claim.vehicle)) {
        raise(Errc::BadSignature, "sender does not match the signed claim");
    }
    if (claim.cell != group.cell) raise(Errc::WrongCell, "join addressed to a different cell");
    if (group.members.count(claim.vehicle)) raise(Errc::BadParams, "already a member");

    MembershipRecord rec;
    rec.vehicle = claim.vehicle;
    rec.join_time = now;
    rec.credential = provider.group_issue(group.gsig.opener_secret, vehicle_name(claim.vehicle));
    group.members.emplace(claim.vehicle, std::move(rec));
    return make_key_delivery(provider, group, claim.vehicle, pk_directory, now, msg_id);
}

Envelope make_key_delivery(crypto::Provider& provider, const Group& group, VehicleId member,
                           const std::map<VehicleId, uint64_t>& pk_directory, SimTimeMs now,
                           uint64_t msg_id) {
    const auto rec = group.members.find(member);
    if (rec == group.members.end()) raise(Errc::NotMember, "no such member");
    const auto pk = pk_directory.find(member);
    if (pk == pk_directory.end()) raise(Errc::BadParams, "no public key on record");

    Bytes blob;
    append(blob, group.group_key.bytes);
    append_u64le(blob, group.epoch);
    append_u64le(blob, group.gsig.group_public);
    append_u64le(blob, rec->second.credential.member_private);

    Envelope env;
    env.msg_id = msg_id;
    env.kind = EnvelopeKind::KeyDelivery;
    env.sender_hint = vehicle_name(group.leader);
    env.to = vehicle_name(member);
    env.timestamp = now;
    env.group = group.id;
    env.epoch = group.epoch;
    env.cipher = provider.pk_encrypt(pk->second, blob);
    return env;
}

KeyDeliveryContents open_key_delivery(crypto::Provider& provider, uint64_t vehicle_private_handle,
                                      const Envelope& delivery) {
    if (delivery.kind != EnvelopeKind::KeyDelivery || !delivery.cipher) {
        raise(Errc::BadParams, "not a key delivery");
    }
    const Bytes blob = provider.pk_decrypt(vehicle_private_handle, *delivery.cipher);
    if (blob.size() != 16 + 8 + 8 + 8) raise(Errc::BadParams, "malformed key delivery");

    KeyDeliveryContents out;
    std::copy(blob.begin(), blob.begin() + 16, out.group_key.begin());
    out.epoch = read_u64le(blob.data() + 16);
    out.group_public = read_u64le(blob.data() + 24);
    out.member_private = read_u64le(blob.data() + 32);
    return out;
}

void remove_member(Group& group, VehicleId vehicle) {
    if (group.members.erase(vehicle) == 0) raise(Errc::NotMember, "no such member");
}

void handover_and_rekey(crypto::Provider& provider, Group& group, SimTimeMs now) {
    group.leader = elect_leader(group, now);
    group.epoch += 1;
    group.group_key = provider.gen_sym_key();
    group.gsig = provider.group_setup();
    for (auto& [id, rec] : group.members) {
        rec.credential = provider.group_issue(group.gsig.opener_secret, vehicle_name(id));
        rec.has_group_key = (id == group.leader);
    }
}

Group& GroupManager::found_group(const Cell& cell, VehicleId founder, SimTimeMs now) {
    if (by_cell_.count(cell)) raise(Errc::BadParams, "cell already has a group");
    Group g;
    g.id = next_id_++;
    g.cell = cell;
    g.epoch = 1;
    g.leader = founder;
    g.group_key = provider_.gen_sym_key();
    g.gsig = provider_.group_setup();

    MembershipRecord rec;
    rec.vehicle = founder;
    rec.join_time = now;
    rec.credential = provider_.group_issue(g.gsig.opener_secret, vehicle_name(founder));
    rec.has_group_key = true;
    g.members.emplace(founder, std::move(rec));

    const GroupId id = g.id;
    auto [it, inserted] = groups_.emplace(id, std::move(g));
    by_cell_[cell] = id;
    directory_[id] = it->second.gsig.group_public;
    return it->second;
}

Group* GroupManager::find_by_cell(const Cell& cell) {
    const auto it = by_cell_.find(cell);
    return it == by_cell_.end() ? nullptr : find(it->second);
}

Group* GroupManager::find(GroupId id) {
    const auto it = groups_.find(id);
    return it == groups_.end() ? nullptr : &it->second;
}

const Group* GroupManager::find(GroupId id) const {
    const auto it = groups_.find(id);
    return it == groups_.end() ? nullptr : &it->second;
}

void GroupManager::dissolve(GroupId id) {
    const auto it = groups_.find(id);
    if (it == groups_.end()) raise(Errc::UnknownGroup, "no such group");
    if (!it->second.members.empty()) raise(Errc::BadParams, "group still has members");
    by_cell_.erase(it->second.cell);
    directory_.erase(id);
    groups_.erase(it);
}

void GroupManager::rekey(Group& group, SimTimeMs now) {
    handover_and_rekey(provider_, group, now);
    directory_[group.id] = group.gsig.group_public;
}

}  // namespace vanauth::groups
