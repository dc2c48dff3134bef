#include "envelope.hpp"

#include <json.hpp>

namespace vanauth {

namespace {

constexpr const char* kNames[] = {
    "I2V-BCAST", "V2I-REQ", "V2I-CHAL", "V2I-RESP",
    "INTRA",     "INTER",   "JOIN-REQ", "KEY-DELIVERY",
};

}  // namespace

const char* kind_name(EnvelopeKind k) { return kNames[static_cast<int>(k)]; }

std::optional<EnvelopeKind> kind_from_name(std::string_view name) {
    for (int i = 0; i < 8; ++i) {
        if (name == kNames[i]) return static_cast<EnvelopeKind>(i);
    }
    return std::nullopt;
}

std::string serialize(const Envelope& env) {
    nlohmann::ordered_json j;
    j["id"] = env.msg_id;
    j["kind"] = kind_name(env.kind);
    j["from"] = env.sender_hint;
    if (!env.to.empty()) j["to"] = env.to;
    j["ts"] = env.timestamp;
    if (env.group != 0) j["grp"] = group_name(env.group);
    if (env.epoch != 0) j["epoch"] = env.epoch;
    if (env.origin_msg_id != 0) j["origin"] = env.origin_msg_id;
    if (!env.hop_path.empty()) j["hops"] = env.hop_path;
    j["payload"] = hex(env.payload);

    nlohmann::ordered_json auth;
    if (env.sig) {
        auth["scheme"] = crypto::scheme_name(env.sig->scheme);
        auth["sig"] = hex(env.sig->bytes);
    } else if (env.mac) {
        auth["scheme"] = crypto::scheme_name(crypto::Scheme::Mac);
        auth["tag"] = hex(env.mac->bytes);
    } else if (env.auth_request) {
        const auto& rq = *env.auth_request;
        auth["scheme"] = "KEYTREE";
        auth["enc_session"] = hex(rq.enc_session.bytes);
        auth["nonce"] = hex(rq.nonce);
        auth["rq_ts"] = rq.timestamp;
        auto tags = nlohmann::ordered_json::array();
        for (const auto& t : rq.level_tags) tags.push_back(hex(t.bytes));
        auth["tags"] = std::move(tags);
    } else if (env.cipher) {
        auth["scheme"] = crypto::scheme_name(env.cipher->scheme);
        auth["ct"] = hex(env.cipher->bytes);
    }
    j["auth"] = std::move(auth);
    return j.dump();
}

uint64_t envelope_digest(const Envelope& env) { return fnv1a64(serialize(env)); }

}  // namespace vanauth
