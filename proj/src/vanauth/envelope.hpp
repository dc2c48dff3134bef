#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crypto.hpp"
#include "keytree.hpp"
#include "types.hpp"

namespace vanauth {

enum class EnvelopeKind {
    I2VBcast,
    V2IReq,
    V2IChal,
    V2IResp,
    Intra,
    Inter,
    JoinReq,
    KeyDelivery,
};

// Wire names, also used in the event trace.
const char* kind_name(EnvelopeKind k);
std::optional<EnvelopeKind> kind_from_name(std::string_view name);

// One over-the-air message. Exactly one auth member is set, matching the
// kind: sig for I2V-BCAST (identity-based), JOIN-REQ (plain public-key) and
// INTER (group signature); mac for INTRA; auth_request for V2I-REQ; cipher
// for V2I-CHAL, V2I-RESP and KEY-DELIVERY.
//
// sender_hint names the sender where the flow is not anonymous (vehicle id,
// roadside unit identity, group id). INTER envelopes carry the group id
// only; V2I envelopes after the request ride a reply link (origin_msg_id)
// instead of naming the anonymous requester.
struct Envelope {
    uint64_t msg_id = 0;
    EnvelopeKind kind = EnvelopeKind::Intra;
    std::string sender_hint;
    std::string to;  // unicast target; empty = broadcast
    SimTimeMs timestamp = 0;
    GroupId group = 0;  // group-bound kinds
    uint64_t epoch = 0;
    uint64_t origin_msg_id = 0;  // reply/rebroadcast link
    std::vector<std::string> hop_path;
    Bytes payload;

    std::optional<crypto::Signature> sig;
    std::optional<crypto::MacTag> mac;
    std::optional<keytree::AuthRequest> auth_request;
    std::optional<crypto::Ciphertext> cipher;
};

// Canonical single-line JSON with fixed field order; the trace embeds this
// form's digest and the privacy checks scan its bytes.
std::string serialize(const Envelope& env);

uint64_t envelope_digest(const Envelope& env);

}  // namespace vanauth
