#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crypto.hpp"
#include "envelope.hpp"
#include "groups.hpp"
#include "keytree.hpp"
#include "profiles.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace vanauth::protocols {

// ---------------------------------------------------------------------------
// Infrastructure-to-vehicle: identity-based signature broadcast. No privacy
// is needed in this direction, so the unit signs under its public identity
// and any vehicle verifies against that identity string alone.

Envelope i2v_broadcast(crypto::Provider& provider, const std::string& rsu_identity,
                       uint64_t ibs_private_handle, const Bytes& msg, SimTimeMs now,
                       uint64_t msg_id);

bool i2v_accept(const crypto::Provider& provider, const Envelope& env);

// ---------------------------------------------------------------------------
// Vehicle-to-infrastructure: anonymous three-message key-tree handshake.
// The request names no keys; the unit identifies the path, wraps a secret in
// the identified keys, and accepts the session when the peeled secret comes
// back under the session key.

enum class SearchVariant { Tree, Flat, Both };

// Message 1. The sender stays anonymous: sender_hint is empty and replies
// ride the msg_id link.
Envelope v2i_request(crypto::Provider& provider, const keytree::PathChoice& path,
                     const std::string& rsu_name, uint64_t rsu_public_handle,
                     const crypto::SymmetricKey& session_key, SimTimeMs now, Rng& rng,
                     uint64_t msg_id);

// Unit-side state carried between challenge and response.
struct V2iChallengeState {
    Envelope challenge;  // message 2
    Block secret{};
    crypto::SymmetricKey session_key;
    keytree::Identification ident;       // the identification the flow used
    std::optional<uint32_t> tree_trials; // set for Tree and Both
    std::optional<uint32_t> flat_trials; // set for Flat and Both
};

// Opens the session envelope, identifies the path (per variant; Both runs
// the flat scan as well for the cost comparison) and builds message 2.
// Throws the identification errors (NoPathFound, StaleTimestamp), WrongKey
// family errors for a garbled session ciphertext, and BadParams when the
// decrypted session binding does not match the request timestamp.
V2iChallengeState v2i_challenge(crypto::Provider& provider, const keytree::KeyPoolTree& tree,
                                uint64_t rsu_private_handle, const Envelope& request,
                                SimTimeMs now, SearchVariant variant, Rng& rng, uint64_t msg_id);

// Message 3: peel the challenge, return the secret under the session key.
// Throws BadPadding when a layer fails to peel.
Envelope v2i_response(const keytree::PathChoice& path, const Envelope& challenge,
                      const crypto::SymmetricKey& session_key, Rng& rng, uint64_t msg_id);

// Unit-side verdict on message 3.
bool v2i_accept(const V2iChallengeState& state, const Envelope& response);

// Whole round run in-process (no radio, no loss). transcript holds every
// envelope produced before the round ended; a successful round is exactly
// {request, challenge, response}.
struct V2iRound {
    bool accepted = false;
    std::string cause;  // error name for failed rounds
    std::vector<Envelope> transcript;
    std::optional<keytree::Identification> ident;
    std::optional<uint32_t> tree_trials;
    std::optional<uint32_t> flat_trials;
    crypto::SymmetricKey session_key;  // meaningful when accepted
};

V2iRound v2i_authenticate(crypto::Provider& provider, const keytree::KeyPoolTree& tree,
                          const keytree::KeyRing& ring, const std::string& rsu_name,
                          const crypto::KeyPair& rsu_keys, SearchVariant variant, SimTimeMs now,
                          Rng& rng, uint64_t& next_msg_id);

// ---------------------------------------------------------------------------
// Intra-group: MAC under the shared group key, optional payload encryption
// under the same key for profiles that want confidentiality.

Envelope intra_send(crypto::Provider& provider, const groups::Group& group, VehicleId sender,
                    const Bytes& msg, bool encrypt_payload, SimTimeMs now, Rng& rng,
                    uint64_t msg_id);

struct RxVerdict {
    bool accepted = false;
    std::string cause;  // empty when accepted
    Bytes plaintext;    // decoded payload on accept
};

// Receiver-side check against the receiver's own group state. The caller
// guarantees the receiver holds the current group key.
RxVerdict intra_receive(crypto::Provider& provider, const groups::Group& receiver_group,
                        const Envelope& env, bool expect_encrypted);

// ---------------------------------------------------------------------------
// Inter-group: group signature under the sender's group, verified by foreign
// leaders against the global directory. The envelope names the group only.

Envelope inter_send(crypto::Provider& provider, const groups::Group& sender_group,
                    const crypto::GroupCredential& credential, const Bytes& msg, SimTimeMs now,
                    uint64_t msg_id);

// Leader-side verification via the directory. cause is "unknown-group" on a
// directory miss and "bad-signature" when the group signature fails.
RxVerdict inter_verify(const crypto::Provider& provider,
                       const std::map<GroupId, uint64_t>& directory, const Envelope& env);

// Opens the signature of an INTER envelope. Only the leader of the signing
// group can do this. Throws NotLeader for anyone else, BadParams when the
// envelope carries no group signature.
std::string dispute_open(const crypto::Provider& provider, const groups::Group& signer_group,
                         VehicleId opener, const Envelope& env);

}  // namespace vanauth::protocols
