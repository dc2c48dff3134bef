#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "crypto.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace vanauth::keytree {

// A request or challenge is fresh if its timestamp is within this window of
// the verifier's clock, either direction.
inline constexpr SimTimeMs kFreshnessWindowMs = 2000;

inline constexpr uint64_t kNoLeaf = UINT64_MAX;

// Complete key tree held by the authority and every roadside unit.  Each edge
// carries one symmetric key; a node at level i (1-based) owns the key of the
// edge above it.  The pool size is the total edge count
//   n = sum over i of (b_1 * ... * b_i).
class KeyPoolTree {
public:
    static KeyPoolTree build(const std::vector<uint32_t>& branching, uint64_t seed);

    uint32_t depth() const { return static_cast<uint32_t>(branching_.size()); }
    const std::vector<uint32_t>& branching() const { return branching_; }
    uint64_t total_keys() const { return total_; }
    uint64_t leaf_count() const { return level_count(depth()); }

    // Number of nodes at a level, 1-based.
    uint64_t level_count(uint32_t level) const;

    // Key on the edge above node `index` at `level` (both validated).
    const crypto::SymmetricKey& key_at(uint32_t level, uint64_t index) const;

    // Index of the level-`level` ancestor of leaf `leaf`.
    uint64_t ancestor_index(uint64_t leaf, uint32_t level) const;

    // The c keys on the root-to-leaf path, outer level first.
    std::vector<crypto::SymmetricKey> path_keys(uint64_t leaf) const;

    // Every key in the pool, level-major (level 1 first).  This is the order
    // a flat, structureless pool hands keys out in.
    const std::vector<crypto::SymmetricKey>& flat_pool() const { return flat_; }

private:
    KeyPoolTree() = default;

    std::vector<uint32_t> branching_;
    std::vector<std::vector<crypto::SymmetricKey>> levels_;
    std::vector<crypto::SymmetricKey> flat_;
    std::vector<uint64_t> suffix_;  // suffix_[i] = product of branching_[i..]
    uint64_t total_ = 0;
};

enum class RingKind { Tree, Flat };

// A vehicle's key ring: the k keys it authenticates with.  Tree rings hold
// k/c full root-to-leaf paths; flat rings hold k arbitrary pool keys.
struct KeyRing {
    VehicleId owner = 0;
    RingKind kind = RingKind::Tree;
    std::vector<uint64_t> leaves;                          // tree rings only
    std::vector<std::vector<crypto::SymmetricKey>> paths;  // tree rings only
    std::vector<crypto::SymmetricKey> keys;                // all k keys
};

// Draws k/c root-to-leaf paths whose level-1 ancestors are pairwise distinct,
// so no pool key repeats inside the ring.  Throws IndivisibleK when c does
// not divide k, TooManyPaths when k/c exceeds the level-1 branching, and
// BadParams when k is zero.
KeyRing assign_keyring(const KeyPoolTree& tree, VehicleId owner, uint32_t k, Rng& rng);

// Flat-pool ring: k keys drawn without replacement from the whole pool.
KeyRing assign_flat_keyring(const KeyPoolTree& tree, VehicleId owner, uint32_t k, Rng& rng);

// One authentication attempt's key selection: c keys, outer level first.
struct PathChoice {
    uint64_t leaf = kNoLeaf;  // kNoLeaf for flat rings
    std::vector<crypto::SymmetricKey> keys;
};

// Uniformly picks one of the ring's paths (tree) or c distinct ring keys in
// draw order (flat).
PathChoice choose_path(const KeyRing& ring, uint32_t depth, Rng& rng);

// Request a vehicle sends to a roadside unit.  Carries no key indices: the
// session key rides encrypted under the unit's public key, and the path is
// proven with one MAC tag per level over nonce, level and timestamp.
struct AuthRequest {
    crypto::Ciphertext enc_session;
    Block nonce{};
    SimTimeMs timestamp = 0;
    std::vector<crypto::MacTag> level_tags;
};

// The byte string each level tag covers.
Bytes tag_message(const Block& nonce, uint32_t level, SimTimeMs timestamp);

AuthRequest make_request(crypto::Provider& provider, const PathChoice& path,
                         uint64_t rsu_public_handle, const crypto::SymmetricKey& session_key,
                         SimTimeMs now, Rng& rng);

// Result of the roadside unit's search for the keys behind a request.
// trial_count is the number of MAC verifications performed.
struct Identification {
    uint64_t leaf = kNoLeaf;
    std::vector<crypto::SymmetricKey> keys;
    uint32_t trial_count = 0;
};

// Level-by-level trial verification down the tree: at each level only the
// children of the node matched so far are tried, at most sum(b_i) trials
// total.  Throws StaleTimestamp outside the freshness window and NoPathFound
// when no full path matches.
Identification identify_path(crypto::Provider& provider, const KeyPoolTree& tree,
                             const AuthRequest& request, SimTimeMs now);

// Same contract over a structureless pool: every level tag is tried against
// all n keys, at most c*n trials.  Baseline for the search-cost comparison.
Identification identify_path_flat(crypto::Provider& provider, const KeyPoolTree& tree,
                                  const AuthRequest& request, SimTimeMs now);

// Challenge: a fresh secret wrapped in c encryption layers, the level-c key
// innermost and the level-1 key outermost.  Only a vehicle holding the whole
// path can peel it.
struct Challenge {
    crypto::Ciphertext layered;
};

std::pair<Challenge, Block> make_challenge(const std::vector<crypto::SymmetricKey>& path_keys,
                                           Rng& rng);

// Vehicle side: peel the layers outer-in, then return the recovered secret
// encrypted under the session key.  Throws BadPadding if any layer fails.
crypto::Ciphertext answer_challenge(const std::vector<crypto::SymmetricKey>& path_keys,
                                    const Challenge& challenge,
                                    const crypto::SymmetricKey& session_key, Rng& rng);

// Roadside unit side: decrypt the response and compare against the secret.
bool verify_response(const Block& secret, const crypto::SymmetricKey& session_key,
                     const crypto::Ciphertext& response);

// Size of the set of vehicles indistinguishable from the sender given the
// identified keys: holders of the same leaf for tree rings, holders of all c
// keys for flat rings.  Counts over the supplied population.
uint32_t anonymity_set(const KeyPoolTree& tree, const std::vector<KeyRing>& population,
                       const std::vector<crypto::SymmetricKey>& path_keys);

// Probability that two k-key rings drawn without replacement from a flat
// n-key pool share at least one key: 1 - C(n-k, k)/C(n, k).  Exact binomials
// over big integers, one final division.
double collision_probability_flat(uint64_t n, uint32_t k);

}  // namespace vanauth::keytree
