#include "keytree.hpp"

#include <algorithm>
#include <set>

#include <boost/multiprecision/cpp_int.hpp>

#include "error.hpp"

namespace vanauth::keytree {

KeyPoolTree KeyPoolTree::build(const std::vector<uint32_t>& branching, uint64_t seed) {
    if (branching.empty()) raise(Errc::BadBranching, "branching vector is empty");
    for (uint32_t b : branching) {
        if (b < 2) raise(Errc::BadBranching, "branching factor below 2");
    }

    KeyPoolTree tree;
    tree.branching_ = branching;
    tree.suffix_.assign(branching.size() + 1, 1);
    for (size_t i = branching.size(); i-- > 0;) {
        tree.suffix_[i] = tree.suffix_[i + 1] * branching[i];
    }

    Rng rng = Rng(seed).fork("key-pool-tree");
    std::set<Block> seen;
    uint64_t width = 1;
    for (uint32_t b : branching) {
        width *= b;
        std::vector<crypto::SymmetricKey> level;
        level.reserve(width);
        for (uint64_t j = 0; j < width; ++j) {
            crypto::SymmetricKey key;
            key.id = tree.total_ + j;
            do {
                key.bytes = rng.block();
            } while (!seen.insert(key.bytes).second);
            level.push_back(key);
        }
        tree.total_ += width;
        tree.levels_.push_back(std::move(level));
    }

    tree.flat_.reserve(tree.total_);
    for (const auto& level : tree.levels_) {
        tree.flat_.insert(tree.flat_.end(), level.begin(), level.end());
    }
    return tree;
}

uint64_t KeyPoolTree::level_count(uint32_t level) const {
    if (level < 1 || level > depth()) raise(Errc::BadParams, "level out of range");
    return suffix_[0] / suffix_[level];
}

const crypto::SymmetricKey& KeyPoolTree::key_at(uint32_t level, uint64_t index) const {
    if (index >= level_count(level)) raise(Errc::BadParams, "node index out of range");
    return levels_[level - 1][index];
}

uint64_t KeyPoolTree::ancestor_index(uint64_t leaf, uint32_t level) const {
    if (leaf >= leaf_count()) raise(Errc::BadParams, "leaf out of range");
    if (level < 1 || level > depth()) raise(Errc::BadParams, "level out of range");
    return leaf / suffix_[level];
}

std::vector<crypto::SymmetricKey> KeyPoolTree::path_keys(uint64_t leaf) const {
    std::vector<crypto::SymmetricKey> keys;
    keys.reserve(depth());
    for (uint32_t level = 1; level <= depth(); ++level) {
        keys.push_back(key_at(level, ancestor_index(leaf, level)));
    }
    return keys;
}

KeyRing assign_keyring(const KeyPoolTree& tree, VehicleId owner, uint32_t k, Rng& rng) {
    if (k == 0) raise(Errc::BadParams, "key-ring size must be positive");
    const uint32_t c = tree.depth();
    if (k % c != 0) raise(Errc::IndivisibleK, "key-ring size not divisible by tree depth");
    const uint64_t paths = k / c;
    const uint32_t b1 = tree.branching()[0];
    if (paths > b1) raise(Errc::TooManyPaths, "more paths than level-1 subtrees");

    const uint64_t leaves_per_top = tree.leaf_count() / b1;
    KeyRing ring;
    ring.owner = owner;
    ring.kind = RingKind::Tree;
    for (uint64_t top : rng.sample_without_replacement(b1, paths)) {
        ring.leaves.push_back(top * leaves_per_top + rng.below(leaves_per_top));
    }
    std::sort(ring.leaves.begin(), ring.leaves.end());
    for (uint64_t leaf : ring.leaves) {
        ring.paths.push_back(tree.path_keys(leaf));
        ring.keys.insert(ring.keys.end(), ring.paths.back().begin(), ring.paths.back().end());
    }
    return ring;
}

KeyRing assign_flat_keyring(const KeyPoolTree& tree, VehicleId owner, uint32_t k, Rng& rng) {
    if (k == 0) raise(Errc::BadParams, "key-ring size must be positive");
    if (k > tree.total_keys()) raise(Errc::BadParams, "key-ring larger than the pool");
    KeyRing ring;
    ring.owner = owner;
    ring.kind = RingKind::Flat;
    const auto& pool = tree.flat_pool();
    for (uint64_t idx : rng.sample_without_replacement(tree.total_keys(), k)) {
        ring.keys.push_back(pool[idx]);
    }
    return ring;
}

PathChoice choose_path(const KeyRing& ring, uint32_t depth, Rng& rng) {
    PathChoice choice;
    if (ring.kind == RingKind::Tree) {
        if (ring.leaves.empty()) raise(Errc::BadParams, "empty key-ring");
        const size_t i = static_cast<size_t>(rng.below(ring.leaves.size()));
        choice.leaf = ring.leaves[i];
        choice.keys = ring.paths[i];
    } else {
        if (ring.keys.size() < depth) raise(Errc::BadParams, "key-ring smaller than one path");
        for (uint64_t idx : rng.sample_without_replacement(ring.keys.size(), depth)) {
            choice.keys.push_back(ring.keys[idx]);
        }
    }
    return choice;
}

Bytes tag_message(const Block& nonce, uint32_t level, SimTimeMs timestamp) {
    Bytes msg(nonce.begin(), nonce.end());
    msg.push_back(static_cast<uint8_t>(level));
    append_u64le(msg, timestamp);
    return msg;
}

AuthRequest make_request(crypto::Provider& provider, const PathChoice& path,
                         uint64_t rsu_public_handle, const crypto::SymmetricKey& session_key,
                         SimTimeMs now, Rng& rng) {
    if (path.keys.empty()) raise(Errc::BadParams, "empty path");
    AuthRequest request;
    request.nonce = rng.block();
    request.timestamp = now;

    Bytes session(session_key.bytes.begin(), session_key.bytes.end());
    append_u64le(session, now);
    request.enc_session = provider.pk_encrypt(rsu_public_handle, session);

    for (uint32_t i = 0; i < path.keys.size(); ++i) {
        request.level_tags.push_back(
            provider.mac(path.keys[i], tag_message(request.nonce, i + 1, now)));
    }
    return request;
}

namespace {

void check_request_shape(const KeyPoolTree& tree, const AuthRequest& request, SimTimeMs now) {
    if (request.level_tags.size() != tree.depth()) {
        raise(Errc::BadParams, "tag count does not match tree depth");
    }
    const SimTimeMs skew = now > request.timestamp ? now - request.timestamp
                                                   : request.timestamp - now;
    if (skew > kFreshnessWindowMs) raise(Errc::StaleTimestamp, "request outside freshness window");
}

}  // namespace

Identification identify_path(crypto::Provider& provider, const KeyPoolTree& tree,
                             const AuthRequest& request, SimTimeMs now) {
    check_request_shape(tree, request, now);

    Identification out;
    uint64_t node = 0;
    for (uint32_t level = 1; level <= tree.depth(); ++level) {
        const uint32_t b = tree.branching()[level - 1];
        const uint64_t first = (level == 1) ? 0 : node * b;
        const Bytes msg = tag_message(request.nonce, level, request.timestamp);
        bool found = false;
        for (uint64_t idx = first; idx < first + b; ++idx) {
            ++out.trial_count;
            if (provider.mac_verify(tree.key_at(level, idx), msg,
                                    request.level_tags[level - 1])) {
                node = idx;
                found = true;
                break;
            }
        }
        if (!found) raise(Errc::NoPathFound, "no key matches the level tag");
    }
    out.leaf = node;
    out.keys = tree.path_keys(node);
    return out;
}

Identification identify_path_flat(crypto::Provider& provider, const KeyPoolTree& tree,
                                  const AuthRequest& request, SimTimeMs now) {
    check_request_shape(tree, request, now);

    Identification out;
    for (uint32_t level = 1; level <= tree.depth(); ++level) {
        const Bytes msg = tag_message(request.nonce, level, request.timestamp);
        bool found = false;
        for (const auto& key : tree.flat_pool()) {
            ++out.trial_count;
            if (provider.mac_verify(key, msg, request.level_tags[level - 1])) {
                out.keys.push_back(key);
                found = true;
                break;
            }
        }
        if (!found) raise(Errc::NoPathFound, "no key matches the level tag");
    }
    return out;
}

std::pair<Challenge, Block> make_challenge(const std::vector<crypto::SymmetricKey>& path_keys,
                                           Rng& rng) {
    if (path_keys.empty()) raise(Errc::BadParams, "empty path");
    const Block secret = rng.block();
    crypto::Ciphertext layered;
    layered.bytes.assign(secret.begin(), secret.end());
    for (size_t i = path_keys.size(); i-- > 0;) {
        layered = sym_encrypt_cbc(path_keys[i], layered.bytes, rng.block());
    }
    return {Challenge{std::move(layered)}, secret};
}

crypto::Ciphertext answer_challenge(const std::vector<crypto::SymmetricKey>& path_keys,
                                    const Challenge& challenge,
                                    const crypto::SymmetricKey& session_key, Rng& rng) {
    if (path_keys.empty()) raise(Errc::BadParams, "empty path");
    crypto::Ciphertext layer = challenge.layered;
    Bytes plain;
    for (const auto& key : path_keys) {
        plain = sym_decrypt_cbc(key, layer);
        layer.bytes = plain;
    }
    return sym_encrypt_cbc(session_key, plain, rng.block());
}

bool verify_response(const Block& secret, const crypto::SymmetricKey& session_key,
                     const crypto::Ciphertext& response) {
    Bytes recovered;
    try {
        recovered = sym_decrypt_cbc(session_key, response);
    } catch (const Error& e) {
        if (e.code() == Errc::BadPadding) return false;
        throw;
    }
    return recovered.size() == secret.size() &&
           std::equal(secret.begin(), secret.end(), recovered.begin());
}

namespace {

// Recovers the leaf a key vector identifies, or kNoLeaf when the keys do not
// form one root-to-leaf chain.
uint64_t derive_leaf(const KeyPoolTree& tree, const std::vector<crypto::SymmetricKey>& keys) {
    if (keys.size() != tree.depth()) return kNoLeaf;
    uint64_t node = 0;
    for (uint32_t level = 1; level <= tree.depth(); ++level) {
        const uint32_t b = tree.branching()[level - 1];
        const uint64_t first = (level == 1) ? 0 : node * b;
        bool found = false;
        for (uint64_t idx = first; idx < first + b; ++idx) {
            if (tree.key_at(level, idx).bytes == keys[level - 1].bytes) {
                node = idx;
                found = true;
                break;
            }
        }
        if (!found) return kNoLeaf;
    }
    return node;
}

bool holds_all(const KeyRing& ring, const std::vector<crypto::SymmetricKey>& keys) {
    for (const auto& key : keys) {
        const bool held = std::any_of(ring.keys.begin(), ring.keys.end(),
                                      [&](const auto& own) { return own.bytes == key.bytes; });
        if (!held) return false;
    }
    return true;
}

}  // namespace

uint32_t anonymity_set(const KeyPoolTree& tree, const std::vector<KeyRing>& population,
                       const std::vector<crypto::SymmetricKey>& path_keys) {
    const uint64_t leaf = derive_leaf(tree, path_keys);
    uint32_t count = 0;
    for (const auto& ring : population) {
        bool holds;
        if (ring.kind == RingKind::Tree && leaf != kNoLeaf) {
            holds = std::find(ring.leaves.begin(), ring.leaves.end(), leaf) != ring.leaves.end();
        } else {
            holds = holds_all(ring, path_keys);
        }
        count += holds ? 1 : 0;
    }
    return count;
}

double collision_probability_flat(uint64_t n, uint32_t k) {
    if (k > n) raise(Errc::BadParams, "ring larger than the pool");
    if (k == 0) return 0.0;

    using boost::multiprecision::cpp_int;
    const auto binom = [](uint64_t n, uint64_t k) {
        cpp_int r = 1;
        if (k > n) return cpp_int(0);
        for (uint64_t i = 1; i <= k; ++i) {
            r *= cpp_int(n - k + i);
            r /= cpp_int(i);
        }
        return r;
    };
    const cpp_int all = binom(n, k);
    const cpp_int disjoint = binom(n - k, k);
    return (all - disjoint).convert_to<double>() / all.convert_to<double>();
}

}  // namespace vanauth::keytree
