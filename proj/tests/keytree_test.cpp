#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "vanauth/keytree.hpp"

using namespace vanauth;
using namespace vanauth::keytree;
namespace vc = vanauth::crypto;

namespace {

// Oracle: enumerate the pool by walking every root-to-leaf path and taking
// the union of edge keys, instead of the closed-form level sum.
std::set<Block> edge_union(const KeyPoolTree& t) {
    std::set<Block> keys;
    for (uint64_t leaf = 0; leaf < t.leaf_count(); ++leaf) {
        for (const auto& k : t.path_keys(leaf)) keys.insert(k.bytes);
    }
    return keys;
}

// Oracle: trial count of the level-by-level search, derived from the leaf's
// mixed-radix digits alone. The search tries siblings in index order, so a
// leaf whose ancestor is the d-th child (0-based) costs d+1 trials at that
// level.
uint32_t expected_tree_trials(const std::vector<uint32_t>& branching, uint64_t leaf) {
    std::vector<uint32_t> digits(branching.size());
    uint64_t rem = leaf;
    for (size_t i = branching.size(); i-- > 0;) {
        digits[i] = static_cast<uint32_t>(rem % branching[i]);
        rem /= branching[i];
    }
    uint32_t total = 0;
    for (uint32_t d : digits) total += d + 1;
    return total;
}

// Oracle: the flat scan tries pool keys in flat order with early exit, so a
// level costs (position of the used key) + 1 trials.
uint32_t expected_flat_trials(const KeyPoolTree& t, const std::vector<vc::SymmetricKey>& keys) {
    uint32_t total = 0;
    for (const auto& k : keys) {
        const auto& pool = t.flat_pool();
        for (size_t i = 0; i < pool.size(); ++i) {
            if (pool[i].bytes == k.bytes) {
                total += static_cast<uint32_t>(i) + 1;
                break;
            }
        }
    }
    return total;
}

// Oracle: anonymity by exhaustive subset scan over every ring's key bytes.
uint32_t scan_anonymity(const std::vector<KeyRing>& population,
                        const std::vector<vc::SymmetricKey>& keys) {
    uint32_t n = 0;
    for (const auto& ring : population) {
        bool all = true;
        for (const auto& k : keys) {
            bool held = false;
            for (const auto& own : ring.keys) {
                if (own.bytes == k.bytes) {
                    held = true;
                    break;
                }
            }
            if (!held) {
                all = false;
                break;
            }
        }
        n += all ? 1 : 0;
    }
    return n;
}

// Oracle: binomials from Pascal's rule, columns clamped to what the query
// needs so 64-bit arithmetic never overflows.
double pascal_collision(uint32_t n, uint32_t k) {
    std::vector<std::vector<unsigned long long>> c(n + 1);
    for (uint32_t i = 0; i <= n; ++i) {
        const uint32_t cols = std::min(i, k) + 1;
        c[i].assign(cols, 1);
        for (uint32_t j = 1; j < cols && j < i; ++j) {
            c[i][j] = c[i - 1][j - 1] + c[i - 1][j];
        }
    }
    const unsigned long long all = c[n][k];
    const unsigned long long disjoint = (k > n - k) ? 0 : c[n - k][k];
    return static_cast<double>(all - disjoint) / static_cast<double>(all);
}

AuthRequest honest_request(vc::Provider& p, const KeyPoolTree& t, uint64_t leaf,
                           uint64_t rsu_pk, const vc::SymmetricKey& session, SimTimeMs now,
                           Rng& rng) {
    PathChoice choice;
    choice.leaf = leaf;
    choice.keys = t.path_keys(leaf);
    return make_request(p, choice, rsu_pk, session, now, rng);
}

}  // namespace

TEST_CASE("pool construction matches edge enumeration") {
    auto t = KeyPoolTree::build({4, 4, 4}, 11);
    CHECK(t.depth() == 3);
    CHECK(t.total_keys() == 84);
    CHECK(t.leaf_count() == 64);
    CHECK(t.flat_pool().size() == 84);
    CHECK(edge_union(t).size() == 84);

    auto single = KeyPoolTree::build({2}, 11);
    CHECK(single.depth() == 1);
    CHECK(single.total_keys() == 2);
    CHECK(edge_union(single).size() == 2);

    SUBCASE("deterministic under seed") {
        auto again = KeyPoolTree::build({4, 4, 4}, 11);
        for (uint32_t lv = 1; lv <= 3; ++lv) {
            for (uint64_t i = 0; i < t.level_count(lv); ++i) {
                CHECK(t.key_at(lv, i).bytes == again.key_at(lv, i).bytes);
            }
        }
        auto other = KeyPoolTree::build({4, 4, 4}, 12);
        CHECK(other.key_at(1, 0).bytes != t.key_at(1, 0).bytes);
    }

    SUBCASE("bad branching") {
        CHECK_THROWS_WITH_AS(KeyPoolTree::build({}, 1), doctest::Contains("BadBranching"), Error);
        CHECK_THROWS_WITH_AS(KeyPoolTree::build({0, 4}, 1), doctest::Contains("BadBranching"),
                             Error);
        CHECK_THROWS_WITH_AS(KeyPoolTree::build({4, 1, 4}, 1), doctest::Contains("BadBranching"),
                             Error);
    }

    SUBCASE("flat pool is level-major") {
        CHECK(t.flat_pool()[0].bytes == t.key_at(1, 0).bytes);
        CHECK(t.flat_pool()[4].bytes == t.key_at(2, 0).bytes);
        CHECK(t.flat_pool()[20].bytes == t.key_at(3, 0).bytes);
        CHECK(t.flat_pool()[83].bytes == t.key_at(3, 63).bytes);
    }
}

TEST_CASE("key-ring assignment") {
    auto t = KeyPoolTree::build({4, 4, 4}, 7);
    Rng rng(100);

    SUBCASE("k=6 gives two edge-disjoint paths, exactly six keys") {
        for (int i = 0; i < 50; ++i) {
            auto ring = assign_keyring(t, 1, 6, rng);
            CHECK(ring.leaves.size() == 2);
            CHECK(ring.paths.size() == 2);
            CHECK(ring.keys.size() == 6);
            std::set<Block> distinct;
            for (const auto& k : ring.keys) distinct.insert(k.bytes);
            CHECK(distinct.size() == 6);
            CHECK(ring.leaves[0] / 16 != ring.leaves[1] / 16);
        }
    }

    SUBCASE("k=3 gives the three edges of one path") {
        auto ring = assign_keyring(t, 2, 3, rng);
        CHECK(ring.leaves.size() == 1);
        CHECK(ring.keys.size() == 3);
        auto path = t.path_keys(ring.leaves[0]);
        for (size_t i = 0; i < 3; ++i) CHECK(ring.keys[i].bytes == path[i].bytes);
    }

    SUBCASE("rejections") {
        CHECK_THROWS_WITH_AS(assign_keyring(t, 3, 5, rng), doctest::Contains("IndivisibleK"),
                             Error);
        CHECK_THROWS_WITH_AS(assign_keyring(t, 3, 15, rng), doctest::Contains("TooManyPaths"),
                             Error);
        CHECK_THROWS_WITH_AS(assign_keyring(t, 3, 0, rng), doctest::Contains("BadParams"), Error);
    }

    SUBCASE("flat ring draws without replacement") {
        for (int i = 0; i < 50; ++i) {
            auto ring = assign_flat_keyring(t, 4, 6, rng);
            CHECK(ring.kind == RingKind::Flat);
            CHECK(ring.keys.size() == 6);
            std::set<Block> distinct;
            for (const auto& k : ring.keys) distinct.insert(k.bytes);
            CHECK(distinct.size() == 6);
        }
        CHECK_THROWS_WITH_AS(assign_flat_keyring(t, 4, 85, rng), doctest::Contains("BadParams"),
                             Error);
    }
}

TEST_CASE("path choice is uniform over the ring") {
    auto t = KeyPoolTree::build({4, 4, 4}, 7);
    Rng rng(200);
    auto ring = assign_keyring(t, 1, 6, rng);

    int first = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        auto choice = choose_path(ring, t.depth(), rng);
        CHECK(choice.keys.size() == 3);
        REQUIRE((choice.leaf == ring.leaves[0] || choice.leaf == ring.leaves[1]));
        if (choice.leaf == ring.leaves[0]) ++first;
    }
    const double freq = static_cast<double>(first) / draws;
    CHECK(freq > 0.45);
    CHECK(freq < 0.55);

    SUBCASE("single-leaf ring always picks its path") {
        auto one = assign_keyring(t, 2, 3, rng);
        for (int i = 0; i < 20; ++i) {
            CHECK(choose_path(one, t.depth(), rng).leaf == one.leaves[0]);
        }
    }

    SUBCASE("flat ring picks distinct keys it owns") {
        auto flat = assign_flat_keyring(t, 3, 6, rng);
        for (int i = 0; i < 50; ++i) {
            auto choice = choose_path(flat, t.depth(), rng);
            CHECK(choice.leaf == kNoLeaf);
            CHECK(choice.keys.size() == 3);
            std::set<Block> distinct;
            for (const auto& k : choice.keys) {
                distinct.insert(k.bytes);
                bool owned = false;
                for (const auto& own : flat.keys) owned |= own.bytes == k.bytes;
                CHECK(owned);
            }
            CHECK(distinct.size() == 3);
        }
    }
}

TEST_CASE("request construction") {
    auto t = KeyPoolTree::build({4, 4, 4}, 9);
    vc::Provider p(9);
    Rng rng(300);
    auto rsu = p.gen_keypair();
    auto session = p.gen_sym_key();
    auto ring = assign_keyring(t, 1, 6, rng);
    auto choice = choose_path(ring, t.depth(), rng);

    auto rq = make_request(p, choice, rsu.public_handle, session, 5000, rng);
    REQUIRE(rq.level_tags.size() == 3);
    CHECK(rq.timestamp == 5000);

    SUBCASE("every level tag verifies under the path key") {
        for (uint32_t i = 0; i < 3; ++i) {
            CHECK(p.mac_verify(choice.keys[i], tag_message(rq.nonce, i + 1, 5000),
                               rq.level_tags[i]));
        }
    }

    SUBCASE("repeat requests are fresh") {
        auto rq2 = make_request(p, choice, rsu.public_handle, session, 5000, rng);
        CHECK(rq2.nonce != rq.nonce);
        for (uint32_t i = 0; i < 3; ++i) {
            CHECK(rq2.level_tags[i].bytes != rq.level_tags[i].bytes);
        }
    }

    SUBCASE("unit recovers session key and timestamp") {
        Bytes opened = p.pk_decrypt(rsu.private_handle, rq.enc_session);
        REQUIRE(opened.size() == 24);
        CHECK(std::equal(session.bytes.begin(), session.bytes.end(), opened.begin()));
        CHECK(read_u64le(opened.data() + 16) == 5000);
    }
}

TEST_CASE("tree identification over every leaf") {
    auto t = KeyPoolTree::build({4, 4, 4}, 13);
    vc::Provider p(13);
    Rng rng(400);
    auto rsu = p.gen_keypair();
    auto session = p.gen_sym_key();

    uint32_t max_trials = 0;
    for (uint64_t leaf = 0; leaf < t.leaf_count(); ++leaf) {
        auto rq = honest_request(p, t, leaf, rsu.public_handle, session, 5000, rng);
        auto id = identify_path(p, t, rq, 5600);
        CHECK(id.leaf == leaf);
        REQUIRE(id.keys.size() == 3);
        auto expected = t.path_keys(leaf);
        for (size_t i = 0; i < 3; ++i) CHECK(id.keys[i].bytes == expected[i].bytes);
        CHECK(id.trial_count == expected_tree_trials(t.branching(), leaf));
        CHECK(id.trial_count <= 12);
        max_trials = std::max(max_trials, id.trial_count);
    }
    CHECK(max_trials == 12);
}

TEST_CASE("identification failures") {
    auto t = KeyPoolTree::build({4, 4, 4}, 13);
    vc::Provider p(13);
    Rng rng(500);
    auto rsu = p.gen_keypair();
    auto session = p.gen_sym_key();

    SUBCASE("garbage tags") {
        AuthRequest rq;
        rq.nonce = rng.block();
        rq.timestamp = 5000;
        rq.enc_session = p.pk_encrypt(rsu.public_handle, rng.bytes(24));
        for (int i = 0; i < 3; ++i) rq.level_tags.push_back(vc::MacTag{rng.bytes(16)});
        CHECK_THROWS_WITH_AS(identify_path(p, t, rq, 5000), doctest::Contains("NoPathFound"),
                             Error);
        CHECK_THROWS_WITH_AS(identify_path_flat(p, t, rq, 5000), doctest::Contains("NoPathFound"),
                             Error);
    }

    SUBCASE("keys from a foreign pool") {
        auto foreign = KeyPoolTree::build({4, 4, 4}, 99);
        auto rq = honest_request(p, foreign, 17, rsu.public_handle, session, 5000, rng);
        CHECK_THROWS_WITH_AS(identify_path(p, t, rq, 5000), doctest::Contains("NoPathFound"),
                             Error);
    }

    SUBCASE("freshness window") {
        auto rq = honest_request(p, t, 17, rsu.public_handle, session, 5000, rng);
        CHECK_NOTHROW(identify_path(p, t, rq, 7000));
        CHECK_NOTHROW(identify_path(p, t, rq, 3000));
        CHECK_THROWS_WITH_AS(identify_path(p, t, rq, 7001), doctest::Contains("StaleTimestamp"),
                             Error);
        CHECK_THROWS_WITH_AS(identify_path(p, t, rq, 2999), doctest::Contains("StaleTimestamp"),
                             Error);
        CHECK_THROWS_WITH_AS(identify_path_flat(p, t, rq, 7001),
                             doctest::Contains("StaleTimestamp"), Error);
    }

    SUBCASE("tag count mismatch") {
        auto rq = honest_request(p, t, 17, rsu.public_handle, session, 5000, rng);
        rq.level_tags.pop_back();
        CHECK_THROWS_WITH_AS(identify_path(p, t, rq, 5000), doctest::Contains("BadParams"), Error);
    }
}

TEST_CASE("flat identification cost") {
    auto t = KeyPoolTree::build({4, 4, 4}, 13);
    vc::Provider p(13);
    Rng rng(600);
    auto rsu = p.gen_keypair();
    auto session = p.gen_sym_key();

    SUBCASE("finds the chosen keys, cost matches the scan-position oracle") {
        uint64_t total = 0;
        const int runs = 1000;
        for (int i = 0; i < runs; ++i) {
            auto ring = assign_flat_keyring(t, 1, 6, rng);
            auto choice = choose_path(ring, t.depth(), rng);
            auto rq = make_request(p, choice, rsu.public_handle, session, 5000, rng);
            auto id = identify_path_flat(p, t, rq, 5000);
            REQUIRE(id.keys.size() == 3);
            for (size_t lv = 0; lv < 3; ++lv) CHECK(id.keys[lv].bytes == choice.keys[lv].bytes);
            CHECK(id.trial_count == expected_flat_trials(t, choice.keys));
            CHECK(id.trial_count <= 252);
            total += id.trial_count;
        }
        CHECK(static_cast<double>(total) / runs > 40.0);
    }

    SUBCASE("worst case reaches the c*n bound") {
        PathChoice worst;
        worst.keys = {t.flat_pool()[83], t.flat_pool()[83], t.flat_pool()[83]};
        auto rq = make_request(p, worst, rsu.public_handle, session, 5000, rng);
        auto id = identify_path_flat(p, t, rq, 5000);
        CHECK(id.trial_count == 252);
    }
}

TEST_CASE("challenge and response") {
    auto t = KeyPoolTree::build({4, 4, 4}, 21);
    vc::Provider p(21);
    Rng rng(700);
    auto session = p.gen_sym_key();
    auto path = t.path_keys(37);

    SUBCASE("honest run verifies") {
        auto [challenge, secret] = make_challenge(path, rng);
        auto response = answer_challenge(path, challenge, session, rng);
        CHECK(verify_response(secret, session, response));
    }

    SUBCASE("layer order: level-1 key is outermost") {
        auto [challenge, secret] = make_challenge(path, rng);
        Bytes layer1 = sym_decrypt_cbc(path[0], challenge.layered);
        Bytes layer2 = sym_decrypt_cbc(path[1], vc::Ciphertext{layer1, vc::Scheme::SymCbc});
        Bytes inner = sym_decrypt_cbc(path[2], vc::Ciphertext{layer2, vc::Scheme::SymCbc});
        CHECK(inner == Bytes(secret.begin(), secret.end()));
    }

    SUBCASE("one wrong key breaks the peel") {
        auto [challenge, secret] = make_challenge(path, rng);
        auto wrong = path;
        wrong[1] = t.key_at(2, t.ancestor_index(37, 2) ^ 1);
        bool failed = false;
        vc::Ciphertext response;
        try {
            response = answer_challenge(wrong, challenge, session, rng);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::BadPadding);
            failed = true;
        }
        if (!failed) CHECK_FALSE(verify_response(secret, session, response));
    }

    SUBCASE("single-level tree degenerates to one CBC layer") {
        auto small = KeyPoolTree::build({2}, 5);
        auto one = small.path_keys(1);
        auto [challenge, secret] = make_challenge(one, rng);
        CHECK(challenge.layered.bytes.size() == 48);
        Bytes out = sym_decrypt_cbc(one[0], challenge.layered);
        CHECK(out == Bytes(secret.begin(), secret.end()));
    }

    SUBCASE("random response fails") {
        auto [challenge, secret] = make_challenge(path, rng);
        vc::Ciphertext junk{rng.bytes(48), vc::Scheme::SymCbc};
        CHECK_FALSE(verify_response(secret, session, junk));
    }

    SUBCASE("replayed response fails against a fresh secret") {
        auto [c1, s1] = make_challenge(path, rng);
        auto r1 = answer_challenge(path, c1, session, rng);
        auto [c2, s2] = make_challenge(path, rng);
        REQUIRE(s1 != s2);
        CHECK_FALSE(verify_response(s2, session, r1));
        CHECK(verify_response(s2, session, answer_challenge(path, c2, session, rng)));
    }
}

TEST_CASE("three-message completeness across a population") {
    auto t = KeyPoolTree::build({4, 4, 4}, 31);
    vc::Provider p(31);
    Rng rng(800);
    auto rsu = p.gen_keypair();

    for (VehicleId v = 0; v < 100; ++v) {
        auto ring = assign_keyring(t, v, 6, rng);
        auto choice = choose_path(ring, t.depth(), rng);
        auto session = p.gen_sym_key();
        const SimTimeMs now = 1000 * (v + 1);

        auto rq = make_request(p, choice, rsu.public_handle, session, now, rng);
        auto id = identify_path(p, t, rq, now + 100);
        CHECK(id.leaf == choice.leaf);

        auto [challenge, secret] = make_challenge(id.keys, rng);
        auto response = answer_challenge(choice.keys, challenge, session, rng);
        CHECK(verify_response(secret, session, response));
    }
}

TEST_CASE("anonymity set equals the exhaustive scan") {
    auto t = KeyPoolTree::build({4, 4, 4}, 41);
    Rng rng(900);

    SUBCASE("population of one") {
        std::vector<KeyRing> pop{assign_keyring(t, 0, 6, rng)};
        for (const auto& path : pop[0].paths) {
            CHECK(anonymity_set(t, pop, path) == 1);
            CHECK(scan_anonymity(pop, path) == 1);
        }
    }

    SUBCASE("duplicated ring counts twice") {
        auto ring = assign_keyring(t, 0, 6, rng);
        auto twin = ring;
        twin.owner = 1;
        std::vector<KeyRing> pop{ring, twin};
        CHECK(anonymity_set(t, pop, ring.paths[0]) == 2);
        CHECK(scan_anonymity(pop, ring.paths[0]) == 2);
    }

    SUBCASE("500 tree rings, every path") {
        std::vector<KeyRing> pop;
        for (VehicleId v = 0; v < 500; ++v) pop.push_back(assign_keyring(t, v, 6, rng));
        uint64_t total = 0;
        for (const auto& ring : pop) {
            for (const auto& path : ring.paths) {
                const uint32_t fast = anonymity_set(t, pop, path);
                CHECK(fast == scan_anonymity(pop, path));
                CHECK(fast >= 1);
                total += fast;
            }
        }
        CHECK(total > 1000);
    }

    SUBCASE("flat rings fall back to subset matching") {
        std::vector<KeyRing> pop;
        for (VehicleId v = 0; v < 300; ++v) pop.push_back(assign_flat_keyring(t, v, 6, rng));
        for (int i = 0; i < 200; ++i) {
            const auto& ring = pop[static_cast<size_t>(rng.below(pop.size()))];
            auto choice = choose_path(ring, t.depth(), rng);
            CHECK(anonymity_set(t, pop, choice.keys) == scan_anonymity(pop, choice.keys));
        }
    }
}

TEST_CASE("flat-pool collision probability") {
    SUBCASE("closed form against the Pascal oracle") {
        CHECK(collision_probability_flat(84, 6) == pascal_collision(84, 6));
        CHECK(collision_probability_flat(84, 6) == 0.36811006848566785);
        CHECK(collision_probability_flat(84, 6) == doctest::Approx(0.368).epsilon(0.001));
        CHECK(collision_probability_flat(64, 4) == pascal_collision(64, 4));
        CHECK(collision_probability_flat(40, 8) == pascal_collision(40, 8));
        CHECK(collision_probability_flat(30, 3) == pascal_collision(30, 3));
        CHECK(collision_probability_flat(100, 10) == pascal_collision(100, 10));
    }

    SUBCASE("edge cases") {
        CHECK(collision_probability_flat(6, 6) == 1.0);
        CHECK(collision_probability_flat(1000000, 1) == 1.0 / 1000000.0);
        CHECK(collision_probability_flat(84, 0) == 0.0);
        CHECK_THROWS_WITH_AS(collision_probability_flat(5, 6), doctest::Contains("BadParams"),
                             Error);
    }

    SUBCASE("Monte-Carlo agreement within three standard errors") {
        Rng rng(1000);
        const std::vector<std::pair<uint64_t, uint32_t>> params{
            {84, 6}, {64, 4}, {40, 8}, {30, 3}, {100, 10}};
        const int pairs = 20000;
        for (auto [n, k] : params) {
            int hits = 0;
            for (int i = 0; i < pairs; ++i) {
                auto a = rng.sample_without_replacement(n, k);
                auto b = rng.sample_without_replacement(n, k);
                std::set<uint64_t> in_a(a.begin(), a.end());
                bool shared = false;
                for (uint64_t x : b) shared |= in_a.count(x) > 0;
                hits += shared ? 1 : 0;
            }
            const double exact = collision_probability_flat(n, k);
            const double mc = static_cast<double>(hits) / pairs;
            const double se = std::sqrt(exact * (1.0 - exact) / pairs);
            CHECK(std::abs(mc - exact) <= 3.0 * se);
        }
    }

    SUBCASE("Monte-Carlo over actual flat rings") {
        auto t = KeyPoolTree::build({4, 4, 4}, 51);
        Rng rng(1100);
        const int pairs = 20000;
        int hits = 0;
        for (int i = 0; i < pairs; ++i) {
            auto a = assign_flat_keyring(t, 0, 6, rng);
            auto b = assign_flat_keyring(t, 1, 6, rng);
            std::set<Block> in_a;
            for (const auto& k : a.keys) in_a.insert(k.bytes);
            bool shared = false;
            for (const auto& k : b.keys) shared |= in_a.count(k.bytes) > 0;
            hits += shared ? 1 : 0;
        }
        const double exact = collision_probability_flat(84, 6);
        CHECK(std::abs(static_cast<double>(hits) / pairs - exact) < 0.015);
    }
}
