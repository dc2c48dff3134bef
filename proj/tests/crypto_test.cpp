#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <thread>

#include "vanauth/crypto.hpp"

using namespace vanauth;
using namespace vanauth::crypto;

namespace {

// Expected CBC ciphertext size from the padding rule: one IV block plus the
// plaintext extended by p pad bytes, 1 <= p <= 16, to the next block edge.
size_t expected_cbc_size(size_t plaintext_len) {
    size_t pad = 16 - plaintext_len % 16;
    return 16 + plaintext_len + pad;
}

}  // namespace

TEST_CASE("keypair handles are unique and round-trip signatures") {
    Provider p(1);
    KeyPair a = p.gen_keypair();
    KeyPair b = p.gen_keypair();
    CHECK(a.public_handle != b.public_handle);
    CHECK(a.private_handle != b.private_handle);
    CHECK(a.public_handle != a.private_handle);

    Bytes m = to_bytes("hello");
    Signature sig = p.sign(a.private_handle, m);
    CHECK(p.verify(a.public_handle, m, sig));
    CHECK_FALSE(p.verify(b.public_handle, m, sig));
    CHECK_FALSE(p.verify(a.public_handle, to_bytes("hellp"), sig));
}

TEST_CASE("public-key encryption round-trip and wrong-key rejection") {
    Provider p(2);
    KeyPair a = p.gen_keypair();
    KeyPair b = p.gen_keypair();
    Bytes msg = to_bytes("session-key-material");

    Ciphertext ct = p.pk_encrypt(a.public_handle, msg);
    CHECK(p.pk_decrypt(a.private_handle, ct) == msg);
    CHECK_THROWS_WITH_AS(p.pk_decrypt(b.private_handle, ct), doctest::Contains("WrongKey"), Error);

    Ciphertext empty_ct = p.pk_encrypt(a.public_handle, {});
    CHECK(p.pk_decrypt(a.private_handle, empty_ct).empty());

    CHECK_THROWS_AS(p.pk_encrypt(9999999, msg), Error);
    Ciphertext garbage{Bytes(16, 0xab), Scheme::PkEnc};
    CHECK_THROWS_AS(p.pk_decrypt(a.private_handle, garbage), Error);
}

TEST_CASE("CBC round-trip, sizes, and tamper behavior") {
    Provider p(3);
    SymmetricKey k = p.gen_sym_key();
    Rng rng(7);

    SUBCASE("one-block secret gives IV + 2 blocks") {
        Bytes secret = rng.bytes(16);
        Ciphertext ct = sym_encrypt_cbc(k, secret, rng.block());
        CHECK(ct.bytes.size() == expected_cbc_size(16));
        CHECK(ct.bytes.size() == 48);
        CHECK(sym_decrypt_cbc(k, ct) == secret);
    }

    SUBCASE("round-trip across lengths 0..64") {
        for (size_t len = 0; len <= 64; ++len) {
            Bytes msg = rng.bytes(len);
            Ciphertext ct = sym_encrypt_cbc(k, msg, rng.block());
            CHECK(ct.bytes.size() == expected_cbc_size(len));
            CHECK(ct.bytes.size() % 16 == 0);
            CHECK(sym_decrypt_cbc(k, ct) == msg);
        }
    }

    SUBCASE("flipped bit never yields the original plaintext") {
        Bytes secret = rng.bytes(16);
        for (int trial = 0; trial < 64; ++trial) {
            Ciphertext ct = sym_encrypt_cbc(k, secret, rng.block());
            size_t bit = rng.below(ct.bytes.size() * 8);
            ct.bytes[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
            bool bad_padding = false;
            Bytes out;
            try {
                out = sym_decrypt_cbc(k, ct);
            } catch (const Error& e) {
                CHECK(e.code() == Errc::BadPadding);
                bad_padding = true;
            }
            CHECK((bad_padding || out != secret));
        }
    }

    SUBCASE("wrong key fails") {
        Bytes secret = rng.bytes(16);
        Ciphertext ct = sym_encrypt_cbc(k, secret, rng.block());
        SymmetricKey k2 = p.gen_sym_key();
        bool bad_padding = false;
        Bytes out;
        try {
            out = sym_decrypt_cbc(k2, ct);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::BadPadding);
            bad_padding = true;
        }
        CHECK((bad_padding || out != secret));
    }
}

TEST_CASE("CBC layering peels in reverse order only") {
    Provider p(4);
    Rng rng(11);
    for (int c = 1; c <= 4; ++c) {
        std::vector<SymmetricKey> keys;
        for (int i = 0; i < c; ++i) keys.push_back(p.gen_sym_key());
        Bytes secret = rng.bytes(16);

        // apply k1 innermost .. kc outermost
        Ciphertext layered = sym_encrypt_cbc(keys[0], secret, rng.block());
        for (int i = 1; i < c; ++i) layered = sym_encrypt_cbc(keys[i], layered.bytes, rng.block());

        // peel in reverse application order: kc .. k1
        Ciphertext cur = layered;
        for (int i = c - 1; i >= 0; --i) cur.bytes = sym_decrypt_cbc(keys[i], cur);
        CHECK(cur.bytes == secret);

        // every other permutation fails to recover the secret
        std::vector<int> order(c);
        for (int i = 0; i < c; ++i) order[i] = c - 1 - i;
        std::vector<int> perm = order;
        std::sort(perm.begin(), perm.end());
        do {
            if (perm == order) continue;
            Ciphertext attempt = layered;
            bool failed = false;
            for (int idx : perm) {
                try {
                    attempt.bytes = sym_decrypt_cbc(keys[idx], attempt);
                } catch (const Error&) {
                    failed = true;
                    break;
                }
            }
            CHECK((failed || attempt.bytes != secret));
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
}

TEST_CASE("mac round-trip and exact rejection") {
    Provider p(5);
    SymmetricKey k1 = p.gen_sym_key();
    SymmetricKey k2 = p.gen_sym_key();
    Bytes m = to_bytes("beacon");

    MacTag tag = p.mac(k1, m);
    CHECK(p.mac_verify(k1, m, tag));
    CHECK_FALSE(p.mac_verify(k2, m, tag));
    CHECK_FALSE(p.mac_verify(k1, to_bytes("beacoN"), tag));
    // deterministic per (key, msg)
    CHECK(p.mac(k1, m).bytes == tag.bytes);
}

TEST_CASE("identity-based signatures verify from the identity string alone") {
    Provider p(6);
    uint64_t h = p.ibs_extract("RSU-07");
    Bytes m = to_bytes("road closed ahead");
    Signature sig = p.ibs_sign(h, m);

    CHECK(p.ibs_verify("RSU-07", m, sig));
    CHECK_FALSE(p.ibs_verify("RSU-08", m, sig));
    CHECK_FALSE(p.ibs_verify("RSU-07", to_bytes("road open"), sig));

    CHECK(p.ibs_extract("RSU-07") == h);
    CHECK_THROWS_WITH_AS(p.ibs_sign(424242, m), doctest::Contains("UnknownIdentity"), Error);
}

TEST_CASE("group signatures: verify, anonymity of bytes, open") {
    Provider p(7);
    GroupKeys g1 = p.group_setup();
    GroupKeys g2 = p.group_setup();
    GroupCredential a = p.group_issue(g1.opener_secret, "v0001");
    GroupCredential b = p.group_issue(g1.opener_secret, "v0002");
    GroupCredential c = p.group_issue(g2.opener_secret, "v0003");

    Bytes m = to_bytes("lane blocked");
    Signature sa = p.group_sign(a, m);
    Signature sb = p.group_sign(b, m);

    CHECK(p.group_verify(g1.group_public, m, sa));
    CHECK(p.group_verify(g1.group_public, m, sb));
    CHECK(p.group_open(g1.opener_secret, sa) == "v0001");
    CHECK(p.group_open(g1.opener_secret, sb) == "v0002");

    // credential from another group never verifies against g1
    Signature sc = p.group_sign(c, m);
    CHECK_FALSE(p.group_verify(g1.group_public, m, sc));

    // the verifier-visible bytes carry no member id encoding
    std::string sa_hex = hex(sa.bytes);
    CHECK(sa_hex.find("v0001") == std::string::npos);
    std::string raw(sa.bytes.begin(), sa.bytes.end());
    CHECK(raw.find("v0001") == std::string::npos);

    // opening with the wrong group's secret is refused
    CHECK_THROWS_WITH_AS(p.group_open(g2.opener_secret, sa), doctest::Contains("NotLeader"), Error);
    CHECK_THROWS_AS(p.group_issue(123456789, "v0009"), Error);
}

TEST_CASE("group_open after group_sign returns the member id for all members") {
    Provider p(8);
    Rng rng(13);
    for (int g = 0; g < 4; ++g) {
        GroupKeys keys = p.group_setup();
        for (int v = 0; v < 8; ++v) {
            std::string member = "v" + std::to_string(100 * g + v);
            GroupCredential cred = p.group_issue(keys.opener_secret, member);
            Bytes m = rng.bytes(24);
            Signature sig = p.group_sign(cred, m);
            CHECK(p.group_verify(keys.group_public, m, sig));
            CHECK(p.group_open(keys.opener_secret, sig) == member);
        }
    }
}

TEST_CASE("round-trip property over random messages, all schemes") {
    Provider p(9);
    Rng rng(17);
    KeyPair kp = p.gen_keypair();
    SymmetricKey sk = p.gen_sym_key();
    uint64_t ih = p.ibs_extract("RSU-99");
    GroupKeys gk = p.group_setup();
    GroupCredential cred = p.group_issue(gk.opener_secret, "v0042");

    for (int i = 0; i < 1000; ++i) {
        Bytes m = rng.bytes(rng.below(200));
        CHECK(p.pk_decrypt(kp.private_handle, p.pk_encrypt(kp.public_handle, m)) == m);
        CHECK(p.verify(kp.public_handle, m, p.sign(kp.private_handle, m)));
        CHECK(p.mac_verify(sk, m, p.mac(sk, m)));
        CHECK(p.ibs_verify("RSU-99", m, p.ibs_sign(ih, m)));
        CHECK(p.group_verify(gk.group_public, m, p.group_sign(cred, m)));
        CHECK(sym_decrypt_cbc(sk, sym_encrypt_cbc(sk, m, rng.block())) == m);
    }
}

TEST_CASE("tokens not produced by the provider never verify") {
    Provider p(10);
    Rng rng(19);
    KeyPair kp = p.gen_keypair();
    SymmetricKey sk = p.gen_sym_key();
    uint64_t ih = p.ibs_extract("RSU-01");
    GroupKeys gk = p.group_setup();

    Bytes m = to_bytes("msg");
    p.sign(kp.private_handle, m);
    p.mac(sk, m);
    p.ibs_sign(ih, m);

    for (int i = 0; i < 200; ++i) {
        Bytes forged = rng.bytes(16);
        CHECK_FALSE(p.verify(kp.public_handle, m, Signature{forged, Scheme::PkSig}));
        CHECK_FALSE(p.mac_verify(sk, m, MacTag{forged}));
        CHECK_FALSE(p.ibs_verify("RSU-01", m, Signature{forged, Scheme::Ibs}));
        CHECK_FALSE(p.group_verify(gk.group_public, m, Signature{forged, Scheme::Gsig}));
    }

    // a tag produced under k1 never cross-verifies under k2, exactly
    SymmetricKey k2 = p.gen_sym_key();
    MacTag t = p.mac(sk, m);
    CHECK_FALSE(p.mac_verify(k2, m, t));
}

TEST_CASE("provider tolerates concurrent use") {
    Provider p(11);
    KeyPair kp = p.gen_keypair();
    Bytes m = to_bytes("parallel");
    Signature sig = p.sign(kp.private_handle, m);

    std::vector<std::thread> threads;
    std::atomic<int> failures{0};
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            Rng rng(100 + t);
            for (int i = 0; i < 500; ++i) {
                if (!p.verify(kp.public_handle, m, sig)) failures++;
                Bytes payload = rng.bytes(32);
                Ciphertext ct = p.pk_encrypt(kp.public_handle, payload);
                if (p.pk_decrypt(kp.private_handle, ct) != payload) failures++;
            }
        });
    }
    for (auto& th : threads) th.join();
    CHECK(failures == 0);
}
