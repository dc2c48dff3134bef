#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "bytes.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace vanauth::crypto {

enum class Scheme { PkEnc, SymCbc, PkSig, Ibs, Gsig, Mac };

const char* scheme_name(Scheme s);

struct KeyPair {
    uint64_t public_handle = 0;
    uint64_t private_handle = 0;
};

struct SymmetricKey {
    uint64_t id = 0;
    Block bytes{};
};

struct Ciphertext {
    Bytes bytes;
    Scheme scheme = Scheme::SymCbc;
};

struct Signature {
    Bytes bytes;
    Scheme scheme = Scheme::PkSig;
};

struct MacTag {
    Bytes bytes;
};

struct GroupKeys {
    uint64_t group_public = 0;
    uint64_t opener_secret = 0;  // held by the issuing leader only
};

struct GroupCredential {
    uint64_t group_public = 0;
    uint64_t member_private = 0;
    std::string member_id;
};

// CBC over a 16-byte block cipher keyed by the symmetric key. Padding is
// PKCS#7 (append p bytes of value p, 1 <= p <= 16), so a 16-byte plaintext
// encrypts to IV + 2 blocks = 48 bytes. The ciphertext carries the IV in
// its first block. These are pure functions; any 16-byte key works.
Ciphertext sym_encrypt_cbc(const SymmetricKey& k, const Bytes& plaintext, const Block& iv);

// Throws BadPadding when the decrypted padding is inconsistent (tampered or
// wrong-key input) or the ciphertext is malformed.
Bytes sym_decrypt_cbc(const SymmetricKey& k, const Ciphertext& ct);

// Modelled cryptographic provider. Asymmetric primitives (public-key
// encryption and signatures, identity-based signatures, group signatures)
// are realized as opaque random tokens bound in an in-process registry:
// verification succeeds exactly when the provider produced that token for
// that key and message, which makes unforgeability and anonymity assertable
// exactly in tests. The interface is what a concrete pairing-based backend
// would expose; swapping one in is a documented extension point.
//
// All registry access is serialized by an internal mutex, so the provider
// may be used from several threads.
class Provider {
public:
    explicit Provider(uint64_t seed);

    // --- key management -----------------------------------------------
    KeyPair gen_keypair();
    SymmetricKey gen_sym_key();
    SymmetricKey sym_key_from_bytes(const Block& bytes);

    // --- public-key encryption ----------------------------------------
    Ciphertext pk_encrypt(uint64_t public_handle, const Bytes& plaintext);
    Bytes pk_decrypt(uint64_t private_handle, const Ciphertext& ct);

    // --- public-key signatures ----------------------------------------
    Signature sign(uint64_t private_handle, const Bytes& msg);
    bool verify(uint64_t public_handle, const Bytes& msg, const Signature& sig) const;

    // --- message authentication codes ----------------------------------
    MacTag mac(const SymmetricKey& k, const Bytes& msg);
    bool mac_verify(const SymmetricKey& k, const Bytes& msg, const MacTag& tag) const;

    // --- identity-based signatures --------------------------------------
    // Extraction is the trusted-authority role; repeated extraction of the
    // same identity returns the same handle.
    uint64_t ibs_extract(const std::string& identity);
    Signature ibs_sign(uint64_t ibs_private_handle, const Bytes& msg);
    bool ibs_verify(const std::string& identity, const Bytes& msg, const Signature& sig) const;

    // --- group signatures ------------------------------------------------
    GroupKeys group_setup();
    GroupCredential group_issue(uint64_t opener_secret, const std::string& member_id);
    Signature group_sign(const GroupCredential& cred, const Bytes& msg);
    bool group_verify(uint64_t group_public, const Bytes& msg, const Signature& sig) const;
    std::string group_open(uint64_t opener_secret, const Signature& sig) const;

private:
    uint64_t next_handle_locked();
    Bytes fresh_token_locked();

    mutable std::mutex mu_;
    Rng rng_;
    uint64_t next_handle_ = 1;
    uint64_t next_sym_id_ = 1;

    // key pairs
    std::map<uint64_t, uint64_t> pk_to_sk_;
    std::map<uint64_t, uint64_t> sk_to_pk_;

    // public-key encryption: token -> (recipient pk, plaintext)
    struct PkEncRecord {
        uint64_t pk;
        Bytes plaintext;
    };
    std::map<Bytes, PkEncRecord> pk_enc_;

    // signatures: token -> (signer pk, msg)
    struct SigRecord {
        uint64_t pk;
        Bytes msg;
    };
    std::map<Bytes, SigRecord> pk_sig_;

    // macs: (key bytes, msg) -> tag; macs are deterministic per (key, msg)
    std::map<std::pair<Block, Bytes>, Bytes> mac_;

    // identity-based signatures
    std::map<std::string, uint64_t> ibs_handle_by_identity_;
    std::map<uint64_t, std::string> ibs_identity_by_handle_;
    struct IbsRecord {
        std::string identity;
        Bytes msg;
    };
    std::map<Bytes, IbsRecord> ibs_sig_;

    // group signatures
    std::map<uint64_t, uint64_t> group_by_opener_;  // opener secret -> group public
    struct CredRecord {
        uint64_t group_public;
        std::string member_id;
    };
    std::map<uint64_t, CredRecord> creds_;  // member private handle -> record
    struct GsigRecord {
        uint64_t group_public;
        std::string member_id;
        Bytes msg;
    };
    std::map<Bytes, GsigRecord> gsig_;
};

}  // namespace vanauth::crypto
