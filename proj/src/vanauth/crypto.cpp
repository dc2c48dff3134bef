#include "crypto.hpp"

namespace vanauth::crypto {

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::PkEnc: return "PK-ENC";
        case Scheme::SymCbc: return "SYM-CBC";
        case Scheme::PkSig: return "PK-SIG";
        case Scheme::Ibs: return "IBS";
        case Scheme::Gsig: return "GSIG";
        case Scheme::Mac: return "MAC";
    }
    return "?";
}

namespace {

constexpr size_t kBlock = 16;
constexpr size_t kTokenSize = 16;
constexpr int kRounds = 8;

uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

struct RoundKeys {
    uint64_t k[kRounds];
};

RoundKeys round_keys(const Block& key) {
    RoundKeys rk;
    uint64_t a = read_u64le(key.data());
    uint64_t b = read_u64le(key.data() + 8);
    uint64_t s = a ^ (b * 0x9e3779b97f4a7c15ull) ^ 0x632be59bd9b4e019ull;
    for (int r = 0; r < kRounds; ++r) {
        s += 0x9e3779b97f4a7c15ull;
        rk.k[r] = mix64(s ^ b) + a;
    }
    return rk;
}

// Balanced Feistel network over the two 64-bit halves of a block. Not a
// real cipher; an invertible keyed permutation for the modelled backend.
void encrypt_block(const RoundKeys& rk, uint8_t* block) {
    uint64_t l = read_u64le(block);
    uint64_t r = read_u64le(block + 8);
    for (int i = 0; i < kRounds; ++i) {
        uint64_t t = l ^ mix64(r ^ rk.k[i]);
        l = r;
        r = t;
    }
    for (int i = 0; i < 8; ++i) block[i] = static_cast<uint8_t>(l >> (8 * i));
    for (int i = 0; i < 8; ++i) block[8 + i] = static_cast<uint8_t>(r >> (8 * i));
}

void decrypt_block(const RoundKeys& rk, uint8_t* block) {
    uint64_t l = read_u64le(block);
    uint64_t r = read_u64le(block + 8);
    for (int i = kRounds - 1; i >= 0; --i) {
        uint64_t t = r ^ mix64(l ^ rk.k[i]);
        r = l;
        l = t;
    }
    for (int i = 0; i < 8; ++i) block[i] = static_cast<uint8_t>(l >> (8 * i));
    for (int i = 0; i < 8; ++i) block[8 + i] = static_cast<uint8_t>(r >> (8 * i));
}

}  // namespace

Ciphertext sym_encrypt_cbc(const SymmetricKey& k, const Bytes& plaintext, const Block& iv) {
    const RoundKeys rk = round_keys(k.bytes);

    Bytes buf = plaintext;
    const uint8_t pad = static_cast<uint8_t>(kBlock - buf.size() % kBlock);
    buf.insert(buf.end(), pad, pad);

    Ciphertext ct;
    ct.scheme = Scheme::SymCbc;
    ct.bytes.reserve(kBlock + buf.size());
    ct.bytes.insert(ct.bytes.end(), iv.begin(), iv.end());

    uint8_t chain[kBlock];
    std::memcpy(chain, iv.data(), kBlock);
    for (size_t off = 0; off < buf.size(); off += kBlock) {
        uint8_t block[kBlock];
        for (size_t i = 0; i < kBlock; ++i) block[i] = buf[off + i] ^ chain[i];
        encrypt_block(rk, block);
        std::memcpy(chain, block, kBlock);
        ct.bytes.insert(ct.bytes.end(), block, block + kBlock);
    }
    return ct;
}

Bytes sym_decrypt_cbc(const SymmetricKey& k, const Ciphertext& ct) {
    if (ct.bytes.size() < 2 * kBlock || ct.bytes.size() % kBlock != 0)
        raise(Errc::BadPadding, "malformed CBC ciphertext");

    const RoundKeys rk = round_keys(k.bytes);
    Bytes out;
    out.reserve(ct.bytes.size() - kBlock);
    const uint8_t* chain = ct.bytes.data();
    for (size_t off = kBlock; off < ct.bytes.size(); off += kBlock) {
        uint8_t block[kBlock];
        std::memcpy(block, ct.bytes.data() + off, kBlock);
        decrypt_block(rk, block);
        for (size_t i = 0; i < kBlock; ++i) out.push_back(block[i] ^ chain[i]);
        chain = ct.bytes.data() + off;
    }

    const uint8_t pad = out.back();
    if (pad < 1 || pad > kBlock) raise(Errc::BadPadding, "bad pad byte");
    for (size_t i = out.size() - pad; i < out.size(); ++i)
        if (out[i] != pad) raise(Errc::BadPadding, "inconsistent padding");
    out.resize(out.size() - pad);
    return out;
}

Provider::Provider(uint64_t seed) : rng_(Rng(seed).fork("crypto-provider")) {}

uint64_t Provider::next_handle_locked() { return next_handle_++; }

Bytes Provider::fresh_token_locked() {
    // Token uniqueness across every registry keeps lookups unambiguous.
    for (;;) {
        Bytes t = rng_.bytes(kTokenSize);
        if (!pk_enc_.count(t) && !pk_sig_.count(t) && !ibs_sig_.count(t) && !gsig_.count(t))
            return t;
    }
}

KeyPair Provider::gen_keypair() {
    std::lock_guard lock(mu_);
    KeyPair kp{next_handle_locked(), next_handle_locked()};
    pk_to_sk_[kp.public_handle] = kp.private_handle;
    sk_to_pk_[kp.private_handle] = kp.public_handle;
    return kp;
}

SymmetricKey Provider::gen_sym_key() {
    std::lock_guard lock(mu_);
    SymmetricKey k;
    k.id = next_sym_id_++;
    rng_.fill(k.bytes.data(), k.bytes.size());
    return k;
}

SymmetricKey Provider::sym_key_from_bytes(const Block& bytes) {
    std::lock_guard lock(mu_);
    SymmetricKey k;
    k.id = next_sym_id_++;
    k.bytes = bytes;
    return k;
}

Ciphertext Provider::pk_encrypt(uint64_t public_handle, const Bytes& plaintext) {
    std::lock_guard lock(mu_);
    if (!pk_to_sk_.count(public_handle)) raise(Errc::UnknownKey, "pk_encrypt: unknown public key");
    Ciphertext ct;
    ct.scheme = Scheme::PkEnc;
    ct.bytes = fresh_token_locked();
    pk_enc_[ct.bytes] = PkEncRecord{public_handle, plaintext};
    return ct;
}

Bytes Provider::pk_decrypt(uint64_t private_handle, const Ciphertext& ct) {
    std::lock_guard lock(mu_);
    auto sk = sk_to_pk_.find(private_handle);
    if (sk == sk_to_pk_.end()) raise(Errc::UnknownKey, "pk_decrypt: unknown private key");
    auto rec = pk_enc_.find(ct.bytes);
    if (ct.scheme != Scheme::PkEnc || rec == pk_enc_.end())
        raise(Errc::WrongKey, "pk_decrypt: unrecognized ciphertext");
    if (rec->second.pk != sk->second)
        raise(Errc::WrongKey, "pk_decrypt: key does not match ciphertext");
    return rec->second.plaintext;
}

Signature Provider::sign(uint64_t private_handle, const Bytes& msg) {
    std::lock_guard lock(mu_);
    auto sk = sk_to_pk_.find(private_handle);
    if (sk == sk_to_pk_.end()) raise(Errc::UnknownKey, "sign: unknown private key");
    Signature sig;
    sig.scheme = Scheme::PkSig;
    sig.bytes = fresh_token_locked();
    pk_sig_[sig.bytes] = SigRecord{sk->second, msg};
    return sig;
}

bool Provider::verify(uint64_t public_handle, const Bytes& msg, const Signature& sig) const {
    std::lock_guard lock(mu_);
    if (sig.scheme != Scheme::PkSig) return false;
    auto rec = pk_sig_.find(sig.bytes);
    return rec != pk_sig_.end() && rec->second.pk == public_handle && rec->second.msg == msg;
}

MacTag Provider::mac(const SymmetricKey& k, const Bytes& msg) {
    std::lock_guard lock(mu_);
    auto key = std::make_pair(k.bytes, msg);
    auto it = mac_.find(key);
    if (it == mac_.end()) it = mac_.emplace(std::move(key), rng_.bytes(kTokenSize)).first;
    return MacTag{it->second};
}

bool Provider::mac_verify(const SymmetricKey& k, const Bytes& msg, const MacTag& tag) const {
    std::lock_guard lock(mu_);
    auto it = mac_.find(std::make_pair(k.bytes, msg));
    return it != mac_.end() && it->second == tag.bytes;
}

uint64_t Provider::ibs_extract(const std::string& identity) {
    if (identity.empty()) raise(Errc::BadParams, "ibs_extract: empty identity");
    std::lock_guard lock(mu_);
    auto it = ibs_handle_by_identity_.find(identity);
    if (it != ibs_handle_by_identity_.end()) return it->second;
    uint64_t h = next_handle_locked();
    ibs_handle_by_identity_[identity] = h;
    ibs_identity_by_handle_[h] = identity;
    return h;
}

Signature Provider::ibs_sign(uint64_t ibs_private_handle, const Bytes& msg) {
    std::lock_guard lock(mu_);
    auto it = ibs_identity_by_handle_.find(ibs_private_handle);
    if (it == ibs_identity_by_handle_.end())
        raise(Errc::UnknownIdentity, "ibs_sign: handle was never extracted");
    Signature sig;
    sig.scheme = Scheme::Ibs;
    sig.bytes = fresh_token_locked();
    ibs_sig_[sig.bytes] = IbsRecord{it->second, msg};
    return sig;
}

bool Provider::ibs_verify(const std::string& identity, const Bytes& msg, const Signature& sig) const {
    std::lock_guard lock(mu_);
    if (sig.scheme != Scheme::Ibs) return false;
    auto rec = ibs_sig_.find(sig.bytes);
    return rec != ibs_sig_.end() && rec->second.identity == identity && rec->second.msg == msg;
}

GroupKeys Provider::group_setup() {
    std::lock_guard lock(mu_);
    GroupKeys g{next_handle_locked(), next_handle_locked()};
    group_by_opener_[g.opener_secret] = g.group_public;
    return g;
}

GroupCredential Provider::group_issue(uint64_t opener_secret, const std::string& member_id) {
    std::lock_guard lock(mu_);
    auto it = group_by_opener_.find(opener_secret);
    if (it == group_by_opener_.end()) raise(Errc::UnknownGroup, "group_issue: unknown opener");
    GroupCredential cred;
    cred.group_public = it->second;
    cred.member_private = next_handle_locked();
    cred.member_id = member_id;
    creds_[cred.member_private] = CredRecord{cred.group_public, member_id};
    return cred;
}

Signature Provider::group_sign(const GroupCredential& cred, const Bytes& msg) {
    std::lock_guard lock(mu_);
    auto it = creds_.find(cred.member_private);
    if (it == creds_.end() || it->second.group_public != cred.group_public)
        raise(Errc::UnknownGroup, "group_sign: credential not issued by this provider");
    Signature sig;
    sig.scheme = Scheme::Gsig;
    sig.bytes = fresh_token_locked();
    gsig_[sig.bytes] = GsigRecord{it->second.group_public, it->second.member_id, msg};
    return sig;
}

bool Provider::group_verify(uint64_t group_public, const Bytes& msg, const Signature& sig) const {
    std::lock_guard lock(mu_);
    if (sig.scheme != Scheme::Gsig) return false;
    auto rec = gsig_.find(sig.bytes);
    return rec != gsig_.end() && rec->second.group_public == group_public && rec->second.msg == msg;
}

std::string Provider::group_open(uint64_t opener_secret, const Signature& sig) const {
    std::lock_guard lock(mu_);
    auto grp = group_by_opener_.find(opener_secret);
    if (grp == group_by_opener_.end()) raise(Errc::UnknownGroup, "group_open: unknown opener");
    auto rec = gsig_.find(sig.bytes);
    if (sig.scheme != Scheme::Gsig || rec == gsig_.end())
        raise(Errc::UnknownGroup, "group_open: signature not produced by this provider");
    if (rec->second.group_public != grp->second)
        raise(Errc::NotLeader, "group_open: opener is not this signature's group leader");
    return rec->second.member_id;
}

}  // namespace vanauth::crypto
