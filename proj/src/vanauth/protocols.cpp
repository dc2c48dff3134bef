#include "protocols.hpp"

#include <algorithm>

#include "error.hpp"

namespace vanauth::protocols {

namespace {

// Bytes covered by an I2V identity signature: the payload bound to the
// broadcast's time and id so a recorded signature cannot be replanted.
Bytes i2v_binding(const Envelope& env) {
    Bytes b = env.payload;
    append_u64le(b, env.timestamp);
    append_u64le(b, env.msg_id);
    return b;
}

// Bytes covered by an intra-group MAC.
Bytes intra_binding(const Envelope& env) {
    Bytes b = to_bytes(env.sender_hint);
    b.push_back('|');
    append_u64le(b, env.group);
    append_u64le(b, env.epoch);
    append_u64le(b, env.timestamp);
    append_u64le(b, env.msg_id);
    append(b, env.payload);
    return b;
}

// Bytes covered by an inter-group signature. Everything here is group-level
// data; no member identity enters the signed material.
Bytes inter_binding(const Envelope& env) {
    Bytes b;
    append_u64le(b, env.group);
    append_u64le(b, env.epoch);
    append_u64le(b, env.timestamp);
    append_u64le(b, env.msg_id);
    append(b, env.payload);
    return b;
}

}  // namespace

Envelope i2v_broadcast(crypto::Provider& provider, const std::string& rsu_identity,
                       uint64_t ibs_private_handle, const Bytes& msg, SimTimeMs now,
                       uint64_t msg_id) {
    Envelope env;
    env.msg_id = msg_id;
    env.kind = EnvelopeKind::I2VBcast;
    env.sender_hint = rsu_identity;
    env.timestamp = now;
    env.payload = msg;
    env.sig = provider.ibs_sign(ibs_private_handle, i2v_binding(env));
    return env;
}

bool i2v_accept(const crypto::Provider& provider, const Envelope& env) {
    if (env.kind != EnvelopeKind::I2VBcast || !env.sig) return false;
    return provider.ibs_verify(env.sender_hint, i2v_binding(env), *env.sig);
}

Envelope v2i_request(crypto::Provider& provider, const keytree::PathChoice& path,
                     const std::string& rsu_name, uint64_t rsu_public_handle,
                     const crypto::SymmetricKey& session_key, SimTimeMs now, Rng& rng,
                     uint64_t msg_id) {
    Envelope env;
    env.msg_id = msg_id;
    env.kind = EnvelopeKind::V2IReq;
    env.to = rsu_name;
    env.timestamp = now;
    env.auth_request =
        keytree::make_request(provider, path, rsu_public_handle, session_key, now, rng);
    return env;
}

V2iChallengeState v2i_challenge(crypto::Provider& provider, const keytree::KeyPoolTree& tree,
                                uint64_t rsu_private_handle, const Envelope& request,
                                SimTimeMs now, SearchVariant variant, Rng& rng, uint64_t msg_id) {
    if (request.kind != EnvelopeKind::V2IReq || !request.auth_request) {
        raise(Errc::BadParams, "not an authentication request");
    }
    const auto& rq = *request.auth_request;

    const Bytes session_blob = provider.pk_decrypt(rsu_private_handle, rq.enc_session);
    if (session_blob.size() != 24) raise(Errc::BadParams, "malformed session blob");
    if (read_u64le(session_blob.data() + 16) != rq.timestamp) {
        raise(Errc::BadParams, "session binding does not match the request timestamp");
    }
    Block session_bytes{};
    std::copy(session_blob.begin(), session_blob.begin() + 16, session_bytes.begin());

    V2iChallengeState state;
    state.session_key = provider.sym_key_from_bytes(session_bytes);

    switch (variant) {
        case SearchVariant::Tree:
            state.ident = keytree::identify_path(provider, tree, rq, now);
            state.tree_trials = state.ident.trial_count;
            break;
        case SearchVariant::Flat:
            state.ident = keytree::identify_path_flat(provider, tree, rq, now);
            state.flat_trials = state.ident.trial_count;
            break;
        case SearchVariant::Both: {
            state.ident = keytree::identify_path(provider, tree, rq, now);
            state.tree_trials = state.ident.trial_count;
            state.flat_trials = keytree::identify_path_flat(provider, tree, rq, now).trial_count;
            break;
        }
    }

    auto [challenge, secret] = keytree::make_challenge(state.ident.keys, rng);
    state.secret = secret;

    Envelope env;
    env.msg_id = msg_id;
    env.kind = EnvelopeKind::V2IChal;
    env.timestamp = now;
    env.origin_msg_id = request.msg_id;
    env.cipher = std::move(challenge.layered);
    state.challenge = std::move(env);
    return state;
}

Envelope v2i_response(const keytree::PathChoice& path, const Envelope& challenge,
                      const crypto::SymmetricKey& session_key, Rng& rng, uint64_t msg_id) {
    if (challenge.kind != EnvelopeKind::V2IChal || !challenge.cipher) {
        raise(Errc::BadParams, "not a challenge");
    }
    Envelope env;
    env.msg_id = msg_id;
    env.kind = EnvelopeKind::V2IResp;
    env.timestamp = challenge.timestamp;
    env.origin_msg_id = challenge.msg_id;
    env.cipher = keytree::answer_challenge(path.keys, keytree::Challenge{*challenge.cipher},
                                           session_key, rng);
    return env;
}

bool v2i_accept(const V2iChallengeState& state, const Envelope& response) {
    if (response.kind != EnvelopeKind::V2IResp || !response.cipher) return false;
    if (response.origin_msg_id != state.challenge.msg_id) return false;
    return keytree::verify_response(state.secret, state.session_key, *response.cipher);
}

V2iRound v2i_authenticate(crypto::Provider& provider, const keytree::KeyPoolTree& tree,
                          const keytree::KeyRing& ring, const std::string& rsu_name,
                          const crypto::KeyPair& rsu_keys, SearchVariant variant, SimTimeMs now,
                          Rng& rng, uint64_t& next_msg_id) {
    V2iRound round;
    const auto path = keytree::choose_path(ring, tree.depth(), rng);
    round.session_key = provider.gen_sym_key();

    round.transcript.push_back(v2i_request(provider, path, rsu_name, rsu_keys.public_handle,
                                           round.session_key, now, rng, next_msg_id++));
    try {
        auto state = v2i_challenge(provider, tree, rsu_keys.private_handle,
                                   round.transcript.back(), now, variant, rng, next_msg_id++);
        round.transcript.push_back(state.challenge);
        round.tree_trials = state.tree_trials;
        round.flat_trials = state.flat_trials;
        round.ident = state.ident;

        round.transcript.push_back(
            v2i_response(path, state.challenge, round.session_key, rng, next_msg_id++));
        round.accepted = v2i_accept(state, round.transcript.back());
        if (!round.accepted) round.cause = "response-mismatch";
    } catch (const Error& e) {
        round.cause = errc_name(e.code());
    }
    return round;
}

Envelope intra_send(crypto::Provider& provider, const groups::Group& group, VehicleId sender,
                    const Bytes& msg, bool encrypt_payload, SimTimeMs now, Rng& rng,
                    uint64_t msg_id) {
    if (!group.members.count(sender)) raise(Errc::NotMember, "sender not in the group");

    Envelope env;
    env.msg_id = msg_id;
    env.kind = EnvelopeKind::Intra;
    env.sender_hint = vehicle_name(sender);
    env.timestamp = now;
    env.group = group.id;
    env.epoch = group.epoch;
    env.payload = encrypt_payload
                      ? sym_encrypt_cbc(group.group_key, msg, rng.block()).bytes
                      : msg;
    env.mac = provider.mac(group.group_key, intra_binding(env));
    return env;
}

RxVerdict intra_receive(crypto::Provider& provider, const groups::Group& receiver_group,
                        const Envelope& env, bool expect_encrypted) {
    if (env.kind != EnvelopeKind::Intra || !env.mac) {
        raise(Errc::BadParams, "not an intra-group envelope");
    }
    RxVerdict v;
    if (env.group != receiver_group.id) {
        v.cause = "wrong-group";
        return v;
    }
    if (env.epoch != receiver_group.epoch) {
        v.cause = "stale-epoch";
        return v;
    }
    if (!provider.mac_verify(receiver_group.group_key, intra_binding(env), *env.mac)) {
        v.cause = "bad-mac";
        return v;
    }
    if (expect_encrypted) {
        try {
            v.plaintext = sym_decrypt_cbc(receiver_group.group_key,
                                          crypto::Ciphertext{env.payload, crypto::Scheme::SymCbc});
        } catch (const Error&) {
            v.cause = "bad-payload";
            return v;
        }
    } else {
        v.plaintext = env.payload;
    }
    v.accepted = true;
    return v;
}

Envelope inter_send(crypto::Provider& provider, const groups::Group& sender_group,
                    const crypto::GroupCredential& credential, const Bytes& msg, SimTimeMs now,
                    uint64_t msg_id) {
    Envelope env;
    env.msg_id = msg_id;
    env.kind = EnvelopeKind::Inter;
    env.sender_hint = group_name(sender_group.id);
    env.timestamp = now;
    env.group = sender_group.id;
    env.epoch = sender_group.epoch;
    env.payload = msg;
    env.sig = provider.group_sign(credential, inter_binding(env));
    return env;
}

RxVerdict inter_verify(const crypto::Provider& provider,
                       const std::map<GroupId, uint64_t>& directory, const Envelope& env) {
    if (env.kind != EnvelopeKind::Inter || !env.sig) {
        raise(Errc::BadParams, "not an inter-group envelope");
    }
    RxVerdict v;
    const auto entry = directory.find(env.group);
    if (entry == directory.end()) {
        v.cause = "unknown-group";
        return v;
    }
    if (!provider.group_verify(entry->second, inter_binding(env), *env.sig)) {
        v.cause = "bad-signature";
        return v;
    }
    v.plaintext = env.payload;
    v.accepted = true;
    return v;
}

std::string dispute_open(const crypto::Provider& provider, const groups::Group& signer_group,
                         VehicleId opener, const Envelope& env) {
    if (env.kind != EnvelopeKind::Inter || !env.sig) {
        raise(Errc::BadParams, "no group signature to open");
    }
    if (opener != signer_group.leader) {
        raise(Errc::NotLeader, "only the signing group's leader can open");
    }
    return provider.group_open(signer_group.gsig.opener_secret, *env.sig);
}

}  // namespace vanauth::protocols
