#include "engine.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "crypto.hpp"
#include "envelope.hpp"
#include "error.hpp"
#include "groups.hpp"
#include "keytree.hpp"
#include "profiles.hpp"
#include "protocols.hpp"
#include "rng.hpp"
#include "trace.hpp"
#include "types.hpp"

namespace vanauth {

uint64_t flooding_baseline(const std::vector<double>& positions_m, size_t origin,
                           double range_m) {
    if (origin >= positions_m.size()) raise(Errc::BadParams, "origin out of range");
    std::vector<char> reached(positions_m.size(), 0);
    std::vector<size_t> frontier{origin};
    reached[origin] = 1;
    uint64_t count = 1;
    while (!frontier.empty()) {
        std::vector<size_t> next;
        for (size_t u : frontier) {
            for (size_t v = 0; v < positions_m.size(); ++v) {
                if (!reached[v] && std::fabs(positions_m[u] - positions_m[v]) <= range_m) {
                    reached[v] = 1;
                    ++count;
                    next.push_back(v);
                }
            }
        }
        frontier = std::move(next);
    }
    return count;
}

std::vector<size_t> relay_path(const std::vector<double>& positions_m, size_t origin,
                               size_t target, double range_m) {
    if (origin >= positions_m.size() || target >= positions_m.size())
        raise(Errc::BadParams, "node out of range");
    std::vector<size_t> path{origin};
    size_t cur = origin;
    const double goal = positions_m[target];
    while (cur != target) {
        double best_dist = std::fabs(positions_m[cur] - goal);
        std::optional<size_t> best;
        for (size_t v = 0; v < positions_m.size(); ++v) {
            if (v == cur) continue;
            if (std::fabs(positions_m[v] - positions_m[cur]) > range_m) continue;
            const double d = std::fabs(positions_m[v] - goal);
            if (d < best_dist) {
                best_dist = d;
                best = v;
            }
        }
        if (!best) return {};
        cur = *best;
        path.push_back(cur);
    }
    return path;
}

namespace {

using groups::Cell;
using groups::Group;
using protocols::SearchVariant;

struct VehicleState {
    VehicleId id = 0;
    uint32_t speed_class = 0;
    double speed_mps = 0;
    double position = 0;
    uint32_t lane = 0;
    bool stopped = false;
    SimTimeMs phase_until = 0;

    crypto::KeyPair keys;
    keytree::KeyRing ring;

    GroupId group = 0;   // 0 = ungrouped
    bool has_key = false;

    SimTimeMs next_v2i = 0, next_intra = 0, next_inter = 0;
};

struct RsuState {
    std::string name;
    double position = 0;
    uint64_t ibs = 0;
    crypto::KeyPair keys;
    SimTimeMs next_bcast = 0;
};

// Per-envelope delivery bookkeeping: one outcome per intended receiver plus
// the tampered-copy tallies, flushed as a single dlv record.
struct DlvTally {
    uint64_t n = 0, acc = 0, rej = 0, drop = 0, fwd = 0;
    std::map<std::string, uint64_t> rej_causes, drop_causes;
    uint64_t tam_n = 0, tam_rej = 0, tam_acc = 0;

    void accept(bool tampered) {
        ++n;
        ++acc;
        if (tampered) {
            ++tam_n;
            ++tam_acc;
        }
    }
    void reject(const std::string& cause, bool tampered) {
        ++n;
        ++rej;
        ++rej_causes[cause];
        if (tampered) {
            ++tam_n;
            ++tam_rej;
        }
    }
    void dropped(const std::string& cause) {
        ++n;
        ++drop;
        ++drop_causes[cause];
    }
    void forward() {
        ++n;
        ++fwd;
    }
};

bool leaks_vehicle_id(const std::string& wire) {
    for (size_t i = 0; i + 4 < wire.size(); ++i) {
        if (wire[i] != 'v') continue;
        bool digits = true;
        for (size_t j = 1; j <= 4; ++j)
            if (!std::isdigit(static_cast<unsigned char>(wire[i + j]))) digits = false;
        if (digits) return true;
    }
    return false;
}

class Engine {
  public:
    explicit Engine(const Scenario& sc)
        : sc_(sc),
          master_(sc.seed),
          provider_(master_.fork("provider").u64()),
          rng_setup_(master_.fork("setup")),
          rng_mob_(master_.fork("mobility")),
          rng_traffic_(master_.fork("traffic")),
          rng_tamper_(master_.fork("tamper")),
          rng_proto_(master_.fork("proto")),
          tree_(keytree::KeyPoolTree::build(sc.branching, master_.fork("key-pool").u64())),
          mgr_(provider_) {
        road_.id = sc_.road_id;
        road_.length_m = sc_.road_length_m;
        for (const auto& c : sc_.classes) road_.cell_length_m.push_back(c.cell_length_m);

        variant_ = sc_.variant == "flat"   ? SearchVariant::Flat
                   : sc_.variant == "both" ? SearchVariant::Both
                                           : SearchVariant::Tree;
        intra_profile_ = *find_profile(sc_.intra_profile);
        inter_profile_ = *find_profile(sc_.inter_profile);
        encrypt_intra_ = sc_.encrypt_intra || intra_profile_.needs_confidentiality;

        std::vector<double> cum;
        double total = 0;
        for (double f : sc_.class_mix) cum.push_back(total += f);

        for (VehicleId id = 1; id <= sc_.vehicle_count; ++id) {
            VehicleState v;
            v.id = id;
            const double r = rng_setup_.real01() * total;
            v.speed_class = static_cast<uint32_t>(sc_.classes.size() - 1);
            for (size_t i = 0; i < cum.size(); ++i) {
                if (r < cum[i]) {
                    v.speed_class = static_cast<uint32_t>(i);
                    break;
                }
            }
            const auto& cls = sc_.classes[v.speed_class];
            v.speed_mps = rng_setup_.uniform(cls.min_mps, cls.max_mps);
            v.position = rng_setup_.uniform(0.0, sc_.road_length_m);
            v.lane = static_cast<uint32_t>(rng_setup_.below(sc_.lanes));
            v.phase_until = delay_after(rng_setup_, 0, sc_.go_mean_s);
            v.keys = provider_.gen_keypair();
            v.ring = variant_ == SearchVariant::Flat
                         ? keytree::assign_flat_keyring(tree_, id, sc_.keyring_k, rng_setup_)
                         : keytree::assign_keyring(tree_, id, sc_.keyring_k, rng_setup_);
            v.next_v2i = delay_after(rng_setup_, 0, sc_.v2i_mean_s);
            v.next_intra = delay_after(rng_setup_, 0, sc_.intra_mean_s);
            v.next_inter = delay_after(rng_setup_, 0, sc_.inter_mean_s);
            pk_dir_[id] = v.keys.public_handle;
            rings_.push_back(v.ring);
            vehicles_.emplace(id, std::move(v));
        }

        for (size_t i = 0; i < sc_.rsu_positions.size(); ++i) {
            RsuState r;
            char buf[16];
            std::snprintf(buf, sizeof buf, "RSU-%02zu", i + 1);
            r.name = buf;
            r.position = sc_.rsu_positions[i];
            r.ibs = provider_.ibs_extract(r.name);
            r.keys = provider_.gen_keypair();
            r.next_bcast = (i + 1) * sc_.tick_ms;
            rsus_.push_back(std::move(r));
        }
    }

    RunResult run() {
        writer_.begin(sc_.seed, sc_.digest_hex, sc_.variant);
        const uint64_t ticks =
            static_cast<uint64_t>(std::llround(sc_.duration_s * 1000.0)) / sc_.tick_ms;
        for (uint64_t t = 0; t < ticks; ++t) {
            now_ = (t + 1) * sc_.tick_ms;
            move_vehicles();
            migrate();
            redeliver_keys();
            reconcile_leaders();
            if (!sc_.break_invariant.empty() && t == ticks / 2) sabotage();
            rsu_traffic();
            vehicle_traffic();
            run_checks();
        }
        writer_.end();
        RunResult out;
        out.trace = writer_.text();
        out.metrics = fold_.report();
        return out;
    }

  private:
    // --- plumbing ---------------------------------------------------------

    uint64_t next_id() { return next_msg_id_++; }

    bool in_range(double a, double b) const { return std::fabs(a - b) <= sc_.radio_range_m; }

    static SimTimeMs delay_after(Rng& rng, SimTimeMs from, double mean_s) {
        const auto d = static_cast<SimTimeMs>(std::llround(rng.exponential(mean_s) * 1000.0));
        return from + std::max<SimTimeMs>(d, 1);
    }

    void emit(Record rec) {
        fold_.add(rec);
        writer_.event(std::move(rec));
    }

    void emit_send(const Envelope& env, uint32_t hop = 0) {
        Record r;
        r["rec"] = "send";
        r["t"] = now_;
        r["env"] = kind_name(env.kind);
        r["id"] = env.msg_id;
        if (!env.sender_hint.empty()) r["from"] = env.sender_hint;
        if (!env.to.empty()) r["to"] = env.to;
        if (env.group) r["grp"] = group_name(env.group);
        if (hop) r["hop"] = hop;
        r["digest"] = hex64(envelope_digest(env));
        emit(std::move(r));
    }

    void emit_dlv(const Envelope& env, const DlvTally& d) {
        Record r;
        r["rec"] = "dlv";
        r["t"] = now_;
        r["id"] = env.msg_id;
        r["env"] = kind_name(env.kind);
        r["n"] = d.n;
        r["acc"] = d.acc;
        r["rej"] = d.rej;
        r["drop"] = d.drop;
        r["fwd"] = d.fwd;
        if (!d.rej_causes.empty()) {
            Record causes = Record::object();
            for (const auto& kv : d.rej_causes) causes[kv.first] = kv.second;
            r["rej_causes"] = causes;
        }
        if (!d.drop_causes.empty()) {
            Record causes = Record::object();
            for (const auto& kv : d.drop_causes) causes[kv.first] = kv.second;
            r["drop_causes"] = causes;
        }
        if (d.tam_n) {
            Record tam;
            tam["n"] = d.tam_n;
            tam["rej"] = d.tam_rej;
            tam["acc"] = d.tam_acc;
            r["tam"] = tam;
        }
        emit(std::move(r));
    }

    void emit_grp(const char* op, const Group& g, std::optional<VehicleId> v) {
        Record r;
        r["rec"] = "grp";
        r["t"] = now_;
        r["op"] = op;
        r["grp"] = group_name(g.id);
        if (v) r["v"] = vehicle_name(*v);
        if (!g.members.empty()) {
            r["leader"] = vehicle_name(g.leader);
            r["epoch"] = g.epoch;
        }
        r["members"] = g.members.size();
        emit(std::move(r));
    }

    void emit_check(const char* name, bool ok, uint64_t n, const std::string& detail = "") {
        Record r;
        r["rec"] = "check";
        r["t"] = now_;
        r["name"] = name;
        r["ok"] = ok;
        r["n"] = n;
        if (!detail.empty()) r["detail"] = detail;
        emit(std::move(r));
    }

    // Flips one bit: payload when there is one, auth material otherwise.
    void corrupt(Envelope& env) {
        auto flip = [&](Bytes& b) {
            b[rng_tamper_.below(b.size())] ^= static_cast<uint8_t>(1u << rng_tamper_.below(8));
        };
        if (!env.payload.empty()) return flip(env.payload);
        if (env.cipher && !env.cipher->bytes.empty()) return flip(env.cipher->bytes);
        if (env.sig && !env.sig->bytes.empty()) return flip(env.sig->bytes);
        if (env.mac && !env.mac->bytes.empty()) return flip(env.mac->bytes);
        if (env.auth_request) {
            auto& rq = *env.auth_request;
            const uint64_t pick = rng_tamper_.below(rq.level_tags.size() + 1);
            if (pick == 0) return flip(rq.enc_session.bytes);
            return flip(rq.level_tags[pick - 1].bytes);
        }
    }

    bool maybe_tamper(Envelope& env) {
        if (sc_.tamper_rate <= 0 || !rng_tamper_.chance(sc_.tamper_rate)) return false;
        corrupt(env);
        return true;
    }

    // --- per-tick phases ----------------------------------------------------

    void move_vehicles() {
        const double dt = sc_.tick_ms / 1000.0;
        for (auto& [id, v] : vehicles_) {
            if (now_ >= v.phase_until) {
                v.stopped = !v.stopped;
                v.phase_until =
                    delay_after(rng_mob_, now_, v.stopped ? sc_.stop_mean_s : sc_.go_mean_s);
            }
            if (!v.stopped)
                v.position = std::fmod(v.position + v.speed_mps * dt, sc_.road_length_m);
        }
    }

    void sync_keys(const Group& g) {
        for (const auto& [mid, rec] : g.members) vehicles_.at(mid).has_key = rec.has_group_key;
    }

    void depart(VehicleState& v, Group& g) {
        groups::remove_member(g, v.id);
        v.group = 0;
        v.has_key = false;
        emit_grp("leave", g, v.id);
        if (g.members.empty()) {
            const GroupId gone = g.id;
            emit_grp("dissolve", g, std::nullopt);
            mgr_.dissolve(gone);
            return;
        }
        const VehicleId old_leader = g.leader;
        mgr_.rekey(g, now_);
        sync_keys(g);
        emit_grp(g.leader != old_leader ? "handover" : "rekey", g, std::nullopt);
    }

    void try_join(VehicleState& v, const Cell& cell) {
        Group* g = mgr_.find_by_cell(cell);
        if (!g) {
            Group& ng = mgr_.found_group(cell, v.id, now_);
            v.group = ng.id;
            v.has_key = true;
            emit_grp("found", ng, v.id);
            return;
        }

        const VehicleState& leader = vehicles_.at(g->leader);
        const Envelope req =
            groups::make_join_request(provider_, v.id, v.keys.private_handle, cell, now_, next_id());
        emit_send(req);
        DlvTally reqd;
        if (!in_range(v.position, leader.position)) {
            reqd.dropped("out-of-range");
            emit_dlv(req, reqd);
            return;  // stays ungrouped, retries next step
        }
        Envelope rcopy = req;
        const bool rtam = maybe_tamper(rcopy);
        std::optional<Envelope> delivery;
        try {
            delivery = groups::admit_member(provider_, *g, rcopy, pk_dir_, now_, next_id());
            reqd.accept(rtam);
        } catch (const Error& e) {
            reqd.reject(errc_name(e.code()), rtam);
        }
        emit_dlv(req, reqd);
        if (!delivery) return;

        emit_send(*delivery);
        DlvTally deld;
        Envelope dcopy = *delivery;
        const bool dtam = maybe_tamper(dcopy);
        v.group = g->id;  // membership is recorded either way
        try {
            groups::open_key_delivery(provider_, v.keys.private_handle, dcopy);
            deld.accept(dtam);
            g->members.at(v.id).has_group_key = true;
            v.has_key = true;
        } catch (const Error& e) {
            deld.reject(errc_name(e.code()), dtam);
        }
        emit_dlv(*delivery, deld);
        emit_grp("join", *g, v.id);
    }

    void migrate() {
        for (auto& [id, v] : vehicles_) {
            const Cell cell = groups::cell_of(road_, v.position, v.speed_class);
            if (v.group) {
                Group* g = mgr_.find(v.group);
                if (g->cell == cell) continue;
                depart(v, *g);
            }
            try_join(v, cell);
        }
    }

    // The leader re-sends the epoch's key material until it lands.
    void redeliver_keys() {
        for (auto& [gid, g] : mgr_.all()) {
            for (auto& [mid, rec] : g.members) {
                if (rec.has_group_key) continue;
                VehicleState& m = vehicles_.at(mid);
                const Envelope env =
                    groups::make_key_delivery(provider_, g, mid, pk_dir_, now_, next_id());
                emit_send(env);
                DlvTally d;
                if (!in_range(vehicles_.at(g.leader).position, m.position)) {
                    d.dropped("out-of-range");
                    emit_dlv(env, d);
                    continue;
                }
                Envelope copy = env;
                const bool tam = maybe_tamper(copy);
                try {
                    groups::open_key_delivery(provider_, m.keys.private_handle, copy);
                    d.accept(tam);
                    rec.has_group_key = true;
                    m.has_key = true;
                } catch (const Error& e) {
                    d.reject(errc_name(e.code()), tam);
                }
                emit_dlv(env, d);
            }
        }
    }

    // A same-step found-then-join pair can tie on tenure with the smaller id
    // arriving second; the argmax rule then demands a handover, which is a
    // leader change and so triggers a rekey like any other.
    void reconcile_leaders() {
        std::vector<GroupId> ids;
        for (const auto& [gid, g] : mgr_.all()) ids.push_back(gid);
        for (GroupId gid : ids) {
            Group& g = *mgr_.find(gid);
            if (groups::elect_leader(g, now_) == g.leader) continue;
            mgr_.rekey(g, now_);
            sync_keys(g);
            emit_grp("handover", g, std::nullopt);
        }
    }

    void sabotage() {
        if (sc_.break_invariant != "leader" || mgr_.all().empty()) return;
        mgr_.all().begin()->second.leader = 0;
    }

    void rsu_traffic() {
        for (auto& r : rsus_) {
            if (now_ < r.next_bcast) continue;
            r.next_bcast += static_cast<SimTimeMs>(std::llround(sc_.i2v_period_s * 1000.0));
            const Envelope env = protocols::i2v_broadcast(provider_, r.name, r.ibs,
                                                          to_bytes("work zone ahead"), now_,
                                                          next_id());
            emit_send(env);
            DlvTally d;
            for (const auto& [vid, v] : vehicles_) {
                if (!in_range(r.position, v.position)) continue;
                Envelope copy = env;
                const bool tam = maybe_tamper(copy);
                if (protocols::i2v_accept(provider_, copy))
                    d.accept(tam);
                else
                    d.reject("bad-signature", tam);
            }
            emit_dlv(env, d);
        }
    }

    const RsuState* nearest_rsu_in_range(double position) const {
        const RsuState* best = nullptr;
        double best_d = 0;
        for (const auto& r : rsus_) {
            const double d = std::fabs(r.position - position);
            if (d > sc_.radio_range_m) continue;
            if (!best || d < best_d) {
                best = &r;
                best_d = d;
            }
        }
        return best;
    }

    void v2i_round(VehicleState& v, const RsuState& rsu) {
        const auto path = keytree::choose_path(v.ring, tree_.depth(), rng_proto_);
        const auto session = provider_.gen_sym_key();
        const Envelope req = protocols::v2i_request(provider_, path, rsu.name,
                                                    rsu.keys.public_handle, session, now_,
                                                    rng_proto_, next_id());
        emit_send(req);
        bool priv_ok = !leaks_vehicle_id(serialize(req));
        uint64_t scanned = 1;

        Envelope rcopy = req;
        const bool rtam = maybe_tamper(rcopy);
        DlvTally reqd;
        std::optional<protocols::V2iChallengeState> state;
        std::string cause;
        try {
            state = protocols::v2i_challenge(provider_, tree_, rsu.keys.private_handle, rcopy,
                                             now_, variant_, rng_proto_, next_id());
            reqd.accept(rtam);
        } catch (const Error& e) {
            cause = errc_name(e.code());
            reqd.reject(cause, rtam);
        }
        emit_dlv(req, reqd);

        uint32_t msgs = 1;
        bool tampered_any = rtam;
        bool ok = false;
        if (state) {
            const Envelope& chal = state->challenge;
            emit_send(chal);
            priv_ok = priv_ok && !leaks_vehicle_id(serialize(chal));
            ++scanned;
            msgs = 2;
            Envelope ccopy = chal;
            const bool ctam = maybe_tamper(ccopy);
            tampered_any |= ctam;
            DlvTally chald;
            std::optional<Envelope> resp;
            try {
                resp = protocols::v2i_response(path, ccopy, session, rng_proto_, next_id());
            } catch (const Error& e) {
                cause = errc_name(e.code());
                chald.reject(cause, ctam);
                emit_dlv(chal, chald);
            }
            if (resp) {
                msgs = 3;
                emit_send(*resp);
                priv_ok = priv_ok && !leaks_vehicle_id(serialize(*resp));
                ++scanned;
                Envelope pcopy = *resp;
                const bool ptam = maybe_tamper(pcopy);
                tampered_any |= ptam;
                ok = protocols::v2i_accept(*state, pcopy);
                DlvTally respd;
                if (ok) {
                    chald.accept(ctam);
                    respd.accept(ptam);
                } else {
                    cause = "response-mismatch";
                    if (ctam)
                        chald.reject(cause, true);
                    else
                        chald.accept(false);
                    respd.reject(cause, ptam);
                }
                emit_dlv(chal, chald);
                emit_dlv(*resp, respd);
            }
        }

        Record r;
        r["rec"] = "auth";
        r["t"] = now_;
        r["proto"] = "v2i";
        r["ok"] = ok;
        if (!ok) r["cause"] = cause;
        r["msgs"] = msgs;
        if (state) {
            if (state->tree_trials) r["trials_tree"] = *state->tree_trials;
            if (state->flat_trials) r["trials_flat"] = *state->flat_trials;
            r["anon"] = keytree::anonymity_set(tree_, rings_, state->ident.keys);
        }
        r["tampered"] = tampered_any;
        emit(std::move(r));
        emit_check("v2i-privacy", priv_ok, scanned);
    }

    // Delivers an intra-group broadcast to the sender's fellow members and
    // returns how many accepted it.
    uint64_t deliver_intra(const Envelope& env, Group& g, VehicleId sender) {
        DlvTally d;
        const double spos = vehicles_.at(sender).position;
        for (const auto& [mid, rec] : g.members) {
            if (mid == sender) continue;
            const VehicleState& m = vehicles_.at(mid);
            if (!in_range(spos, m.position)) {
                d.dropped("out-of-range");
                continue;
            }
            if (!m.has_key) {
                d.dropped("keyless");
                continue;
            }
            Envelope copy = env;
            const bool tam = maybe_tamper(copy);
            const auto verdict = protocols::intra_receive(provider_, g, copy, encrypt_intra_);
            if (verdict.accepted)
                d.accept(tam);
            else
                d.reject(verdict.cause, tam);
        }
        emit_dlv(env, d);
        return d.acc;
    }

    void intra_traffic(VehicleState& v) {
        if (!v.group || !v.has_key) return;
        Group& g = *mgr_.find(v.group);
        if (g.members.size() < 2) return;
        const Envelope env = protocols::intra_send(provider_, g, v.id,
                                                   to_bytes(intra_profile_.name), encrypt_intra_,
                                                   now_, rng_proto_, next_id());
        emit_send(env);
        deliver_intra(env, g, v.id);
    }

    void inter_traffic(VehicleState& v) {
        if (!v.group || !v.has_key) return;
        Group& g = *mgr_.find(v.group);
        const Envelope env = protocols::inter_send(provider_, g, g.members.at(v.id).credential,
                                                   to_bytes(inter_profile_.name), now_, next_id());
        emit_send(env);
        emit_check("inter-privacy", !leaks_vehicle_id(serialize(env)), 1);
        const std::string pristine = serialize(env);

        struct LeaderVerdict {
            bool ok = false;
            std::string cause;
            bool tampered = false;  // carried bytes differ from the original
            Record rec;
        };
        // Verdicts are graded against the carried copy: a tampered copy is
        // whatever no longer matches the original bytes when verified.
        auto judge = [&](const Group& fg, const Envelope& carried) {
            LeaderVerdict out;
            const auto verdict = protocols::inter_verify(provider_, mgr_.directory(), carried);
            out.ok = verdict.accepted;
            out.cause = verdict.cause;
            out.tampered = serialize(carried) != pristine;
            out.rec["rec"] = "auth";
            out.rec["t"] = now_;
            out.rec["proto"] = "inter";
            out.rec["ok"] = out.ok;
            if (!out.ok) out.rec["cause"] = out.cause;
            out.rec["grp_from"] = group_name(g.id);
            out.rec["grp_to"] = group_name(fg.id);
            out.rec["tampered"] = out.tampered;
            return out;
        };

        DlvTally d;
        std::map<GroupId, std::vector<VehicleId>> foreign;
        for (const auto& [oid, o] : vehicles_) {
            if (oid == v.id || !in_range(v.position, o.position)) continue;
            if (o.group == g.id) {
                d.dropped("own-group");
                continue;
            }
            if (!o.group) {
                d.dropped("ungrouped");
                continue;
            }
            foreign[o.group].push_back(oid);
        }

        struct Chain {
            GroupId gid = 0;
            std::vector<double> positions;  // member positions, member id order
            std::vector<size_t> path;       // member indices, relay first
            bool leader_direct = false;
            Envelope copy;  // what travels the chain
            std::optional<LeaderVerdict> verdict;
        };
        std::vector<Chain> chains;

        for (const auto& [gid, receivers] : foreign) {
            Group& fg = *mgr_.find(gid);
            const VehicleId relay = receivers.front();  // id order: smallest in-range id

            Chain chain;
            chain.gid = gid;
            size_t origin_idx = 0, leader_idx = 0;
            size_t i = 0;
            for (const auto& [mid, rec] : fg.members) {
                if (mid == relay) origin_idx = i;
                if (mid == fg.leader) leader_idx = i;
                chain.positions.push_back(vehicles_.at(mid).position);
                ++i;
            }
            chain.path = relay_path(chain.positions, origin_idx, leader_idx, sc_.radio_range_m);
            if (chain.path.empty()) {
                for (VehicleId rcv : receivers)
                    d.dropped(rcv == relay ? "no-route" : "relay-elsewhere");
                continue;
            }
            chain.copy = env;
            maybe_tamper(chain.copy);  // the pickup is a radio copy too
            chain.leader_direct = relay == fg.leader;
            if (chain.leader_direct) {
                chain.verdict = judge(fg, chain.copy);
                if (chain.verdict->ok)
                    d.accept(chain.verdict->tampered);
                else
                    d.reject(chain.verdict->cause, chain.verdict->tampered);
            } else {
                d.forward();
            }
            for (VehicleId rcv : receivers)
                if (rcv != relay) d.dropped("relay-elsewhere");
            chains.push_back(std::move(chain));
        }
        emit_dlv(env, d);

        for (Chain& chain : chains) {
            Group& fg = *mgr_.find(chain.gid);
            if (!chain.leader_direct) {
                for (size_t hop = 1; hop < chain.path.size(); ++hop) {
                    emit_send(chain.copy, static_cast<uint32_t>(hop));
                    maybe_tamper(chain.copy);
                    DlvTally hd;
                    if (hop + 1 < chain.path.size()) {
                        hd.forward();
                    } else {
                        chain.verdict = judge(fg, chain.copy);
                        if (chain.verdict->ok)
                            hd.accept(chain.verdict->tampered);
                        else
                            hd.reject(chain.verdict->cause, chain.verdict->tampered);
                    }
                    emit_dlv(chain.copy, hd);
                }
            }
            emit(chain.verdict->rec);
            if (!chain.verdict->ok || !inter_profile_.multihop) continue;

            // the leader re-issues the content to its own group
            Envelope rb = protocols::intra_send(provider_, fg, fg.leader, chain.copy.payload,
                                                encrypt_intra_, now_, rng_proto_, next_id());
            rb.origin_msg_id = env.msg_id;
            emit_send(rb);
            const uint64_t delivered = deliver_intra(rb, fg, fg.leader);

            const uint64_t hops = chain.path.size() - 1;
            Record r;
            r["rec"] = "dsm";
            r["t"] = now_;
            r["id"] = env.msg_id;
            r["grp_from"] = group_name(g.id);
            r["grp_to"] = group_name(fg.id);
            r["hops"] = hops;
            r["relay_tx"] = hops + 1;
            r["flood_tx"] =
                flooding_baseline(chain.positions, chain.path.front(), sc_.radio_range_m);
            r["delivered"] = delivered;
            emit(std::move(r));
        }
    }

    void vehicle_traffic() {
        for (auto& [id, v] : vehicles_) {
            if (now_ >= v.next_v2i) {
                v.next_v2i = delay_after(rng_traffic_, now_, sc_.v2i_mean_s);
                if (const RsuState* r = nearest_rsu_in_range(v.position)) v2i_round(v, *r);
            }
            if (now_ >= v.next_intra) {
                v.next_intra = delay_after(rng_traffic_, now_, sc_.intra_mean_s);
                intra_traffic(v);
            }
            if (now_ >= v.next_inter) {
                v.next_inter = delay_after(rng_traffic_, now_, sc_.inter_mean_s);
                inter_traffic(v);
            }
        }
    }

    void run_checks() {
        bool ok = true;
        std::string detail;
        uint64_t n = 0;
        for (const auto& [gid, g] : mgr_.all()) {
            ++n;
            if (g.members.empty() || !g.members.count(g.leader) ||
                groups::elect_leader(g, now_) != g.leader ||
                !g.members.at(g.leader).has_group_key) {
                ok = false;
                detail = group_name(gid);
                break;
            }
        }
        emit_check("leader", ok, n, detail);
        if (!ok) raise(Errc::InvariantViolation, "leader invariant failed for " + detail);

        uint64_t grouped = 0, member_total = 0;
        for (const auto& [vid, v] : vehicles_) {
            if (!v.group) continue;
            ++grouped;
            const Group* g = mgr_.find(v.group);
            if (!g || !g->members.count(vid) ||
                g->members.at(vid).has_group_key != v.has_key) {
                ok = false;
                detail = vehicle_name(vid);
                break;
            }
        }
        for (const auto& [gid, g] : mgr_.all()) member_total += g.members.size();
        if (ok && grouped != member_total) {
            ok = false;
            detail = "membership count";
        }
        emit_check("key-sync", ok, grouped, detail);
        if (!ok) raise(Errc::InvariantViolation, "key bookkeeping failed for " + detail);

        for (const auto& [gid, g] : mgr_.all()) {
            for (const auto& [mid, rec] : g.members) {
                const VehicleState& m = vehicles_.at(mid);
                if (groups::cell_of(road_, m.position, m.speed_class) != g.cell) {
                    ok = false;
                    detail = vehicle_name(mid);
                }
            }
        }
        emit_check("cell", ok, member_total, detail);
        if (!ok) raise(Errc::InvariantViolation, "cell consistency failed for " + detail);
    }

    const Scenario sc_;
    Rng master_;
    crypto::Provider provider_;
    Rng rng_setup_, rng_mob_, rng_traffic_, rng_tamper_, rng_proto_;
    keytree::KeyPoolTree tree_;
    groups::GroupManager mgr_;
    groups::RoadGeometry road_;
    SearchVariant variant_ = SearchVariant::Tree;
    ApplicationProfile intra_profile_, inter_profile_;
    bool encrypt_intra_ = false;

    std::map<VehicleId, VehicleState> vehicles_;
    std::vector<RsuState> rsus_;
    std::map<VehicleId, uint64_t> pk_dir_;
    std::vector<keytree::KeyRing> rings_;

    SimTimeMs now_ = 0;
    uint64_t next_msg_id_ = 1;

    TraceWriter writer_;
    MetricsFold fold_;
};

}  // namespace

RunResult run_simulation(const Scenario& sc) {
    Engine engine(sc);
    return engine.run();
}

}  // namespace vanauth
