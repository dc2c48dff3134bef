#include "bench.hpp"

#include <cstdio>
#include <map>
#include <set>

#include "crypto.hpp"
#include "error.hpp"
#include "keytree.hpp"
#include "rng.hpp"

namespace vanauth {
namespace {

struct CostStats {
    uint64_t runs = 0, total = 0, max = 0;

    void add(uint64_t t) {
        ++runs;
        total += t;
        if (t > max) max = t;
    }
    double mean() const { return runs ? double(total) / double(runs) : 0.0; }

    Record to_json() const {
        Record r;
        r["runs"] = runs;
        r["total"] = total;
        r["max"] = max;
        r["mean"] = mean();
        return r;
    }
};

}  // namespace

Record keytree_bench(const BenchParams& p) {
    if (p.population == 0 || p.trials == 0)
        raise(Errc::BadParams, "population and trials must be positive");

    Rng master(p.seed);
    crypto::Provider provider(master.fork("provider").u64());
    const auto tree = keytree::KeyPoolTree::build(p.branching, master.fork("key-pool").u64());
    Rng rng_rings = master.fork("rings");
    Rng rng_req = master.fork("requests");
    Rng rng_mc = master.fork("mc");

    std::vector<keytree::KeyRing> rings;
    rings.reserve(p.population);
    for (uint32_t i = 0; i < p.population; ++i)
        rings.push_back(keytree::assign_keyring(tree, i + 1, p.k, rng_rings));

    const auto rsu = provider.gen_keypair();
    const SimTimeMs now = 10'000;

    CostStats tree_cost, flat_cost;
    std::map<uint64_t, uint64_t> anon_hist;
    for (uint64_t t = 0; t < p.trials; ++t) {
        const auto& ring = rings[rng_req.below(p.population)];
        const auto path = keytree::choose_path(ring, tree.depth(), rng_req);
        const auto session = provider.gen_sym_key();
        const auto request =
            keytree::make_request(provider, path, rsu.public_handle, session, now, rng_req);
        const auto ident = keytree::identify_path(provider, tree, request, now);
        tree_cost.add(ident.trial_count);
        flat_cost.add(keytree::identify_path_flat(provider, tree, request, now).trial_count);
        ++anon_hist[keytree::anonymity_set(tree, rings, ident.keys)];
    }

    const double exact = keytree::collision_probability_flat(tree.total_keys(), p.k);
    uint64_t shared_pairs = 0;
    for (uint64_t t = 0; t < p.trials; ++t) {
        const auto a = keytree::assign_flat_keyring(tree, 1, p.k, rng_mc);
        const auto b = keytree::assign_flat_keyring(tree, 2, p.k, rng_mc);
        std::set<uint64_t> ids;
        for (const auto& key : a.keys) ids.insert(key.id);
        bool shared = false;
        for (const auto& key : b.keys)
            if (ids.count(key.id)) shared = true;
        if (shared) ++shared_pairs;
    }

    uint64_t tree_bound = 0;
    for (uint32_t b : tree.branching()) tree_bound += b;

    Record out;
    Record params;
    params["branching"] = tree.branching();
    params["k"] = p.k;
    params["population"] = p.population;
    params["trials"] = p.trials;
    params["seed"] = p.seed;
    out["params"] = params;

    Record pool;
    pool["total_keys"] = tree.total_keys();
    pool["leaves"] = tree.leaf_count();
    pool["depth"] = tree.depth();
    pool["tree_bound"] = tree_bound;
    pool["flat_bound"] = tree.depth() * tree.total_keys();
    out["pool"] = pool;

    out["tree"] = tree_cost.to_json();
    out["flat"] = flat_cost.to_json();

    Record anon;
    uint64_t amin = 0, amax = 0, asum = 0, acount = 0;
    Record hist = Record::object();
    for (const auto& kv : anon_hist) {
        if (!acount) amin = kv.first;
        amax = kv.first;
        asum += kv.first * kv.second;
        acount += kv.second;
        hist[std::to_string(kv.first)] = kv.second;
    }
    anon["min"] = amin;
    anon["max"] = amax;
    anon["mean"] = acount ? double(asum) / double(acount) : 0.0;
    anon["hist"] = hist;
    out["anonymity"] = anon;

    Record coll;
    coll["exact"] = exact;
    coll["mc"] = double(shared_pairs) / double(p.trials);
    coll["pairs"] = p.trials;
    out["collision"] = coll;
    return out;
}

std::string bench_to_table(const Record& report) {
    std::string out;
    char buf[256];
    auto row = [&](const char* fmt, auto... args) {
        std::snprintf(buf, sizeof(buf), fmt, args...);
        out += buf;
        out += '\n';
    };

    const auto& pool = report.at("pool");
    row("%-24s %10llu", "pool keys",
        (unsigned long long)pool.at("total_keys").get<uint64_t>());
    row("%-24s %10llu", "leaves", (unsigned long long)pool.at("leaves").get<uint64_t>());
    row("%-24s %10llu", "tree trial bound",
        (unsigned long long)pool.at("tree_bound").get<uint64_t>());
    row("%-24s %10llu", "flat trial bound",
        (unsigned long long)pool.at("flat_bound").get<uint64_t>());
    out += '\n';

    row("%-12s %10s %10s %10s", "search", "runs", "max", "mean");
    for (const char* name : {"tree", "flat"}) {
        const auto& s = report.at(name);
        row("%-12s %10llu %10llu %10.2f", name,
            (unsigned long long)s.at("runs").get<uint64_t>(),
            (unsigned long long)s.at("max").get<uint64_t>(), s.at("mean").get<double>());
    }
    out += '\n';

    const auto& anon = report.at("anonymity");
    row("%-24s %10llu", "anonymity min",
        (unsigned long long)anon.at("min").get<uint64_t>());
    row("%-24s %10llu", "anonymity max",
        (unsigned long long)anon.at("max").get<uint64_t>());
    row("%-24s %10.2f", "anonymity mean", anon.at("mean").get<double>());
    out += '\n';

    const auto& coll = report.at("collision");
    row("%-24s %10.6f", "collision exact", coll.at("exact").get<double>());
    row("%-24s %10.6f", "collision sampled", coll.at("mc").get<double>());
    row("%-24s %10llu", "pairs sampled",
        (unsigned long long)coll.at("pairs").get<uint64_t>());
    return out;
}

}  // namespace vanauth
