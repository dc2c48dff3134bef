#include "scenario.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "bytes.hpp"
#include "error.hpp"
#include "profiles.hpp"

namespace vanauth {
namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct RawConfig {
    // section -> ordered (key, value) pairs; file order preserved
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
    std::vector<std::string> section_order;

    bool has(const std::string& section) const { return sections.count(section) != 0; }

    const std::string* find(const std::string& section, const std::string& key) const {
        auto it = sections.find(section);
        if (it == sections.end()) return nullptr;
        for (const auto& kv : it->second)
            if (kv.first == key) return &kv.second;
        return nullptr;
    }
};

RawConfig tokenize(const std::string& text) {
    RawConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                raise(Errc::ConfigError, "line " + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                raise(Errc::ConfigError, "line " + std::to_string(lineno) + ": empty section name");
            if (!cfg.sections.count(section)) cfg.section_order.push_back(section);
            cfg.sections[section];
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            raise(Errc::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            raise(Errc::ConfigError, "line " + std::to_string(lineno) + ": key outside any section");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            raise(Errc::ConfigError, "line " + std::to_string(lineno) + ": empty key");
        for (const auto& kv : cfg.sections[section])
            if (kv.first == key)
                raise(Errc::ConfigError, "duplicate key " + section + "." + key);
        cfg.sections[section].emplace_back(key, val);
    }
    return cfg;
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(v);
    while (std::getline(in, cur, ',')) out.push_back(trim(cur));
    if (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

double parse_double(const std::string& where, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(d))
        raise(Errc::ConfigError, where + ": not a number: '" + v + "'");
    return d;
}

uint64_t parse_u64(const std::string& where, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    unsigned long long u = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || v.front() == '-')
        raise(Errc::ConfigError, where + ": not a non-negative integer: '" + v + "'");
    return u;
}

bool parse_bool(const std::string& where, const std::string& v) {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    raise(Errc::ConfigError, where + ": not a boolean: '" + v + "'");
}

class Reader {
  public:
    explicit Reader(const RawConfig& cfg) : cfg_(cfg) {}

    const std::string& require(const std::string& section, const std::string& key) {
        mark(section, key);
        const std::string* v = cfg_.find(section, key);
        if (!v) raise(Errc::ConfigError, "missing required key " + section + "." + key);
        return *v;
    }

    const std::string* optional(const std::string& section, const std::string& key) {
        mark(section, key);
        return cfg_.find(section, key);
    }

    double get_double(const std::string& s, const std::string& k) {
        return parse_double(s + "." + k, require(s, k));
    }
    double get_double(const std::string& s, const std::string& k, double dflt) {
        const std::string* v = optional(s, k);
        return v ? parse_double(s + "." + k, *v) : dflt;
    }
    uint64_t get_u64(const std::string& s, const std::string& k) {
        return parse_u64(s + "." + k, require(s, k));
    }
    uint64_t get_u64(const std::string& s, const std::string& k, uint64_t dflt) {
        const std::string* v = optional(s, k);
        return v ? parse_u64(s + "." + k, *v) : dflt;
    }
    bool get_bool(const std::string& s, const std::string& k, bool dflt) {
        const std::string* v = optional(s, k);
        return v ? parse_bool(s + "." + k, *v) : dflt;
    }
    std::string get_string(const std::string& s, const std::string& k, const std::string& dflt) {
        const std::string* v = optional(s, k);
        return v ? *v : dflt;
    }

    // every key the builder never asked about is a typo
    void reject_unknown() const {
        for (const auto& sec : cfg_.sections) {
            for (const auto& kv : sec.second) {
                if (!seen_.count(sec.first + "." + kv.first))
                    raise(Errc::ConfigError, "unknown key " + sec.first + "." + kv.first);
            }
        }
    }

    void mark_section(const std::string& section) {
        auto it = cfg_.sections.find(section);
        if (it == cfg_.sections.end()) return;
        for (const auto& kv : it->second) mark(section, kv.first);
    }

  private:
    void mark(const std::string& s, const std::string& k) { seen_.insert(s + "." + k); }

    const RawConfig& cfg_;
    std::set<std::string> seen_;
};

void validate(const Scenario& sc) {
    auto bad = [](const std::string& msg) { raise(Errc::ConfigError, msg); };

    if (sc.road_length_m <= 0) bad("road.length_m must be positive");
    if (sc.lanes == 0) bad("road.lanes must be at least 1");
    if (sc.classes.empty()) bad("at least one speed class is required");
    for (const auto& c : sc.classes) {
        if (c.min_mps <= 0 || c.max_mps < c.min_mps)
            bad("speed class " + c.name + ": need 0 < min <= max");
        if (c.cell_length_m <= 0)
            bad("speed class " + c.name + ": cell length must be positive");
        if (c.cell_length_m > sc.road_length_m)
            bad("speed class " + c.name + ": cell length exceeds road length");
    }
    if (sc.vehicle_count == 0) bad("vehicles.count must be positive");
    if (sc.class_mix.size() != sc.classes.size())
        bad("vehicles.class_mix must list one fraction per speed class");
    double sum = 0;
    for (double f : sc.class_mix) {
        if (f < 0) bad("vehicles.class_mix fractions must be non-negative");
        sum += f;
    }
    if (std::fabs(sum - 1.0) > 1e-9) bad("vehicles.class_mix must sum to 1");
    if (sc.branching.empty()) bad("keytree.branching must not be empty");
    for (uint32_t b : sc.branching)
        if (b < 2) bad("keytree.branching factors must be at least 2");
    if (sc.keyring_k == 0 || sc.keyring_k % sc.branching.size() != 0)
        bad("vehicles.keyring_k must be a positive multiple of the tree depth");
    if (sc.radio_range_m <= 0) bad("radio.range_m must be positive");
    if (sc.tamper_rate < 0 || sc.tamper_rate > 1) bad("radio.tamper_rate must lie in [0, 1]");
    for (double p : sc.rsu_positions)
        if (p < 0 || p > sc.road_length_m) bad("rsu position off the road");
    if (sc.v2i_mean_s <= 0 || sc.intra_mean_s <= 0 || sc.inter_mean_s <= 0 ||
        sc.i2v_period_s <= 0 || sc.stop_mean_s <= 0 || sc.go_mean_s <= 0)
        bad("traffic timing parameters must be positive");
    if (sc.duration_s <= 0) bad("run.duration_s must be positive");
    if (sc.tick_ms == 0) bad("run.tick_ms must be positive");
    if (sc.variant != "tree" && sc.variant != "flat" && sc.variant != "both")
        bad("run.variant must be tree, flat, or both");
    if (!sc.break_invariant.empty() && sc.break_invariant != "leader")
        bad("debug.break_invariant names no known invariant");
    if (!find_profile(sc.intra_profile)) bad("unknown profile: " + sc.intra_profile);
    if (!find_profile(sc.inter_profile)) bad("unknown profile: " + sc.inter_profile);
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
    RawConfig cfg = tokenize(text);
    Reader r(cfg);
    Scenario sc;

    sc.road_id = r.get_string("road", "id", "A1");
    sc.road_length_m = r.get_double("road", "length_m");
    sc.lanes = static_cast<uint32_t>(r.get_u64("road", "lanes", 1));

    if (!cfg.has("speed_classes"))
        raise(Errc::ConfigError, "missing required section [speed_classes]");
    for (const auto& kv : cfg.sections.at("speed_classes")) {
        std::vector<std::string> parts = split_list(kv.second);
        if (parts.size() != 3)
            raise(Errc::ConfigError, "speed_classes." + kv.first +
                                          ": expected min_mps, max_mps, cell_length_m");
        SpeedClassSpec c;
        c.name = kv.first;
        c.min_mps = parse_double("speed_classes." + kv.first, parts[0]);
        c.max_mps = parse_double("speed_classes." + kv.first, parts[1]);
        c.cell_length_m = parse_double("speed_classes." + kv.first, parts[2]);
        sc.classes.push_back(c);
    }
    r.mark_section("speed_classes");

    sc.vehicle_count = static_cast<uint32_t>(r.get_u64("vehicles", "count"));
    for (const auto& f : split_list(r.require("vehicles", "class_mix")))
        sc.class_mix.push_back(parse_double("vehicles.class_mix", f));
    sc.keyring_k = static_cast<uint32_t>(r.get_u64("vehicles", "keyring_k"));

    for (const auto& b : split_list(r.require("keytree", "branching")))
        sc.branching.push_back(static_cast<uint32_t>(parse_u64("keytree.branching", b)));

    sc.radio_range_m = r.get_double("radio", "range_m");
    sc.tamper_rate = r.get_double("radio", "tamper_rate", 0.0);

    if (const std::string* v = r.optional("rsu", "positions")) {
        for (const auto& p : split_list(*v))
            sc.rsu_positions.push_back(parse_double("rsu.positions", p));
    }

    sc.v2i_mean_s = r.get_double("traffic", "v2i_mean_s", sc.v2i_mean_s);
    sc.intra_mean_s = r.get_double("traffic", "intra_mean_s", sc.intra_mean_s);
    sc.inter_mean_s = r.get_double("traffic", "inter_mean_s", sc.inter_mean_s);
    sc.i2v_period_s = r.get_double("traffic", "i2v_period_s", sc.i2v_period_s);
    sc.stop_mean_s = r.get_double("traffic", "stop_mean_s", sc.stop_mean_s);
    sc.go_mean_s = r.get_double("traffic", "go_mean_s", sc.go_mean_s);
    sc.encrypt_intra = r.get_bool("traffic", "encrypt_intra", false);
    sc.intra_profile = r.get_string("traffic", "intra_profile", sc.intra_profile);
    sc.inter_profile = r.get_string("traffic", "inter_profile", sc.inter_profile);

    sc.duration_s = r.get_double("run", "duration_s");
    sc.tick_ms = r.get_u64("run", "tick_ms", 100);
    sc.seed = r.get_u64("run", "seed", 1);
    sc.variant = r.get_string("run", "variant", "tree");

    sc.break_invariant = r.get_string("debug", "break_invariant", "");

    r.reject_unknown();
    validate(sc);
    sc.digest_hex = hex64(fnv1a64(text));
    return sc;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::ConfigError, "cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

}  // namespace vanauth
