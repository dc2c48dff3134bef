#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vanauth.h>

#include <cstring>
#include <string>

namespace {

const char* kScenario = R"([road]
length_m = 1500
[speed_classes]
mixed = 10, 25, 500
[vehicles]
count = 12
class_mix = 1.0
keyring_k = 6
[keytree]
branching = 4, 4, 4
[radio]
range_m = 500
[rsu]
positions = 700
[traffic]
v2i_mean_s = 4
intra_mean_s = 3
inter_mean_s = 6
[run]
duration_s = 10
seed = 3
)";

struct Freed {
    vanauth_scenario* sc = nullptr;
    vanauth_report* rep = nullptr;
    ~Freed() {
        vanauth_scenario_free(sc);
        vanauth_report_free(rep);
    }
};

}  // namespace

TEST_CASE("version and error channel") {
    CHECK(std::strlen(vanauth_version()) > 0);

    vanauth_scenario* sc = nullptr;
    CHECK(vanauth_scenario_parse("[road]\nbogus = 1\n", &sc) == VANAUTH_ERR_CONFIG);
    CHECK(std::strlen(vanauth_last_error()) > 0);
    CHECK(sc == nullptr);

    CHECK(vanauth_scenario_parse(kScenario, &sc) == VANAUTH_OK);
    CHECK(std::strlen(vanauth_last_error()) == 0);
    vanauth_scenario_free(sc);
}

TEST_CASE("null arguments are refused, not dereferenced") {
    vanauth_scenario* sc = nullptr;
    vanauth_report* rep = nullptr;
    CHECK(vanauth_scenario_parse(nullptr, &sc) == VANAUTH_ERR_BAD_ARGUMENT);
    CHECK(vanauth_scenario_parse(kScenario, nullptr) == VANAUTH_ERR_BAD_ARGUMENT);
    CHECK(vanauth_run(nullptr, &rep) == VANAUTH_ERR_BAD_ARGUMENT);
    CHECK(vanauth_replay(nullptr, &rep) == VANAUTH_ERR_BAD_ARGUMENT);
    CHECK(vanauth_keytree_bench(nullptr, 3, 6, 10, 10, 1, &rep) == VANAUTH_ERR_BAD_ARGUMENT);
    CHECK(vanauth_scenario_set_variant(nullptr, "tree") == VANAUTH_ERR_BAD_ARGUMENT);
    vanauth_scenario_free(nullptr);
    vanauth_report_free(nullptr);
}

TEST_CASE("run produces a trace that replays to the same metrics") {
    Freed f;
    REQUIRE(vanauth_scenario_parse(kScenario, &f.sc) == VANAUTH_OK);
    CHECK(vanauth_scenario_seed(f.sc) == 3);
    CHECK(std::string(vanauth_scenario_variant(f.sc)) == "tree");

    REQUIRE(vanauth_run(f.sc, &f.rep) == VANAUTH_OK);
    const std::string trace = vanauth_report_trace(f.rep);
    const std::string json = vanauth_report_json(f.rep);
    CHECK(!trace.empty());
    CHECK(json.front() == '{');
    CHECK(std::string(vanauth_report_table(f.rep)).find("protocol") != std::string::npos);

    vanauth_report* replayed = nullptr;
    REQUIRE(vanauth_replay(trace.c_str(), &replayed) == VANAUTH_OK);
    CHECK(std::string(vanauth_report_json(replayed)) == json);
    CHECK(std::string(vanauth_report_trace(replayed)).empty());
    vanauth_report_free(replayed);
}

TEST_CASE("seed and variant overrides change the run") {
    Freed f;
    REQUIRE(vanauth_scenario_parse(kScenario, &f.sc) == VANAUTH_OK);
    REQUIRE(vanauth_run(f.sc, &f.rep) == VANAUTH_OK);
    const std::string base = vanauth_report_trace(f.rep);

    CHECK(vanauth_scenario_set_seed(f.sc, 4) == VANAUTH_OK);
    CHECK(vanauth_scenario_seed(f.sc) == 4);
    vanauth_report* rep2 = nullptr;
    REQUIRE(vanauth_run(f.sc, &rep2) == VANAUTH_OK);
    CHECK(std::string(vanauth_report_trace(rep2)) != base);
    vanauth_report_free(rep2);

    CHECK(vanauth_scenario_set_variant(f.sc, "sideways") == VANAUTH_ERR_BAD_ARGUMENT);
    CHECK(vanauth_scenario_set_variant(f.sc, "both") == VANAUTH_OK);
    CHECK(std::string(vanauth_scenario_variant(f.sc)) == "both");
}

TEST_CASE("corrupt traces and broken invariants surface as their own statuses") {
    vanauth_report* rep = nullptr;
    CHECK(vanauth_replay("not a trace\n", &rep) == VANAUTH_ERR_CORRUPT_TRACE);
    CHECK(vanauth_replay_file("missing.ndjson", &rep) == VANAUTH_ERR_CORRUPT_TRACE);
    vanauth_scenario* missing = nullptr;
    CHECK(vanauth_scenario_load("missing.cfg", &missing) == VANAUTH_ERR_CONFIG);
    CHECK(missing == nullptr);

    const std::string sabotaged = std::string(kScenario) + "[debug]\nbreak_invariant = leader\n";
    Freed f;
    REQUIRE(vanauth_scenario_parse(sabotaged.c_str(), &f.sc) == VANAUTH_OK);
    CHECK(vanauth_run(f.sc, &f.rep) == VANAUTH_ERR_INVARIANT);
    CHECK(f.rep == nullptr);
}

TEST_CASE("key pool measurement through the C surface") {
    const uint32_t branching[3] = {4, 4, 4};
    vanauth_report* rep = nullptr;
    REQUIRE(vanauth_keytree_bench(branching, 3, 6, 50, 200, 1, &rep) == VANAUTH_OK);
    const std::string json = vanauth_report_json(rep);
    CHECK(json.find("\"total_keys\": 84") != std::string::npos);
    CHECK(std::string(vanauth_report_table(rep)).find("collision exact") != std::string::npos);
    vanauth_report_free(rep);

    CHECK(vanauth_keytree_bench(branching, 3, 5, 50, 200, 1, &rep) ==
          VANAUTH_ERR_BAD_ARGUMENT);
}
