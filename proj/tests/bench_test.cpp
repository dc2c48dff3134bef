#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vanauth/bench.hpp"
#include "vanauth/error.hpp"

using namespace vanauth;

TEST_CASE("key pool measurement report") {
    BenchParams p;
    p.branching = {4, 4, 4};
    p.k = 6;
    p.population = 100;
    p.trials = 2000;
    p.seed = 9;
    const Record r = keytree_bench(p);

    CHECK(r["pool"]["total_keys"] == 84);
    CHECK(r["pool"]["leaves"] == 64);
    CHECK(r["pool"]["depth"] == 3);
    CHECK(r["pool"]["tree_bound"] == 12);
    CHECK(r["pool"]["flat_bound"] == 252);

    CHECK(r["tree"]["runs"] == 2000);
    CHECK(r["tree"]["max"].get<uint64_t>() <= 12);
    CHECK(r["flat"]["runs"] == 2000);
    CHECK(r["flat"]["max"].get<uint64_t>() <= 252);
    CHECK(r["flat"]["mean"].get<double>() > 40.0);
    CHECK(r["flat"]["mean"].get<double>() > 3.0 * r["tree"]["mean"].get<double>());

    CHECK(r["anonymity"]["min"].get<uint64_t>() >= 1);
    CHECK(r["anonymity"]["max"].get<uint64_t>() <= 100);

    const double exact = r["collision"]["exact"].get<double>();
    CHECK(exact == 0.36811006848566785);
    CHECK(std::fabs(r["collision"]["mc"].get<double>() - exact) < 0.05);
    CHECK(r["collision"]["pairs"] == 2000);

    const Record again = keytree_bench(p);
    CHECK(r == again);

    const std::string table = bench_to_table(r);
    CHECK(table.find("collision exact") != std::string::npos);
    CHECK(table.find("tree") != std::string::npos);
}

TEST_CASE("degenerate parameters are refused") {
    BenchParams p;
    p.branching = {4, 4, 4};
    p.k = 6;
    p.population = 0;
    p.trials = 10;
    CHECK_THROWS_AS(keytree_bench(p), Error);
    p.population = 10;
    p.trials = 0;
    CHECK_THROWS_AS(keytree_bench(p), Error);
    p.trials = 10;
    p.k = 5;
    CHECK_THROWS_AS(keytree_bench(p), Error);
}
