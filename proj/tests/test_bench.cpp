#include "doctest.h"

#include "tinygaze/bench.hpp"

#include <algorithm>

using namespace tinygaze;
using namespace tinygaze::bench;

TEST_CASE("measure_latency returns ordered percentiles over sorted samples") {
    auto g = models::build_tinyhar(8, 4, 3, 7, 4);
    auto rep = measure_latency(g, 2, 30, 3);
    CHECK(rep.model == "tinyhar");
    CHECK(rep.batch == 2);
    CHECK(rep.param_count == g.count_params());
    REQUIRE(rep.samples_us.size() == 30);
    CHECK(std::is_sorted(rep.samples_us.begin(), rep.samples_us.end()));
    CHECK(rep.samples_us.front() > 0.0);
    CHECK(rep.p50_us >= rep.samples_us.front());
    CHECK(rep.p50_us <= rep.p90_us);
    CHECK(rep.p90_us <= rep.p99_us);
    CHECK(rep.p99_us <= rep.samples_us.back());
}

TEST_CASE("measure_latency requires enough iterations") {
    auto g = models::build_tinyhar(8, 4, 3, 7, 4);
    CHECK_THROWS_AS(measure_latency(g, 1, 5), std::invalid_argument);
}

TEST_CASE("bench_suite reports one row per model with serializable output") {
    auto table = bench_suite({models::ModelKind::TinyHAR}, 8, 4, 3, 1, 12);
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].model == "tinyhar");
    CHECK(table.rows[0].params > 0);
    CHECK(table.rows[0].p50_us > 0.0);
    auto text = table.to_text();
    CHECK(text.find("tinyhar") != std::string::npos);
    auto csv = table.to_csv();
    CHECK(csv.find("model,params,p50_us_per_window") != std::string::npos);
    auto json = table.to_json();
    CHECK(json.find("\"model\":\"tinyhar\"") != std::string::npos);
    CHECK(json.find("\"batch\":1") != std::string::npos);
}
