#pragma once

#include "tinygaze/models.hpp"

#include <string>
#include <vector>

namespace tinygaze::bench {

struct LatencyReport {
    std::string model;
    std::size_t width = 32, dim = 48, classes = 5, batch = 1;
    std::size_t warmup = 20;
    std::vector<double> samples_us;  // per-window wall time, sorted ascending
    double p50_us = 0, p90_us = 0, p99_us = 0;
    std::size_t param_count = 0;
};

// Times only the forward pass on seeded inputs; per-window time is batch
// time divided by batch size. Monotonic clock; no CPU pinning (shared-machine
// numbers are indicative, not absolute).
LatencyReport measure_latency(net::ModelGraph& graph, std::size_t batch,
                              std::size_t iterations = 200, std::size_t warmup = 20,
                              std::uint64_t seed = 7);

struct BenchRow {
    std::string model;
    std::size_t params = 0;
    double p50_us = 0, p90_us = 0, p99_us = 0;
    double macro_f1 = -1;  // < 0 means not available
};

struct BenchTable {
    std::size_t width, dim, classes, batch;
    std::vector<BenchRow> rows;

    std::string to_text() const;
    std::string to_csv() const;
    std::string to_json() const;
};

BenchTable bench_suite(const std::vector<models::ModelKind>& kinds, std::size_t w, std::size_t d,
                       std::size_t c, std::size_t batch, std::size_t iterations = 200,
                       std::uint64_t seed = 7);

}  // namespace tinygaze::bench
