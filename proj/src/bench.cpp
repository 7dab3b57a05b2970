#include "tinygaze/bench.hpp"

#include "tinygaze/util.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <sstream>
#include <stdexcept>

namespace tinygaze::bench {

using net::Tensor;

namespace {
double percentile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0;
    double idx = p * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(idx);
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = idx - static_cast<double>(lo);
    return sorted[lo] * (1 - frac) + sorted[hi] * frac;
}
}  // namespace

LatencyReport measure_latency(net::ModelGraph& graph, std::size_t batch, std::size_t iterations,
                              std::size_t warmup, std::uint64_t seed) {
    if (iterations < 10) throw std::invalid_argument("measure_latency: iterations must be >= 10");
    LatencyReport rep;
    rep.model = graph.name();
    rep.width = graph.input_width();
    rep.dim = graph.input_dim();
    rep.classes = graph.num_classes();
    rep.batch = batch;
    rep.warmup = warmup;
    rep.param_count = graph.count_params();

    Tensor x({batch, rep.width, rep.dim});
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (double& v : x.data) v = dist(rng);

    for (std::size_t i = 0; i < warmup; ++i) (void)graph.forward(x);
    rep.samples_us.reserve(iterations);
    for (std::size_t i = 0; i < iterations; ++i) {
        auto t0 = std::chrono::steady_clock::now();
        (void)graph.forward(x);
        auto t1 = std::chrono::steady_clock::now();
        double us = std::chrono::duration<double, std::micro>(t1 - t0).count();
        rep.samples_us.push_back(us / static_cast<double>(batch));
    }
    std::sort(rep.samples_us.begin(), rep.samples_us.end());
    rep.p50_us = percentile(rep.samples_us, 0.50);
    rep.p90_us = percentile(rep.samples_us, 0.90);
    rep.p99_us = percentile(rep.samples_us, 0.99);
    return rep;
}

BenchTable bench_suite(const std::vector<models::ModelKind>& kinds, std::size_t w, std::size_t d,
                       std::size_t c, std::size_t batch, std::size_t iterations,
                       std::uint64_t seed) {
    BenchTable table{w, d, c, batch, {}};
    for (auto kind : kinds) {
        models::ModelSpec spec{kind, w, d, c, seed};
        net::ModelGraph graph = models::build_model(spec);
        LatencyReport rep = measure_latency(graph, batch, iterations, 20, seed);
        table.rows.push_back({rep.model, rep.param_count, rep.p50_us, rep.p90_us, rep.p99_us, -1});
    }
    return table;
}

std::string BenchTable::to_text() const {
    std::ostringstream out;
    out << "Per-window forward latency (batch=" << batch << ", W=" << width << ", D=" << dim
        << ", C=" << classes << "); microseconds per window, single thread, no CPU pinning\n";
    out << "Model          Params      p50(us)    p90(us)    p99(us)\n";
    for (const auto& r : rows) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-14s %-11zu %-10.1f %-10.1f %-10.1f\n",
                      r.model.c_str(), r.params, r.p50_us, r.p90_us, r.p99_us);
        out << line;
    }
    return out.str();
}

std::string BenchTable::to_csv() const {
    std::ostringstream out;
    out << "model,params,p50_us_per_window,p90_us_per_window,p99_us_per_window,batch,width,dim,classes\n";
    for (const auto& r : rows)
        out << r.model << "," << r.params << "," << fmt_double(r.p50_us) << ","
            << fmt_double(r.p90_us) << "," << fmt_double(r.p99_us) << "," << batch << "," << width
            << "," << dim << "," << classes << "\n";
    return out.str();
}

std::string BenchTable::to_json() const {
    std::ostringstream out;
    out << "{\"batch\":" << batch << ",\"width\":" << width << ",\"dim\":" << dim
        << ",\"classes\":" << classes << ",\"rows\":[";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        out << (i ? "," : "") << "{\"model\":\"" << r.model << "\",\"params\":" << r.params
            << ",\"p50_us_per_window\":" << r.p50_us << ",\"p90_us_per_window\":" << r.p90_us
            << ",\"p99_us_per_window\":" << r.p99_us << "}";
    }
    out << "]}";
    return out.str();
}

}  // namespace tinygaze::bench
