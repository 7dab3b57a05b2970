#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tinygaze/bench.hpp"
#include "tinygaze/evalharness.hpp"
#include "tinygaze/ingest.hpp"
#include "tinygaze/models.hpp"
#include "tinygaze/preprocess.hpp"
#include "tinygaze/synthgen.hpp"

namespace py = pybind11;
using namespace tinygaze;

namespace {

synthgen::SessionPlan make_plan(int subjects, int reps, double rate, double dot_speed,
                                double noise_sigma, double alpha_min, double alpha_max) {
    synthgen::SessionPlan plan;
    plan.subjects = subjects;
    plan.repetitions = reps;
    plan.sample_rate_hz = rate;
    plan.dot_speed = dot_speed;
    plan.noise_sigma_deg = noise_sigma;
    plan.alpha_min = alpha_min;
    plan.alpha_max = alpha_max;
    return plan;
}

}  // namespace

PYBIND11_MODULE(_tinygaze, m) {
    m.doc() = "Gaze-gesture pipeline: synthesis, ingestion, preprocessing, models, metrics";

    m.def(
        "generate_session",
        [](int subjects, int reps, std::uint64_t seed, double rate, double dot_speed,
           double noise_sigma, double alpha_min, double alpha_max) {
            auto session = synthgen::generate_session(
                make_plan(subjects, reps, rate, dot_speed, noise_sigma, alpha_min, alpha_max),
                seed);
            return py::make_tuple(session.log_text, session.manifest_text);
        },
        py::arg("subjects") = 4, py::arg("reps") = 3, py::arg("seed") = 7,
        py::arg("sample_rate_hz") = 60.0, py::arg("dot_speed") = 100.0,
        py::arg("noise_sigma_deg") = 0.1, py::arg("alpha_min") = 0.3, py::arg("alpha_max") = 0.95,
        "Synthesize a session; returns (log_text, manifest_text).");

    m.def(
        "segment_log",
        [](const std::string& log_text) {
            auto raw = ingest::parse_log(log_text);
            auto sync = ingest::synchronize(raw);
            auto seg = ingest::segment_trials(sync.frames, raw.events);
            py::list trials;
            for (const auto& t : seg.trials)
                trials.append(py::make_tuple(t.participant_id, gesture_token(t.gesture),
                                             stage_token(t.stage), t.repetition, t.frames.size()));
            return trials;
        },
        py::arg("log_text"),
        "Parse + synchronize + segment a log; returns a list of "
        "(participant, gesture, stage, repetition, frame_count) tuples.");

    m.def(
        "window_starts",
        [](std::size_t t, std::size_t w, double overlap) {
            return preprocess::window_starts(t, w, overlap);
        },
        py::arg("t"), py::arg("w"), py::arg("overlap"));

    m.def(
        "count_params",
        [](const std::string& model, std::size_t w, std::size_t d, std::size_t c) {
            auto kind = models::model_from_name(model);
            if (!kind) throw py::value_error("unknown model: " + model);
            return models::build_model({*kind, w, d, c, 7}).count_params();
        },
        py::arg("model"), py::arg("w") = 32, py::arg("d") = 48, py::arg("c") = 5);

    m.def(
        "macro_f1",
        [](const std::vector<std::vector<long>>& confusion) { return eval::macro_f1(confusion); },
        py::arg("confusion"));
    m.def(
        "weighted_f1",
        [](const std::vector<std::vector<long>>& confusion) {
            return eval::weighted_f1(confusion);
        },
        py::arg("confusion"));
    m.def(
        "accuracy",
        [](const std::vector<std::vector<long>>& confusion) { return eval::accuracy(confusion); },
        py::arg("confusion"));

    m.def(
        "measure_latency_us",
        [](const std::string& model, std::size_t w, std::size_t d, std::size_t c,
           std::size_t batch, std::size_t iterations) {
            auto kind = models::model_from_name(model);
            if (!kind) throw py::value_error("unknown model: " + model);
            auto graph = models::build_model({*kind, w, d, c, 7});
            auto rep = bench::measure_latency(graph, batch, iterations, 5);
            return rep.p50_us;
        },
        py::arg("model"), py::arg("w") = 32, py::arg("d") = 48, py::arg("c") = 5,
        py::arg("batch") = 1, py::arg("iterations") = 20,
        "p50 per-window forward latency in microseconds.");
}
