#include "doctest.h"

#include "tinygaze/evalharness.hpp"
#include "tinygaze/ingest.hpp"
#include "tinygaze/synthgen.hpp"

#include <map>
#include <random>
#include <set>

using namespace tinygaze;
using namespace tinygaze::eval;

namespace {

// Independent straight-line reimplementation of the three metrics.
struct RefMetrics {
    double acc = 0, macro = 0, weighted = 0;
};

RefMetrics ref_metrics(const Confusion& m) {
    std::size_t c = m.size();
    long total = 0, trace = 0;
    std::vector<long> rowsum(c, 0), colsum(c, 0);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            total += m[i][j];
            rowsum[i] += m[i][j];
            colsum[j] += m[i][j];
            if (i == j) trace += m[i][j];
        }
    RefMetrics out;
    out.acc = total > 0 ? double(trace) / double(total) : 0.0;
    double macro_sum = 0, weighted_sum = 0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < c; ++i) {
        if (rowsum[i] == 0 && colsum[i] == 0) continue;  // class absent entirely
        double p = colsum[i] > 0 ? double(m[i][i]) / double(colsum[i]) : 0.0;
        double r = rowsum[i] > 0 ? double(m[i][i]) / double(rowsum[i]) : 0.0;
        double f1 = (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
        macro_sum += f1;
        ++counted;
        weighted_sum += f1 * double(rowsum[i]);
    }
    out.macro = counted ? macro_sum / double(counted) : 0.0;
    out.weighted = total > 0 ? weighted_sum / double(total) : 0.0;
    return out;
}

GestureTrial stub_trial(const std::string& pid, GestureClass g, Stage stage = Stage::Follow) {
    GestureTrial t;
    t.participant_id = pid;
    t.gesture = g;
    t.stage = stage;
    return t;
}

}  // namespace

TEST_CASE("metrics on a perfect confusion matrix") {
    Confusion m = {{3, 0}, {0, 7}};
    CHECK(accuracy(m) == 1.0);
    CHECK(macro_f1(m) == 1.0);
    CHECK(weighted_f1(m) == 1.0);
}

TEST_CASE("metrics hand example") {
    Confusion m = {{5, 1}, {2, 2}};
    CHECK(accuracy(m) == doctest::Approx(0.7));
    double f1_0 = 50.0 / 65.0;  // p=5/7, r=5/6
    double f1_1 = 4.0 / 7.0;    // p=2/3, r=1/2
    CHECK(macro_f1(m) == doctest::Approx((f1_0 + f1_1) / 2.0).epsilon(1e-12));
    CHECK(weighted_f1(m) == doctest::Approx((6.0 * f1_0 + 4.0 * f1_1) / 10.0).epsilon(1e-12));
}

TEST_CASE("zero-division convention: absent classes are excluded, wrongly predicted ones count") {
    // class 2 never appears as truth or prediction -> excluded from the macro mean;
    // class 1 has no support but receives a prediction -> counts with F1 = 0
    Confusion m = {{1, 1, 0}, {0, 0, 0}, {0, 0, 0}};
    CHECK(accuracy(m) == doctest::Approx(0.5));
    CHECK(macro_f1(m) == doctest::Approx((2.0 / 3.0 + 0.0) / 2.0).epsilon(1e-12));
    CHECK(weighted_f1(m) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("metrics validate their input") {
    CHECK_THROWS_AS(accuracy({}), std::invalid_argument);
    CHECK_THROWS_AS(macro_f1({{1, 2}}), std::invalid_argument);
    CHECK_THROWS_AS(weighted_f1({{1, -2}, {0, 3}}), std::invalid_argument);
}

TEST_CASE("metrics agree with an independent reimplementation on random matrices") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> size_dist(2, 6);
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t c = static_cast<std::size_t>(size_dist(rng));
        // sparse counts so empty rows/columns/classes occur regularly
        std::uniform_int_distribution<long> count(0, 4);
        Confusion m(c, std::vector<long>(c, 0));
        for (auto& row : m)
            for (auto& v : row) v = count(rng) <= 1 ? count(rng) : 0;
        bool any = false;
        for (const auto& row : m)
            for (long v : row) any |= v > 0;
        if (!any) m[0][0] = 1;
        auto want = ref_metrics(m);
        CHECK(accuracy(m) == doctest::Approx(want.acc).epsilon(1e-12));
        CHECK(macro_f1(m) == doctest::Approx(want.macro).epsilon(1e-12));
        CHECK(weighted_f1(m) == doctest::Approx(want.weighted).epsilon(1e-12));
    }
}

TEST_CASE("loso splits: one fold per subject, train is everyone else") {
    std::vector<GestureTrial> trials;
    for (const char* pid : {"P0", "P1", "P2"})
        for (int g = 0; g < 2; ++g) trials.push_back(stub_trial(pid, static_cast<GestureClass>(g)));
    auto plan = loso_splits(trials);
    REQUIRE(plan.folds.size() == 3);
    CHECK(plan.fold_names == std::vector<std::string>{"P0", "P1", "P2"});
    for (std::size_t f = 0; f < 3; ++f) {
        CHECK(plan.folds[f].test_trials.size() == 2);
        CHECK(plan.folds[f].train_trials.size() == 4);
        for (std::size_t id : plan.folds[f].test_trials)
            CHECK(trials[id].participant_id == plan.fold_names[f]);
        for (std::size_t id : plan.folds[f].train_trials)
            CHECK(trials[id].participant_id != plan.fold_names[f]);
    }
    audit_no_leakage(plan);
    CHECK_THROWS_AS(loso_splits({stub_trial("P0", GestureClass::Vertical)}), std::invalid_argument);
}

TEST_CASE("stratified k-fold balances subjects and gestures across folds") {
    std::vector<GestureTrial> trials;
    for (int p = 0; p < 4; ++p)
        for (int g = 0; g < 5; ++g)
            for (int r = 0; r < 12; ++r)
                trials.push_back(stub_trial("P" + std::to_string(p), static_cast<GestureClass>(g)));
    auto plan = stratified_kfold_by_trial(trials, 4, 7);
    REQUIRE(plan.folds.size() == 4);
    audit_no_leakage(plan);
    std::set<std::size_t> seen;
    for (const auto& fold : plan.folds) {
        CHECK(fold.test_trials.size() == 60);
        CHECK(fold.train_trials.size() == 180);
        // per subject and per (subject,gesture), the deal is even
        std::map<std::string, int> per_subject;
        std::map<std::pair<std::string, int>, int> per_cell;
        for (std::size_t id : fold.test_trials) {
            seen.insert(id);
            per_subject[trials[id].participant_id] += 1;
            per_cell[{trials[id].participant_id, static_cast<int>(trials[id].gesture)}] += 1;
        }
        for (const auto& [pid, n] : per_subject) CHECK(n == 15);
        for (const auto& [cell, n] : per_cell) CHECK(n == 3);
    }
    CHECK(seen.size() == trials.size());  // every trial is tested exactly once
}

TEST_CASE("stratified k-fold is deterministic in the seed and validates inputs") {
    std::vector<GestureTrial> trials;
    for (int p = 0; p < 2; ++p)
        for (int r = 0; r < 6; ++r)
            trials.push_back(stub_trial("P" + std::to_string(p), GestureClass::Vertical));
    auto a = stratified_kfold_by_trial(trials, 3, 5);
    auto b = stratified_kfold_by_trial(trials, 3, 5);
    for (std::size_t f = 0; f < a.folds.size(); ++f)
        CHECK(a.folds[f].test_trials == b.folds[f].test_trials);
    CHECK_THROWS_AS(stratified_kfold_by_trial(trials, 1, 5), std::invalid_argument);
    CHECK_THROWS_AS(stratified_kfold_by_trial(trials, 7, 5), std::invalid_argument);
}

TEST_CASE("audit_no_leakage catches an overlapping fold") {
    SplitPlan plan;
    plan.folds.push_back({{0, 1, 2}, {2, 3}});
    CHECK_THROWS_AS(audit_no_leakage(plan), std::logic_error);
}

TEST_CASE("cross-stage run requires all four stages") {
    std::vector<GestureTrial> trials;
    for (int s = 0; s < 3; ++s)  // Recall missing
        trials.push_back(stub_trial("P0", GestureClass::Vertical, static_cast<Stage>(s)));
    models::ModelSpec spec;
    RunOptions opts;
    CHECK_THROWS_AS(run_cross_stage(trials, spec, opts), std::invalid_argument);
}

TEST_CASE("run_task end-to-end smoke on a tiny synthetic session") {
    synthgen::SessionPlan splan;
    splan.subjects = 2;
    splan.repetitions = 1;
    auto session = synthgen::generate_session(splan, 5);
    auto raw = ingest::parse_log(session.log_text);
    auto sync = ingest::synchronize(raw);
    auto seg = ingest::segment_trials(sync.frames, raw.events);
    REQUIRE(seg.trials.size() == 40);

    models::ModelSpec spec;  // tinyhar, W=32, D=48
    auto plan = loso_splits(seg.trials, Task::GestureRecognition);
    RunOptions opts;
    opts.train.max_epochs = 2;
    opts.train.patience = 2;
    EvalReport rep = run_task(seg.trials, spec, plan, opts);
    REQUIRE(rep.folds.size() == 2);
    CHECK(rep.model == "tinyhar");
    CHECK(rep.class_names.size() == 5);
    CHECK(rep.pooled_confusion.size() == 5);
    long pooled_total = 0;
    for (const auto& row : rep.pooled_confusion)
        for (long v : row) pooled_total += v;
    // every test window of every fold lands in the pooled confusion
    std::size_t test_windows = 0;
    for (const auto& f : rep.folds) {
        test_windows += f.test_windows;
        CHECK(f.epochs_run >= 1);
        CHECK(f.accuracy >= 0.0);
        CHECK(f.accuracy <= 1.0);
    }
    CHECK(pooled_total == static_cast<long>(test_windows));
    CHECK(rep.to_text().find("mean") != std::string::npos);
    CHECK(rep.to_csv().find("fold,accuracy") != std::string::npos);
    CHECK(rep.confusion_csv().find("true\\pred") != std::string::npos);
}
