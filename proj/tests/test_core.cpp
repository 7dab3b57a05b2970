#include "doctest.h"

#include "tinygaze/core.hpp"

#include <random>

using namespace tinygaze;

TEST_CASE("flatten identity and round trip") {
    auto v = flatten_transform(Transform4::identity());
    double expect[16] = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
    for (int i = 0; i < 16; ++i) CHECK(v[static_cast<std::size_t>(i)] == expect[i]);
}

TEST_CASE("flatten translation-only places offsets at 3,7,11") {
    Transform4 t;
    t.at(0, 3) = 0.1;
    t.at(1, 3) = -0.2;
    t.at(2, 3) = 0.45;
    auto v = flatten_transform(t);
    CHECK(v[3] == 0.1);
    CHECK(v[7] == -0.2);
    CHECK(v[11] == 0.45);
    CHECK(v[0] == 1.0);
    CHECK(v[5] == 1.0);
    CHECK(v[10] == 1.0);
}

TEST_CASE("flatten/unflatten are exact inverses on random transforms") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        Transform4 t;
        for (auto& v : t.m) v = dist(rng);
        CHECK(unflatten_transform(flatten_transform(t)) == t);
    }
}

TEST_CASE("validate_transform identity has zero residuals") {
    auto rep = validate_transform(Transform4::identity(), 1e-6);
    CHECK(rep.pass);
    CHECK(rep.homogeneous_deviation == 0.0);
    CHECK(rep.orthonormality_residual == 0.0);
}

TEST_CASE("validate_transform flags bad homogeneous row") {
    Transform4 t;
    t.at(3, 3) = 1.01;
    auto rep = validate_transform(t, 1e-6);
    CHECK_FALSE(rep.pass);
    CHECK(rep.homogeneous_deviation == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("validate_transform flags scaled rotation block") {
    Transform4 t;
    for (int i = 0; i < 3; ++i) t.at(i, i) = 1.1;
    auto rep = validate_transform(t, 1e-6);
    CHECK_FALSE(rep.pass);
    // diagonal of R^T R is 1.21, residual 0.21
    CHECK(rep.orthonormality_residual == doctest::Approx(0.21).epsilon(1e-12));
}

TEST_CASE("enum codes are stable") {
    CHECK(static_cast<int>(GestureClass::Vertical) == 0);
    CHECK(static_cast<int>(GestureClass::Horizontal) == 1);
    CHECK(static_cast<int>(GestureClass::L0) == 2);
    CHECK(static_cast<int>(GestureClass::L270) == 3);
    CHECK(static_cast<int>(GestureClass::Z0) == 4);
    CHECK(static_cast<int>(Stage::Follow) == 0);
    CHECK(static_cast<int>(Stage::Fixed) == 1);
    CHECK(static_cast<int>(Stage::IRecall) == 2);
    CHECK(static_cast<int>(Stage::Recall) == 3);
    for (int g = 0; g < kNumGestures; ++g) {
        auto gc = static_cast<GestureClass>(g);
        CHECK(gesture_from_token(gesture_token(gc)) == gc);
    }
    for (int s = 0; s < kNumStages; ++s) {
        auto st = static_cast<Stage>(s);
        CHECK(stage_from_token(stage_token(st)) == st);
    }
}

TEST_CASE("modality dimensionalities") {
    CHECK(modality_dim(Modality::Head) == 16);
    CHECK(modality_dim(Modality::Eyes) == 32);
    CHECK(modality_dim(Modality::LeftEye) == 16);
    CHECK(modality_dim(Modality::RightEye) == 16);
    CHECK(modality_dim(Modality::EyeHead) == 48);
}
