#include "doctest.h"

#include "tinygaze/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <random>

using namespace tinygaze;
using namespace tinygaze::models;
using tinygaze::net::Tensor;

namespace {

Tensor random_input(std::size_t b, std::size_t w, std::size_t d, std::uint64_t seed) {
    Tensor x({b, w, d});
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (auto& v : x.data) v = dist(rng);
    return x;
}

}  // namespace

TEST_CASE("model names round trip") {
    for (auto kind : {ModelKind::TinyHAR, ModelKind::DeepConvLSTM, ModelKind::SAHAR})
        CHECK(model_from_name(model_name(kind)) == kind);
    CHECK_FALSE(model_from_name("lenet").has_value());
}

TEST_CASE("parameter budgets at the reference configuration") {
    auto tiny = build_model({ModelKind::TinyHAR, 32, 48, 5, 7});
    auto dcl = build_model({ModelKind::DeepConvLSTM, 32, 48, 5, 7});
    auto sahar = build_model({ModelKind::SAHAR, 32, 48, 5, 7});
    auto nt = tiny.count_params();
    auto nd = dcl.count_params();
    auto ns = sahar.count_params();
    // the compact model stays in the tens of thousands...
    CHECK(nt >= 30000);
    CHECK(nt <= 60000);
    // ...the conv-LSTM baseline is around a million...
    CHECK(nd >= 700000);
    CHECK(nd <= 1400000);
    // ...and the size gaps hold
    CHECK(static_cast<double>(nd) / static_cast<double>(nt) >= 15.0);
    CHECK(static_cast<double>(ns) / static_cast<double>(nt) >= 6.0);
}

TEST_CASE("size ordering holds across the supported configuration grid") {
    for (std::size_t w : {32u, 64u})
        for (std::size_t d : {16u, 32u, 48u})
            for (std::size_t c : {4u, 5u}) {
                auto nt = build_model({ModelKind::TinyHAR, w, d, c, 1}).count_params();
                auto ns = build_model({ModelKind::SAHAR, w, d, c, 1}).count_params();
                auto nd = build_model({ModelKind::DeepConvLSTM, w, d, c, 1}).count_params();
                CHECK(nt < ns);
                CHECK(ns < nd);
            }
}

TEST_CASE("parameter counts are deterministic and seed-independent") {
    CHECK(build_model({ModelKind::TinyHAR, 32, 48, 5, 1}).count_params() ==
          build_model({ModelKind::TinyHAR, 32, 48, 5, 999}).count_params());
}

TEST_CASE("window size validation") {
    CHECK_THROWS_AS(build_tinyhar(4, 48, 5, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_deepconvlstm(12, 48, 5, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_sahar(4, 48, 5, 1), std::invalid_argument);
}

TEST_CASE("forward produces finite logits of the right shape") {
    Tensor x = random_input(2, 32, 48, 3);
    for (auto kind : {ModelKind::TinyHAR, ModelKind::DeepConvLSTM, ModelKind::SAHAR}) {
        auto g = build_model({kind, 32, 48, 5, 7});
        Tensor logits = g.forward(x);
        REQUIRE(logits.shape == std::vector<std::size_t>{2, 5});
        CHECK(logits.all_finite());
    }
}

TEST_CASE("identical seeds give identical models; different seeds differ") {
    Tensor x = random_input(1, 32, 48, 4);
    auto a = build_model({ModelKind::TinyHAR, 32, 48, 5, 11});
    auto b = build_model({ModelKind::TinyHAR, 32, 48, 5, 11});
    auto c = build_model({ModelKind::TinyHAR, 32, 48, 5, 12});
    CHECK(a.forward(x).data == b.forward(x).data);
    CHECK(a.forward(x).data != c.forward(x).data);
}

TEST_CASE("analytic gradients match finite differences on scaled-down builds") {
    struct Case {
        const char* name;
        net::ModelGraph graph;
    };
    Case cases[] = {
        {"tinyhar", build_tinyhar(8, 4, 3, 61, 4)},
        {"deepconvlstm", build_deepconvlstm(24, 4, 3, 61, 8, 16)},
        {"sahar", build_sahar(8, 4, 3, 61, 8, 2, 16, 1)},
    };
    for (auto& c : cases) {
        CAPTURE(c.name);
        Tensor x = random_input(2, c.graph.input_width(), c.graph.input_dim(), 71);
        double err = net::gradient_check(c.graph, x, {0, 2});
        CHECK(err < 1e-4);
    }
}

TEST_CASE("predict_window takes the argmax and breaks ties to the lowest index") {
    std::mt19937_64 rng(1);
    net::ModelGraph g("probe", 4, 3, 3, 1);
    g.add(std::make_unique<net::LastTimestep>());
    g.add(std::make_unique<net::Linear>(3, 3, rng));
    auto* w = g.parameters()[0];
    auto* b = g.parameters()[1];
    std::fill(w->value.data.begin(), w->value.data.end(), 0.0);
    std::fill(b->value.data.begin(), b->value.data.end(), 0.0);

    Tensor window({4, 3});
    auto pred = predict_window(g, window);
    CHECK(pred.label == 0);  // all-uniform tie
    CHECK(pred.probabilities.size() == 3);
    CHECK(pred.probabilities[0] == doctest::Approx(1.0 / 3.0));

    b->value.data = {0.0, 2.0, 0.0};
    CHECK(predict_window(g, window).label == 1);
    CHECK_THROWS_AS(predict_window(g, Tensor({3, 4})), std::invalid_argument);
}

TEST_CASE("predict_trial majority vote with probability-mass tie break") {
    std::mt19937_64 rng(1);
    net::ModelGraph g("probe", 2, 3, 3, 1);
    g.add(std::make_unique<net::LastTimestep>());
    g.add(std::make_unique<net::Linear>(3, 3, rng));
    auto* w = g.parameters()[0];
    auto* b = g.parameters()[1];
    // logits = last frame verbatim
    std::fill(w->value.data.begin(), w->value.data.end(), 0.0);
    for (std::size_t i = 0; i < 3; ++i) w->value.at2(i, i) = 1.0;
    std::fill(b->value.data.begin(), b->value.data.end(), 0.0);

    // majority: two windows vote class 2, one votes class 0
    Tensor wins({3, 2, 3});
    auto set_last = [&](std::size_t i, double a, double bb, double c) {
        wins.at3(i, 1, 0) = a;
        wins.at3(i, 1, 1) = bb;
        wins.at3(i, 1, 2) = c;
    };
    set_last(0, 0, 0, 5);
    set_last(1, 0, 0, 5);
    set_last(2, 5, 0, 0);
    CHECK(predict_trial(g, wins) == 2);

    // 1-1 vote split; class 0 carries more probability mass
    Tensor tied({2, 2, 3});
    tied.at3(0, 1, 0) = 6.0;  // confident class 0
    tied.at3(1, 1, 1) = 0.5;  // lukewarm class 1
    CHECK(predict_trial(g, tied) == 0);

    CHECK_THROWS_AS(predict_trial(g, Tensor({0, 2, 3})), std::invalid_argument);
}

TEST_CASE("a scaled-down model memorizes a tiny labelled set") {
    auto g = build_tinyhar(8, 4, 3, 5, 4);
    const std::size_t n = 18;
    Tensor x = random_input(n, 8, 4, 9);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % 3);
    net::AdamConfig adam{3e-3};
    double acc = 0;
    for (int step = 0; step < 300; ++step) {
        g.zero_grad();
        Tensor logits = g.forward(x);
        auto ce = net::softmax_cross_entropy(logits, y);
        g.backward(ce.dlogits);
        net::adam_step(g, adam);
        if (step % 20 == 19) {
            Tensor l = g.forward(x);
            std::size_t hit = 0;
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t best = 0;
                for (std::size_t j = 1; j < 3; ++j)
                    if (l.at2(i, j) > l.at2(i, best)) best = j;
                if (static_cast<int>(best) == y[i]) ++hit;
            }
            acc = static_cast<double>(hit) / static_cast<double>(n);
            if (acc >= 1.0) break;
        }
    }
    CHECK(acc >= 0.9);
}

TEST_CASE("checkpoints restore a model and reject the wrong architecture") {
    auto g = build_tinyhar(8, 4, 3, 13, 4);
    Tensor x = random_input(1, 8, 4, 2);
    Tensor y0 = g.forward(x);
    std::string prefix = "/tmp/tg_model_ckpt";
    g.save(prefix);
    auto g2 = build_tinyhar(8, 4, 3, 99, 4);
    g2.load(prefix);
    CHECK(g2.forward(x).data == y0.data);
    auto wrong = build_sahar(8, 4, 3, 1, 8, 2, 16, 1);
    CHECK_THROWS_AS(wrong.load(prefix), std::runtime_error);
    std::remove((prefix + ".params").c_str());
    std::remove((prefix + ".manifest").c_str());
}
