#include "doctest.h"

#include "tinygaze/synthgen.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

using namespace tinygaze;
using namespace tinygaze::synthgen;

namespace {

SubjectStyle clean_style(double alpha) {
    SubjectStyle s;
    s.subject_id = "P0";
    s.head_share = alpha;
    s.speed_gain = 1.0;
    s.amplitude_gain = 1.0;
    s.head_distance = 0.40;
    s.tremor_amp_deg = 0.0;
    s.noise_sigma_deg = 0.0;
    return s;
}

double yaw_of(const Transform4& t) { return std::atan2(-t.at(2, 0), t.at(0, 0)); }
double pitch_of(const Transform4& t) { return std::asin(-t.at(1, 2)); }

double variance(const std::vector<double>& v) {
    double mu = 0;
    for (double x : v) mu += x;
    mu /= static_cast<double>(v.size());
    double var = 0;
    for (double x : v) var += (x - mu) * (x - mu);
    return var / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("template path lengths") {
    CHECK(gesture_template(GestureClass::Vertical).path_length == doctest::Approx(300.0));
    CHECK(gesture_template(GestureClass::Horizontal).path_length == doctest::Approx(300.0));
    CHECK(gesture_template(GestureClass::L0).path_length == doctest::Approx(600.0));
    CHECK(gesture_template(GestureClass::L270).path_length == doctest::Approx(600.0));
    CHECK(gesture_template(GestureClass::Z0).path_length ==
          doctest::Approx(600.0 + 300.0 * std::sqrt(2.0)));
}

TEST_CASE("L270 corners are the L0 corners rotated by 270 degrees") {
    auto tpl = gesture_template(GestureClass::L270);
    REQUIRE(tpl.polyline.size() == 3);
    CHECK(tpl.polyline[0].x == doctest::Approx(150.0));
    CHECK(tpl.polyline[0].y == doctest::Approx(150.0));
    CHECK(tpl.polyline[1].x == doctest::Approx(-150.0));
    CHECK(tpl.polyline[1].y == doctest::Approx(150.0));
    CHECK(tpl.polyline[2].x == doctest::Approx(-150.0));
    CHECK(tpl.polyline[2].y == doctest::Approx(-150.0));
}

TEST_CASE("templates stay inside the 300-point box") {
    for (int g = 0; g < kNumGestures; ++g)
        for (const auto& p : gesture_template(static_cast<GestureClass>(g)).polyline) {
            CHECK(std::abs(p.x) <= 150.0 + 1e-9);
            CHECK(std::abs(p.y) <= 150.0 + 1e-9);
        }
}

TEST_CASE("nominal durations at 100 points per second") {
    CHECK(nominal_duration(gesture_template(GestureClass::Vertical), 100.0) == doctest::Approx(3.0));
    CHECK(nominal_duration(gesture_template(GestureClass::L0), 100.0) == doctest::Approx(6.0));
    CHECK(nominal_duration(gesture_template(GestureClass::Z0), 100.0) ==
          doctest::Approx(10.242640687119284));
    CHECK_THROWS_AS(nominal_duration(gesture_template(GestureClass::Vertical), 0.0),
                    std::invalid_argument);
}

TEST_CASE("vertical trial at nominal speed runs 180 frames at 60 Hz") {
    std::mt19937_64 rng(1);
    auto trial = synthesize_trial(gesture_template(GestureClass::Vertical), clean_style(0.7),
                                  Stage::Follow, rng);
    CHECK(trial.frames.size() == 180);
    for (std::size_t i = 0; i < trial.frames.size(); ++i)
        CHECK(trial.frames[i].t == doctest::Approx(static_cast<double>(i) / 60.0).epsilon(1e-12));
    CHECK(trial.participant_id == "P0");
    CHECK(trial.gesture == GestureClass::Vertical);
}

TEST_CASE("corner dwells lengthen multi-segment trials") {
    std::mt19937_64 rng(1);
    auto trial =
        synthesize_trial(gesture_template(GestureClass::L0), clean_style(0.7), Stage::Follow, rng);
    // 6.0 s of travel plus one 0.12 s corner dwell
    CHECK(trial.frames.size() == static_cast<std::size_t>(std::llround(6.12 * 60.0)));
}

TEST_CASE("all generated transforms are valid rigid poses") {
    std::mt19937_64 rng(7);
    SubjectStyle s = clean_style(0.6);
    s.tremor_amp_deg = 0.05;
    s.noise_sigma_deg = 0.1;
    auto trial = synthesize_trial(gesture_template(GestureClass::Z0), s, Stage::Recall, rng);
    for (const auto& f : trial.frames)
        for (const auto* t : {&f.head, &f.left_eye, &f.right_eye}) {
            auto rep = validate_transform(*t, 1e-9);
            CHECK(rep.pass);
        }
}

TEST_CASE("head share 1 keeps the eyes still; head share 0 keeps the head still") {
    std::mt19937_64 rng(2);
    auto all_head = synthesize_trial(gesture_template(GestureClass::Horizontal), clean_style(1.0),
                                     Stage::Follow, rng);
    for (const auto& f : all_head.frames) {
        CHECK(std::abs(yaw_of(f.left_eye)) < 1e-12);
        CHECK(std::abs(pitch_of(f.left_eye)) < 1e-12);
    }
    double head_yaw_range = 0;
    for (const auto& f : all_head.frames) head_yaw_range = std::max(head_yaw_range, std::abs(yaw_of(f.head)));
    CHECK(head_yaw_range > 0.01);

    auto all_eye = synthesize_trial(gesture_template(GestureClass::Horizontal), clean_style(0.0),
                                    Stage::Follow, rng);
    for (const auto& f : all_eye.frames) {
        CHECK(std::abs(yaw_of(f.head)) < 1e-12);
        CHECK(std::abs(pitch_of(f.head)) < 1e-12);
    }
}

TEST_CASE("head and eye angles sum to the dot direction") {
    std::mt19937_64 rng(3);
    auto trial = synthesize_trial(gesture_template(GestureClass::Vertical), clean_style(0.65),
                                  Stage::Follow, rng);
    // frame 0: dot at (0, -150) points, no noise/tremor in clean_style
    const auto& f0 = trial.frames.front();
    double want_pitch = std::atan2(150.0 * 0.0001558, 0.40);
    CHECK(yaw_of(f0.head) + yaw_of(f0.left_eye) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(pitch_of(f0.head) + pitch_of(f0.left_eye) == doctest::Approx(want_pitch).epsilon(1e-9));
}

TEST_CASE("eye sockets sit an interocular distance apart") {
    std::mt19937_64 rng(4);
    auto trial = synthesize_trial(gesture_template(GestureClass::L0), clean_style(0.5),
                                  Stage::Follow, rng);
    for (const auto& f : trial.frames) {
        double dx = f.right_eye.at(0, 3) - f.left_eye.at(0, 3);
        double dy = f.right_eye.at(1, 3) - f.left_eye.at(1, 3);
        double dz = f.right_eye.at(2, 3) - f.left_eye.at(2, 3);
        CHECK(std::sqrt(dx * dx + dy * dy + dz * dz) == doctest::Approx(0.062).epsilon(1e-9));
    }
}

TEST_CASE("head yaw variance scales with the square of the head share") {
    std::mt19937_64 rng1(5), rng2(5);
    auto a = synthesize_trial(gesture_template(GestureClass::Horizontal), clean_style(0.9),
                              Stage::Follow, rng1);
    auto b = synthesize_trial(gesture_template(GestureClass::Horizontal), clean_style(0.3),
                              Stage::Follow, rng2);
    std::vector<double> ya, yb;
    for (const auto& f : a.frames) ya.push_back(yaw_of(f.head));
    for (const auto& f : b.frames) yb.push_back(yaw_of(f.head));
    double ratio = variance(ya) / variance(yb);
    double want = (0.9 / 0.3) * (0.9 / 0.3);
    CHECK(ratio > want * 0.9);
    CHECK(ratio < want * 1.1);
}

TEST_CASE("session generation is deterministic in the seed") {
    SessionPlan plan;
    plan.subjects = 2;
    plan.repetitions = 1;
    auto a = generate_session(plan, 42);
    auto b = generate_session(plan, 42);
    auto c = generate_session(plan, 43);
    CHECK(a.log_text == b.log_text);
    CHECK(a.manifest_text == b.manifest_text);
    CHECK(a.log_text != c.log_text);
}

TEST_CASE("session covers subjects x gestures x stages x repetitions") {
    SessionPlan plan;
    plan.subjects = 2;
    plan.repetitions = 1;
    auto s = generate_session(plan, 7);
    CHECK(s.manifest.size() == 2u * 5u * 4u * 1u);
    int p0 = 0, recall = 0;
    for (const auto& e : s.manifest) {
        if (e.participant_id == "P0") ++p0;
        if (e.stage == Stage::Recall) ++recall;
        CHECK(e.frame_count >= 2);
    }
    CHECK(p0 == 20);
    CHECK(recall == 10);
}

TEST_CASE("session plan validation") {
    SessionPlan plan;
    plan.subjects = 0;
    CHECK_THROWS_AS(generate_session(plan, 1), std::invalid_argument);
    plan.subjects = 1;
    plan.repetitions = 0;
    CHECK_THROWS_AS(generate_session(plan, 1), std::invalid_argument);
}

TEST_CASE("session styles are distinct per subject and respect the alpha range") {
    SessionPlan plan;
    plan.subjects = 6;
    auto styles = session_styles(plan, 11);
    REQUIRE(styles.size() == 6);
    for (std::size_t i = 0; i < styles.size(); ++i) {
        CHECK(styles[i].head_share >= plan.alpha_min);
        CHECK(styles[i].head_share <= plan.alpha_max);
        for (std::size_t j = i + 1; j < styles.size(); ++j)
            CHECK(std::abs(styles[i].head_share - styles[j].head_share) > 1e-3);
    }
    CHECK(styles.front().subject_id == "P0");
    CHECK(styles.back().subject_id == "P5");
}

TEST_CASE("manifest text round trips") {
    SessionPlan plan;
    plan.subjects = 2;
    plan.repetitions = 2;
    auto s = generate_session(plan, 3);
    auto parsed = parse_manifest(s.manifest_text);
    REQUIRE(parsed.size() == s.manifest.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i].participant_id == s.manifest[i].participant_id);
        CHECK(parsed[i].gesture == s.manifest[i].gesture);
        CHECK(parsed[i].stage == s.manifest[i].stage);
        CHECK(parsed[i].repetition == s.manifest[i].repetition);
        CHECK(parsed[i].frame_count == s.manifest[i].frame_count);
    }
}
