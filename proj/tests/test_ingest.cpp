#include "doctest.h"

#include "tinygaze/ingest.hpp"
#include "tinygaze/synthgen.hpp"
#include "tinygaze/util.hpp"

#include <sstream>
#include <string>

using namespace tinygaze;
using namespace tinygaze::ingest;

namespace {

std::string sample_line(double t, const std::string& channel, double marker = 0.0) {
    std::ostringstream s;
    s << "S " << fmt_double(t) << " " << channel;
    Transform4 id;
    id.at(0, 3) = marker;  // distinguishes transforms in assertions
    for (double v : id.m) s << " " << fmt_double(v);
    return s.str() + "\n";
}

std::string event_line(double t, const std::string& kind, const std::string& pid = "P0",
                       const std::string& gesture = "V", const std::string& stage = "FOLLOW",
                       int rep = 1) {
    std::ostringstream s;
    s << "E " << fmt_double(t) << " " << kind << " " << pid << " " << gesture << " " << stage << " "
      << rep << "\n";
    return s.str();
}

// one synchronized frame triplet at time t
std::string frame_lines(double t, double marker = 0.0) {
    return sample_line(t, "HEAD", marker) + sample_line(t, "LEYE", marker) +
           sample_line(t, "REYE", marker);
}

}  // namespace

TEST_CASE("parse_log rejects logs with no valid records") {
    CHECK_THROWS_AS(parse_log(""), std::runtime_error);
    CHECK_THROWS_AS(parse_log("garbage line\nanother one\n"), std::runtime_error);
}

TEST_CASE("parse_log skips malformed lines but keeps the rest") {
    std::string log;
    log += sample_line(0.0, "HEAD");
    log += sample_line(0.0, "LEYE");
    log += "S 0.1 HEAD 1 2 3\n";                               // too few floats
    log += sample_line(0.1, "NOSE");                           // unknown channel
    log += "E 0.2 TRIAL_START P0 V FOLLOW 1\n";
    log += "E 0.3 TRIAL_END P0 Q FOLLOW 1\n";                  // bad gesture token
    log += "E abc TRIAL_END P0 V FOLLOW 1\n";                  // bad timestamp
    log += "E 0.4 TRIAL_END P0 V FOLLOW 0\n";                  // repetition < 1
    log += "totally not a record\n";
    auto raw = parse_log(log);
    CHECK(raw.samples.size() == 2);
    CHECK(raw.events.size() == 1);
    CHECK(raw.skipped_lines == 6);
    CHECK(raw.samples[0].channel == Channel::Head);
    CHECK(raw.samples[1].channel == Channel::LeftEye);
    CHECK(raw.events[0].kind == EventKind::TrialStart);
    CHECK(raw.events[0].gesture == GestureClass::Vertical);
    CHECK(raw.events[0].stage == Stage::Follow);
}

TEST_CASE("synchronize joins nearest eye samples within the gap") {
    std::string log;
    log += sample_line(0.000, "HEAD", 1.0);
    log += sample_line(0.001, "LEYE", 2.0);
    log += sample_line(0.030, "LEYE", 3.0);
    log += sample_line(0.002, "REYE", 4.0);
    log += sample_line(0.100, "HEAD", 5.0);  // nearest eyes are > 1/30 s away
    auto raw = parse_log(log);
    auto sync = synchronize(raw);
    REQUIRE(sync.frames.size() == 1);
    CHECK(sync.dropped == 1);
    CHECK(sync.frames[0].t == 0.0);
    CHECK(sync.frames[0].head.at(0, 3) == 1.0);
    CHECK(sync.frames[0].left_eye.at(0, 3) == 2.0);  // 0.001 beats 0.030
    CHECK(sync.frames[0].right_eye.at(0, 3) == 4.0);
}

TEST_CASE("synchronize drops all heads when an eye channel is missing") {
    std::string log = sample_line(0.0, "HEAD") + sample_line(0.0, "LEYE");
    auto raw = parse_log(log);
    auto sync = synchronize(raw);
    CHECK(sync.frames.empty());
    CHECK(sync.dropped == 1);
}

TEST_CASE("synchronize honours a custom max_gap and validates it") {
    std::string log;
    log += sample_line(0.000, "HEAD");
    log += sample_line(0.010, "LEYE");
    log += sample_line(0.010, "REYE");
    auto raw = parse_log(log);
    CHECK(synchronize(raw, 0.02).frames.size() == 1);
    CHECK(synchronize(raw, 0.005).frames.empty());
    CHECK_THROWS_AS(synchronize(raw, 0.0), std::invalid_argument);
}

TEST_CASE("segment_trials slices frames between paired events") {
    std::string log;
    log += event_line(-0.01, "TRIAL_START", "P0", "H", "FIXED", 2);
    for (int i = 0; i < 10; ++i) log += frame_lines(0.02 * i);
    log += event_line(0.19, "TRIAL_END", "P0", "H", "FIXED", 2);
    auto raw = parse_log(log);
    auto sync = synchronize(raw);
    auto seg = segment_trials(sync.frames, raw.events);
    CHECK(seg.errors.empty());
    REQUIRE(seg.trials.size() == 1);
    const auto& t = seg.trials[0];
    CHECK(t.participant_id == "P0");
    CHECK(t.gesture == GestureClass::Horizontal);
    CHECK(t.stage == Stage::Fixed);
    CHECK(t.repetition == 2);
    CHECK(t.frames.size() == 10);
}

TEST_CASE("segment_trials reports short trials and unpaired events") {
    std::string log;
    log += event_line(-0.01, "TRIAL_START", "P0", "V", "FOLLOW", 1);
    for (int i = 0; i < 3; ++i) log += frame_lines(0.02 * i);  // < 8 frames
    log += event_line(0.10, "TRIAL_END", "P0", "V", "FOLLOW", 1);
    log += event_line(0.50, "TRIAL_START", "P0", "V", "FOLLOW", 2);  // never ends
    log += event_line(0.60, "TRIAL_END", "P1", "Z0", "RECALL", 1);   // never started
    auto raw = parse_log(log);
    auto sync = synchronize(raw);
    auto seg = segment_trials(sync.frames, raw.events);
    CHECK(seg.trials.empty());
    REQUIRE(seg.errors.size() == 3);
    bool short_trial = false, unpaired_start = false, unpaired_end = false;
    for (const auto& e : seg.errors) {
        if (e.find("frames") != std::string::npos) short_trial = true;
        if (e.find("unpaired TRIAL_START") != std::string::npos) unpaired_start = true;
        if (e.find("unpaired TRIAL_END") != std::string::npos) unpaired_end = true;
    }
    CHECK(short_trial);
    CHECK(unpaired_start);
    CHECK(unpaired_end);
}

TEST_CASE("segment_trials rejects end-before-start pairs") {
    std::string log;
    for (int i = 0; i < 10; ++i) log += frame_lines(0.02 * i);
    log += event_line(0.19, "TRIAL_END", "P0", "V", "FOLLOW", 1);
    log += event_line(0.30, "TRIAL_START", "P0", "V", "FOLLOW", 1);
    auto raw = parse_log(log);
    auto sync = synchronize(raw);
    auto seg = segment_trials(sync.frames, raw.events);
    CHECK(seg.trials.empty());
    REQUIRE(seg.errors.size() == 1);
    CHECK(seg.errors[0].find("start not before end") != std::string::npos);
}

TEST_CASE("segmented trials come back in session time order") {
    std::string log;
    log += event_line(0.99, "TRIAL_START", "P1", "H", "FOLLOW", 1);
    log += event_line(-0.01, "TRIAL_START", "P0", "V", "FOLLOW", 1);
    for (int i = 0; i < 10; ++i) log += frame_lines(0.02 * i);
    log += event_line(0.20, "TRIAL_END", "P0", "V", "FOLLOW", 1);
    for (int i = 0; i < 10; ++i) log += frame_lines(1.0 + 0.02 * i);
    log += event_line(1.20, "TRIAL_END", "P1", "H", "FOLLOW", 1);
    auto raw = parse_log(log);
    auto sync = synchronize(raw);
    auto seg = segment_trials(sync.frames, raw.events);
    REQUIRE(seg.trials.size() == 2);
    CHECK(seg.trials[0].participant_id == "P0");
    CHECK(seg.trials[1].participant_id == "P1");
}

TEST_CASE("synthesized sessions survive the full ingest pipeline losslessly") {
    synthgen::SessionPlan plan;
    plan.subjects = 2;
    plan.repetitions = 1;
    auto session = synthgen::generate_session(plan, 99);
    auto raw = parse_log(session.log_text);
    CHECK(raw.skipped_lines == 0);
    auto sync = synchronize(raw);
    CHECK(sync.dropped == 0);
    auto seg = segment_trials(sync.frames, raw.events);
    CHECK(seg.errors.empty());
    REQUIRE(seg.trials.size() == session.manifest.size());
    for (std::size_t i = 0; i < seg.trials.size(); ++i) {
        const auto& got = seg.trials[i];
        const auto& want = session.manifest[i];
        CHECK(got.participant_id == want.participant_id);
        CHECK(got.gesture == want.gesture);
        CHECK(got.stage == want.stage);
        CHECK(got.repetition == want.repetition);
        CHECK(got.frames.size() == want.frame_count);
    }
}
