#pragma once

#include "tinygaze/core.hpp"

#include <string>
#include <vector>

namespace tinygaze::ingest {

enum class EventKind : int { TrialStart = 0, TrialEnd = 1 };

struct EventRecord {
    double t = 0;
    EventKind kind = EventKind::TrialStart;
    std::string participant_id;
    GestureClass gesture = GestureClass::Vertical;
    Stage stage = Stage::Follow;
    int repetition = 1;
};

enum class Channel : int { Head = 0, LeftEye = 1, RightEye = 2 };

struct SampleRecord {
    double t = 0;
    Channel channel = Channel::Head;
    Transform4 transform;
};

struct RawStream {
    std::vector<SampleRecord> samples;
    std::vector<EventRecord> events;
    std::size_t skipped_lines = 0;
};

// Line-delimited log; malformed lines are skipped and counted. Throws only
// when zero valid records were found.
RawStream parse_log(const std::string& text);

struct SyncResult {
    std::vector<FrameSample> frames;
    std::size_t dropped = 0;  // head samples without both eyes in range
};

// Nearest-timestamp join keyed on head samples; a frame is emitted only when
// both eye samples lie within max_gap of the head timestamp.
SyncResult synchronize(const RawStream& raw, double max_gap = 1.0 / 30.0);

struct SegmentResult {
    std::vector<GestureTrial> trials;
    std::vector<std::string> errors;  // unpaired events, short trials
};

SegmentResult segment_trials(const std::vector<FrameSample>& frames,
                             const std::vector<EventRecord>& events);

}  // namespace tinygaze::ingest
