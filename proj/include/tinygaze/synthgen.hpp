#pragma once

#include "tinygaze/core.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace tinygaze::synthgen {

struct Vec2 {
    double x = 0, y = 0;
};

// Screen-space polyline in logical points; y grows downward; 300x300 box
// centered on the origin.
struct GestureTemplate {
    GestureClass gesture = GestureClass::Vertical;
    std::vector<Vec2> polyline;
    double path_length = 0;
};

GestureTemplate gesture_template(GestureClass g);

double nominal_duration(const GestureTemplate& tpl, double dot_speed_pts_per_s);

// Fixed per subject for a whole session; this is the identity signal.
struct SubjectStyle {
    std::string subject_id;
    double head_share = 0.7;       // alpha in [0.3, 0.95]
    double speed_gain = 1.0;       // [0.8, 1.25]
    double amplitude_gain = 1.0;   // [0.85, 1.15]
    double head_distance = 0.40;   // meters, 0.40 +- 0.05
    double head_offset[3] = {0, 0, 0};
    double tremor_freq_hz = 10.0;
    double tremor_amp_deg = 0.05;
    double noise_sigma_deg = 0.1;
};

struct TrialParams {
    double sample_rate_hz = 60.0;
    double dot_speed = 100.0;  // points per second
};

GestureTrial synthesize_trial(const GestureTemplate& tpl, const SubjectStyle& style, Stage stage,
                              std::mt19937_64& rng, const TrialParams& params = {});

struct SessionPlan {
    int subjects = 4;
    int repetitions = 3;
    double sample_rate_hz = 60.0;
    double dot_speed = 100.0;
    double noise_sigma_deg = 0.1;
    double alpha_min = 0.3;   // head_share range across subjects
    double alpha_max = 0.95;
};

struct ManifestEntry {
    std::string participant_id;
    GestureClass gesture;
    Stage stage;
    int repetition;
    std::size_t frame_count;
};

struct Session {
    std::string log_text;       // ingest log format
    std::string manifest_text;  // one line per trial
    std::vector<ManifestEntry> manifest;
};

// Deterministic given (plan, seed); trials use per-trial derived seeds.
Session generate_session(const SessionPlan& plan, std::uint64_t seed);

// Styles actually used for a given (plan, seed), in subject order.
std::vector<SubjectStyle> session_styles(const SessionPlan& plan, std::uint64_t seed);

std::string format_manifest(const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> parse_manifest(const std::string& text);

}  // namespace tinygaze::synthgen
