#pragma once

#include "tinygaze/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tinygaze::preprocess {

// Row-major T x D matrix of features plus the labels it inherits.
struct FeatureSequence {
    std::size_t rows = 0;  // T
    std::size_t cols = 0;  // D
    std::vector<double> values;
    GestureClass gesture = GestureClass::Vertical;
    std::string subject;
    std::string trial_id;
    Stage stage = Stage::Follow;

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

struct LabeledWindow {
    std::size_t rows = 0;  // W
    std::size_t cols = 0;  // D
    std::vector<double> values;
    GestureClass gesture = GestureClass::Vertical;
    std::string subject;
    std::string trial_id;
    Stage stage = Stage::Follow;
    int window_index = 0;

    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

// Canonical 48-channel frame feature: left eye (16) | right eye (16) | head (16).
constexpr std::size_t kFullDim = 48;
void frame_features(const FrameSample& f, double* out48);

// Linear interpolation of every channel onto T points uniformly spanning
// [t_first, t_last]; endpoints exact. Errors with < 2 frames.
FeatureSequence resample(const GestureTrial& trial, std::size_t t = 64);

// Column slice of the canonical 48-channel sequence for a modality.
FeatureSequence select_modality(const FeatureSequence& full, Modality m);

struct NormStats {
    std::vector<double> mean;
    std::vector<double> std;  // entries < 1e-12 forced to 1
    std::size_t population = 0;
};

NormStats zscore_fit(const std::vector<LabeledWindow>& windows);
void zscore_apply(LabeledWindow& w, const NormStats& stats);
void zscore_apply(FeatureSequence& seq, const NormStats& stats);

// Stride max(1, round(W*(1-overlap))); starts 0,s,2s,... while start+W <= T,
// plus the tail start T-W if not already produced.
std::vector<std::size_t> window_starts(std::size_t t, std::size_t w, double overlap);

std::vector<LabeledWindow> make_windows(const FeatureSequence& seq, std::size_t w, double overlap);

enum class WindowDomain : int { Resampled = 0, Raw = 1 };

struct PrepConfig {
    std::size_t resample_len = 64;  // T
    std::size_t window_len = 32;    // W
    double overlap = 0.5;
    Modality modality = Modality::EyeHead;
    WindowDomain domain = WindowDomain::Resampled;
    double raw_window_seconds = 1.5;  // only for WindowDomain::Raw
};

// Full trial -> windows pipeline (no normalization; that is split-aware).
std::vector<LabeledWindow> windows_for_trial(const GestureTrial& trial, const std::string& trial_id,
                                             const PrepConfig& cfg);

// Dataset cache: <prefix>.manifest text + <prefix>.tensors, 64-bit LE doubles,
// row-major [window, frame, dim].
void write_window_cache(const std::string& prefix, const std::vector<LabeledWindow>& windows,
                        const PrepConfig& cfg);
std::vector<LabeledWindow> read_window_cache(const std::string& prefix);

}  // namespace tinygaze::preprocess
