#include "tinygaze/preprocess.hpp"

#include "tinygaze/util.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tinygaze::preprocess {

void frame_features(const FrameSample& f, double* out48) {
    auto le = flatten_transform(f.left_eye);
    auto re = flatten_transform(f.right_eye);
    auto hd = flatten_transform(f.head);
    std::copy(le.begin(), le.end(), out48);
    std::copy(re.begin(), re.end(), out48 + 16);
    std::copy(hd.begin(), hd.end(), out48 + 32);
}

namespace {

FeatureSequence resample_rows(const std::vector<double>& times, const std::vector<double>& rows,
                              std::size_t cols, std::size_t t_out) {
    std::size_t n = times.size();
    FeatureSequence out;
    out.rows = t_out;
    out.cols = cols;
    out.values.assign(t_out * cols, 0.0);
    double t0 = times.front(), t1 = times.back();
    double snap_eps = 1e-9 * (t1 - t0 > 0 ? t1 - t0 : 1.0);
    std::size_t seg = 0;
    for (std::size_t j = 0; j < t_out; ++j) {
        double tj = j + 1 == t_out
                        ? t1
                        : t0 + (t1 - t0) * static_cast<double>(j) / static_cast<double>(t_out - 1);
        while (seg + 2 < n && times[seg + 1] < tj) ++seg;
        double ta = times[seg], tb = times[seg + 1];
        const double* ra = &rows[seg * cols];
        const double* rb = &rows[(seg + 1) * cols];
        double u;
        // snap onto coincident source frames so they copy through exactly
        if (j == 0 || std::abs(tj - ta) <= snap_eps)
            u = 0.0;
        else if (std::abs(tj - tb) <= snap_eps)
            u = 1.0;
        else
            u = std::clamp(tb > ta ? (tj - ta) / (tb - ta) : 0.0, 0.0, 1.0);
        for (std::size_t c = 0; c < cols; ++c)
            out.values[j * cols + c] = u == 0.0 ? ra[c] : (u == 1.0 ? rb[c] : ra[c] + (rb[c] - ra[c]) * u);
    }
    // exact last frame
    for (std::size_t c = 0; c < cols; ++c)
        out.values[(t_out - 1) * cols + c] = rows[(n - 1) * cols + c];
    return out;
}

}  // namespace

FeatureSequence resample(const GestureTrial& trial, std::size_t t) {
    if (trial.frames.size() < 2)
        throw std::invalid_argument("resample: trial has fewer than 2 frames");
    if (t < 2) throw std::invalid_argument("resample: T must be >= 2");
    std::vector<double> times(trial.frames.size());
    std::vector<double> rows(trial.frames.size() * kFullDim);
    for (std::size_t i = 0; i < trial.frames.size(); ++i) {
        times[i] = trial.frames[i].t;
        frame_features(trial.frames[i], &rows[i * kFullDim]);
    }
    FeatureSequence out = resample_rows(times, rows, kFullDim, t);
    out.gesture = trial.gesture;
    out.subject = trial.participant_id;
    out.stage = trial.stage;
    return out;
}

FeatureSequence select_modality(const FeatureSequence& full, Modality m) {
    if (full.cols != kFullDim)
        throw std::invalid_argument("select_modality: expected 48 columns, got " +
                                    std::to_string(full.cols));
    std::size_t off = 0, d = static_cast<std::size_t>(modality_dim(m));
    switch (m) {
        case Modality::LeftEye: off = 0; break;
        case Modality::RightEye: off = 16; break;
        case Modality::Eyes: off = 0; break;
        case Modality::Head: off = 32; break;
        case Modality::EyeHead: off = 0; break;
    }
    FeatureSequence out;
    out.rows = full.rows;
    out.cols = d;
    out.values.resize(full.rows * d);
    for (std::size_t r = 0; r < full.rows; ++r)
        std::copy(&full.values[r * kFullDim + off], &full.values[r * kFullDim + off + d],
                  &out.values[r * d]);
    out.gesture = full.gesture;
    out.subject = full.subject;
    out.trial_id = full.trial_id;
    out.stage = full.stage;
    return out;
}

NormStats zscore_fit(const std::vector<LabeledWindow>& windows) {
    if (windows.empty()) throw std::invalid_argument("zscore_fit: empty population");
    std::size_t d = windows.front().cols;
    NormStats stats;
    stats.mean.assign(d, 0.0);
    stats.std.assign(d, 0.0);
    std::size_t n = 0;
    for (const auto& w : windows) {
        if (w.cols != d) throw std::invalid_argument("zscore_fit: mixed dimensionality");
        for (std::size_t r = 0; r < w.rows; ++r)
            for (std::size_t c = 0; c < d; ++c) stats.mean[c] += w.at(r, c);
        n += w.rows;
    }
    for (auto& m : stats.mean) m /= static_cast<double>(n);
    for (const auto& w : windows)
        for (std::size_t r = 0; r < w.rows; ++r)
            for (std::size_t c = 0; c < d; ++c) {
                double dv = w.at(r, c) - stats.mean[c];
                stats.std[c] += dv * dv;
            }
    for (auto& s : stats.std) {
        s = std::sqrt(s / static_cast<double>(n));
        if (s < 1e-12) s = 1.0;  // constant channels pass through unscaled
    }
    stats.population = n;
    return stats;
}

void zscore_apply(LabeledWindow& w, const NormStats& stats) {
    if (w.cols != stats.mean.size())
        throw std::invalid_argument("zscore_apply: stats D=" + std::to_string(stats.mean.size()) +
                                    " vs window D=" + std::to_string(w.cols));
    for (std::size_t r = 0; r < w.rows; ++r)
        for (std::size_t c = 0; c < w.cols; ++c)
            w.values[r * w.cols + c] = (w.values[r * w.cols + c] - stats.mean[c]) / stats.std[c];
}

void zscore_apply(FeatureSequence& seq, const NormStats& stats) {
    if (seq.cols != stats.mean.size())
        throw std::invalid_argument("zscore_apply: stats D=" + std::to_string(stats.mean.size()) +
                                    " vs sequence D=" + std::to_string(seq.cols));
    for (std::size_t r = 0; r < seq.rows; ++r)
        for (std::size_t c = 0; c < seq.cols; ++c)
            seq.values[r * seq.cols + c] = (seq.values[r * seq.cols + c] - stats.mean[c]) / stats.std[c];
}

std::vector<std::size_t> window_starts(std::size_t t, std::size_t w, double overlap) {
    if (w < 2 || w > t)
        throw std::invalid_argument("window_starts: need 2 <= W <= T, got W=" + std::to_string(w) +
                                    " T=" + std::to_string(t));
    if (overlap < 0.0 || overlap >= 1.0)
        throw std::invalid_argument("window_starts: overlap must be in [0,1)");
    double raw = static_cast<double>(w) * (1.0 - overlap);
    auto stride = static_cast<std::size_t>(std::llround(raw));  // half away from zero
    if (stride < 1) stride = 1;
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + w <= t; s += stride) starts.push_back(s);
    std::size_t tail = t - w;
    if (starts.empty() || starts.back() != tail) starts.push_back(tail);
    return starts;
}

std::vector<LabeledWindow> make_windows(const FeatureSequence& seq, std::size_t w, double overlap) {
    auto starts = window_starts(seq.rows, w, overlap);
    std::vector<LabeledWindow> out;
    out.reserve(starts.size());
    int idx = 0;
    for (std::size_t s : starts) {
        LabeledWindow win;
        win.rows = w;
        win.cols = seq.cols;
        win.values.assign(&seq.values[s * seq.cols], &seq.values[(s + w) * seq.cols]);
        win.gesture = seq.gesture;
        win.subject = seq.subject;
        win.trial_id = seq.trial_id;
        win.stage = seq.stage;
        win.window_index = idx++;
        out.push_back(std::move(win));
    }
    return out;
}

std::vector<LabeledWindow> windows_for_trial(const GestureTrial& trial, const std::string& trial_id,
                                             const PrepConfig& cfg) {
    if (cfg.domain == WindowDomain::Resampled) {
        FeatureSequence full = resample(trial, cfg.resample_len);
        full.trial_id = trial_id;
        FeatureSequence seq = select_modality(full, cfg.modality);
        return make_windows(seq, cfg.window_len, cfg.overlap);
    }
    // Raw domain: slide a raw_window_seconds window over the raw frames,
    // then resample each slice to window_len frames.
    double t0 = trial.frames.front().t, t1 = trial.frames.back().t;
    double span = t1 - t0;
    double wsec = std::min(cfg.raw_window_seconds, span);
    double stride_sec = std::max(wsec * (1.0 - cfg.overlap), 1e-6);
    std::vector<double> starts;
    for (double s = t0; s + wsec <= t1 + 1e-9; s += stride_sec) starts.push_back(s);
    if (starts.empty() || std::abs(starts.back() - (t1 - wsec)) > 1e-9)
        starts.push_back(t1 - wsec);
    std::vector<LabeledWindow> out;
    int idx = 0;
    for (double s : starts) {
        GestureTrial slice = trial;
        slice.frames.clear();
        for (const auto& f : trial.frames)
            if (f.t >= s - 1e-9 && f.t <= s + wsec + 1e-9) slice.frames.push_back(f);
        if (slice.frames.size() < 2) continue;
        FeatureSequence full = resample(slice, cfg.window_len);
        full.trial_id = trial_id;
        FeatureSequence seq = select_modality(full, cfg.modality);
        LabeledWindow win;
        win.rows = seq.rows;
        win.cols = seq.cols;
        win.values = seq.values;
        win.gesture = seq.gesture;
        win.subject = seq.subject;
        win.trial_id = trial_id;
        win.stage = seq.stage;
        win.window_index = idx++;
        out.push_back(std::move(win));
    }
    return out;
}

void write_window_cache(const std::string& prefix, const std::vector<LabeledWindow>& windows,
                        const PrepConfig& cfg) {
    if (windows.empty()) throw std::invalid_argument("write_window_cache: no windows");
    std::size_t w = windows.front().rows, d = windows.front().cols;
    std::vector<double> blob;
    blob.reserve(windows.size() * w * d);
    for (const auto& win : windows) {
        if (win.rows != w || win.cols != d)
            throw std::invalid_argument("write_window_cache: inconsistent window shapes");
        blob.insert(blob.end(), win.values.begin(), win.values.end());
    }
    write_doubles_le(prefix + ".tensors", blob);
    std::ostringstream m;
    m << "tinygaze-window-cache v1\n";
    m << "shape " << windows.size() << " " << w << " " << d << "\n";
    m << "modality " << modality_name(cfg.modality) << "\n";
    m << "window_len " << cfg.window_len << " overlap " << fmt_double(cfg.overlap) << "\n";
    m << "blob_hash " << hex64(fnv1a64(std::span<const double>(blob))) << "\n";
    for (const auto& win : windows)
        m << "window " << win.trial_id << " " << win.window_index << " " << win.subject << " "
          << gesture_token(win.gesture) << " " << stage_token(win.stage) << "\n";
    write_text_file(prefix + ".manifest", m.str());
}

std::vector<LabeledWindow> read_window_cache(const std::string& prefix) {
    std::string manifest = read_text_file(prefix + ".manifest");
    auto blob = read_doubles_le(prefix + ".tensors");
    std::istringstream in(manifest);
    std::string line;
    std::size_t n = 0, w = 0, d = 0;
    std::string blob_hash;
    std::vector<LabeledWindow> windows;
    while (std::getline(in, line)) {
        auto toks = split_ws(line);
        if (toks.empty()) continue;
        if (toks[0] == "shape" && toks.size() == 4) {
            n = std::stoull(toks[1]);
            w = std::stoull(toks[2]);
            d = std::stoull(toks[3]);
        } else if (toks[0] == "blob_hash" && toks.size() == 2) {
            blob_hash = toks[1];
        } else if (toks[0] == "window" && toks.size() == 6) {
            LabeledWindow win;
            win.trial_id = toks[1];
            win.window_index = std::stoi(toks[2]);
            win.subject = toks[3];
            win.gesture = *gesture_from_token(toks[4]);
            win.stage = *stage_from_token(toks[5]);
            windows.push_back(std::move(win));
        }
    }
    if (windows.size() != n || blob.size() != n * w * d)
        throw std::runtime_error("window cache corrupt: " + prefix);
    if (!blob_hash.empty() && hex64(fnv1a64(std::span<const double>(blob))) != blob_hash)
        throw std::runtime_error("window cache hash mismatch: " + prefix);
    for (std::size_t i = 0; i < n; ++i) {
        windows[i].rows = w;
        windows[i].cols = d;
        windows[i].values.assign(blob.begin() + static_cast<std::ptrdiff_t>(i * w * d),
                                 blob.begin() + static_cast<std::ptrdiff_t>((i + 1) * w * d));
    }
    return windows;
}

}  // namespace tinygaze::preprocess
