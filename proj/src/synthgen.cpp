#include "tinygaze/synthgen.hpp"

#include "tinygaze/util.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tinygaze::synthgen {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kPtToMeters = 0.0001558;  // 163 logical points per inch
constexpr double kInterocularHalf = 0.031;  // meters, +-x socket offset
constexpr double kCornerDwell = 0.120;      // seconds per interior corner
constexpr double kDeg = kPi / 180.0;

double seg_len(const Vec2& a, const Vec2& b) {
    return std::hypot(b.x - a.x, b.y - a.y);
}

// rotate a 2-D point by deg degrees about the origin
Vec2 rotate2(const Vec2& p, double deg) {
    double c = std::cos(deg * kDeg), s = std::sin(deg * kDeg);
    return {p.x * c - p.y * s, p.x * s + p.y * c};
}

// smoothstep time-warp: velocity is zero at both segment ends, so the dot
// eases into and out of every corner dwell
double smoothstep(double u) { return u * u * (3.0 - 2.0 * u); }

Transform4 make_pose(double yaw, double pitch, double tx, double ty, double tz) {
    double cy = std::cos(yaw), sy = std::sin(yaw);
    double cp = std::cos(pitch), sp = std::sin(pitch);
    Transform4 t;
    // R = R_y(yaw) * R_x(pitch)
    t.at(0, 0) = cy;
    t.at(0, 1) = sy * sp;
    t.at(0, 2) = sy * cp;
    t.at(1, 0) = 0;
    t.at(1, 1) = cp;
    t.at(1, 2) = -sp;
    t.at(2, 0) = -sy;
    t.at(2, 1) = cy * sp;
    t.at(2, 2) = cy * cp;
    t.at(0, 3) = tx;
    t.at(1, 3) = ty;
    t.at(2, 3) = tz;
    t.at(3, 0) = t.at(3, 1) = t.at(3, 2) = 0;
    t.at(3, 3) = 1;
    return t;
}

}  // namespace

GestureTemplate gesture_template(GestureClass g) {
    GestureTemplate tpl;
    tpl.gesture = g;
    switch (g) {
        case GestureClass::Vertical:
            tpl.polyline = {{0, -150}, {0, 150}};
            break;
        case GestureClass::Horizontal:
            tpl.polyline = {{-150, 0}, {150, 0}};
            break;
        case GestureClass::L0:
            tpl.polyline = {{-150, 150}, {-150, -150}, {150, -150}};
            break;
        case GestureClass::L270: {
            GestureTemplate l0 = gesture_template(GestureClass::L0);
            for (const auto& p : l0.polyline) tpl.polyline.push_back(rotate2(p, 270.0));
            break;
        }
        case GestureClass::Z0:
            tpl.polyline = {{-150, 150}, {150, 150}, {-150, -150}, {150, -150}};
            break;
    }
    for (std::size_t i = 0; i + 1 < tpl.polyline.size(); ++i)
        tpl.path_length += seg_len(tpl.polyline[i], tpl.polyline[i + 1]);
    return tpl;
}

double nominal_duration(const GestureTemplate& tpl, double dot_speed_pts_per_s) {
    if (dot_speed_pts_per_s <= 0) throw std::invalid_argument("dot speed must be > 0");
    return tpl.path_length / dot_speed_pts_per_s;
}

GestureTrial synthesize_trial(const GestureTemplate& tpl, const SubjectStyle& style, Stage stage,
                              std::mt19937_64& rng, const TrialParams& params) {
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    double amp = style.amplitude_gain;
    double pattern_rot = 0.0;  // degrees
    if (stage == Stage::IRecall) {
        amp *= 1.0 + 0.10 * uni(rng);
    } else if (stage == Stage::Recall) {
        amp *= 1.0 + 0.15 * uni(rng);
        pattern_rot = 5.0 * uni(rng);
    }
    double tremor_phase_yaw = kPi * uni(rng);
    double tremor_phase_pitch = kPi * uni(rng);

    double speed = params.dot_speed * style.speed_gain;
    // segment timeline with corner dwells
    struct Seg {
        Vec2 a, b;
        double t0, t1;  // traversal interval; dwell follows until next t0
    };
    std::vector<Seg> segs;
    double cursor = 0.0;
    for (std::size_t i = 0; i + 1 < tpl.polyline.size(); ++i) {
        double dur = seg_len(tpl.polyline[i], tpl.polyline[i + 1]) / speed;
        segs.push_back({tpl.polyline[i], tpl.polyline[i + 1], cursor, cursor + dur});
        cursor += dur;
        if (i + 2 < tpl.polyline.size()) cursor += kCornerDwell;
    }
    double duration = cursor;
    auto dot_at = [&](double t) -> Vec2 {
        for (const auto& s : segs) {
            if (t <= s.t1 || &s == &segs.back()) {
                double u = (t - s.t0) / (s.t1 - s.t0);
                u = std::clamp(u, 0.0, 1.0);
                double w = smoothstep(u);
                return {s.a.x + (s.b.x - s.a.x) * w, s.a.y + (s.b.y - s.a.y) * w};
            }
        }
        return segs.back().b;
    };

    double rate = params.sample_rate_hz;
    auto n_frames = static_cast<std::size_t>(std::llround(duration * rate));
    if (n_frames < 2) n_frames = 2;

    GestureTrial trial;
    trial.participant_id = style.subject_id;
    trial.gesture = tpl.gesture;
    trial.stage = stage;
    trial.frames.reserve(n_frames);
    for (std::size_t i = 0; i < n_frames; ++i) {
        double t = static_cast<double>(i) / rate;
        Vec2 p = dot_at(t);
        p.x *= amp;
        p.y *= amp;
        if (pattern_rot != 0.0) p = rotate2(p, pattern_rot);
        double yaw = std::atan2(p.x * kPtToMeters, style.head_distance);
        double pitch = std::atan2(-p.y * kPtToMeters, style.head_distance);

        double tremor_yaw =
            style.tremor_amp_deg * kDeg * std::sin(2 * kPi * style.tremor_freq_hz * t + tremor_phase_yaw);
        double tremor_pitch =
            style.tremor_amp_deg * kDeg *
            std::sin(2 * kPi * style.tremor_freq_hz * t + tremor_phase_pitch);
        double sigma = style.noise_sigma_deg * kDeg;

        double a = style.head_share;
        double head_yaw = a * yaw + tremor_yaw + sigma * gauss(rng);
        double head_pitch = a * pitch + tremor_pitch + sigma * gauss(rng);
        double eye_yaw = (1.0 - a) * yaw + sigma * gauss(rng);
        double eye_pitch = (1.0 - a) * pitch + sigma * gauss(rng);

        double hx = style.head_offset[0], hy = style.head_offset[1];
        double hz = style.head_distance + style.head_offset[2];
        FrameSample frame;
        frame.t = t;
        frame.head = make_pose(head_yaw, head_pitch, hx, hy, hz);
        // eye sockets ride on the head pose
        for (int side = 0; side < 2; ++side) {
            double ox = side == 0 ? -kInterocularHalf : kInterocularHalf;
            double ex = hx + frame.head.at(0, 0) * ox;
            double ey = hy + frame.head.at(1, 0) * ox;
            double ez = hz + frame.head.at(2, 0) * ox;
            Transform4 eye = make_pose(eye_yaw, eye_pitch, ex, ey, ez);
            if (side == 0)
                frame.left_eye = eye;
            else
                frame.right_eye = eye;
        }
        trial.frames.push_back(frame);
    }
    return trial;
}

std::vector<SubjectStyle> session_styles(const SessionPlan& plan, std::uint64_t seed) {
    std::vector<SubjectStyle> styles;
    int n = plan.subjects;
    for (int i = 0; i < n; ++i) {
        std::mt19937_64 rng(seed ^ fnv1a64("subject-" + std::to_string(i)));
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        double frac = n > 1 ? static_cast<double>(i) / (n - 1) : 0.5;
        SubjectStyle s;
        s.subject_id = "P" + std::to_string(i);
        double alpha_span = plan.alpha_max - plan.alpha_min;
        s.head_share = plan.alpha_min + alpha_span * frac;
        s.head_share += 0.02 * alpha_span * uni(rng);
        s.head_share = std::clamp(s.head_share, plan.alpha_min, plan.alpha_max);
        s.speed_gain = 0.8 + 0.45 * (1.0 - frac) + 0.01 * uni(rng);
        s.speed_gain = std::clamp(s.speed_gain, 0.8, 1.25);
        // amplitude follows a different subject ordering than alpha
        double afrac = n > 1 ? static_cast<double>((i * 2) % n) / (n - 1) : 0.5;
        s.amplitude_gain = std::clamp(0.85 + 0.30 * afrac + 0.01 * uni(rng), 0.85, 1.15);
        s.head_distance = 0.40 + 0.05 * (2.0 * frac - 1.0) + 0.002 * uni(rng);
        s.head_offset[0] = 0.02 * uni(rng);
        s.head_offset[1] = 0.02 * uni(rng);
        s.head_offset[2] = 0.01 * uni(rng);
        s.tremor_freq_hz = 8.0 + 4.0 * (0.5 + 0.5 * uni(rng));
        s.tremor_amp_deg = 0.02 + 0.06 * (0.5 + 0.5 * uni(rng));
        s.noise_sigma_deg = plan.noise_sigma_deg;
        styles.push_back(s);
    }
    return styles;
}

Session generate_session(const SessionPlan& plan, std::uint64_t seed) {
    if (plan.subjects <= 0) throw std::invalid_argument("plan needs at least 1 subject");
    if (plan.repetitions <= 0) throw std::invalid_argument("plan needs at least 1 repetition");
    auto styles = session_styles(plan, seed);
    TrialParams params{plan.sample_rate_hz, plan.dot_speed};

    std::ostringstream log, man;
    Session session;
    double cursor = 0.0;
    const double gap = 0.5;
    std::size_t trial_index = 0;
    for (const auto& style : styles) {
        for (int gi = 0; gi < kNumGestures; ++gi) {
            auto tpl = gesture_template(static_cast<GestureClass>(gi));
            for (int si = 0; si < kNumStages; ++si) {
                for (int rep = 1; rep <= plan.repetitions; ++rep) {
                    std::mt19937_64 rng(seed ^ fnv1a64("trial-" + std::to_string(trial_index)));
                    GestureTrial trial =
                        synthesize_trial(tpl, style, static_cast<Stage>(si), rng, params);
                    trial.repetition = rep;
                    double t0 = cursor;
                    double t_end = t0 + trial.frames.back().t;
                    log << "E " << fmt_double(t0 - 1e-4) << " TRIAL_START " << style.subject_id
                        << " " << gesture_token(trial.gesture) << " " << stage_token(trial.stage)
                        << " " << rep << "\n";
                    for (const auto& f : trial.frames) {
                        double t = t0 + f.t;
                        const struct {
                            const char* tag;
                            const Transform4* tf;
                        } chans[3] = {{"HEAD", &f.head}, {"LEYE", &f.left_eye}, {"REYE", &f.right_eye}};
                        for (const auto& ch : chans) {
                            log << "S " << fmt_double(t) << " " << ch.tag;
                            for (double v : ch.tf->m) log << " " << fmt_double(v);
                            log << "\n";
                        }
                    }
                    log << "E " << fmt_double(t_end + 1e-4) << " TRIAL_END " << style.subject_id
                        << " " << gesture_token(trial.gesture) << " " << stage_token(trial.stage)
                        << " " << rep << "\n";
                    session.manifest.push_back({style.subject_id, trial.gesture, trial.stage, rep,
                                                trial.frames.size()});
                    cursor = t_end + gap;
                    ++trial_index;
                }
            }
        }
    }
    session.log_text = log.str();
    session.manifest_text = format_manifest(session.manifest);
    return session;
}

std::string format_manifest(const std::vector<ManifestEntry>& entries) {
    std::ostringstream man;
    for (const auto& e : entries)
        man << e.participant_id << " " << gesture_token(e.gesture) << " " << stage_token(e.stage)
            << " " << e.repetition << " " << e.frame_count << "\n";
    return man.str();
}

std::vector<ManifestEntry> parse_manifest(const std::string& text) {
    std::vector<ManifestEntry> entries;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto toks = split_ws(line);
        if (toks.size() != 5) continue;
        auto g = gesture_from_token(toks[1]);
        auto s = stage_from_token(toks[2]);
        if (!g || !s) continue;
        entries.push_back({toks[0], *g, *s, std::stoi(toks[3]), std::stoull(toks[4])});
    }
    return entries;
}

}  // namespace tinygaze::synthgen
