#include "tinygaze/ingest.hpp"

#include "tinygaze/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>
#include <stdexcept>

namespace tinygaze::ingest {

namespace {

bool parse_double(const std::string& s, double& out) {
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end && *end == '\0' && end != s.c_str() && std::isfinite(out);
}

// index of the element of `ts`-sorted vector nearest to t
template <typename Vec, typename GetT>
std::size_t nearest_index(const Vec& v, double t, GetT get_t) {
    std::size_t lo = 0, hi = v.size();
    while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (get_t(v[mid]) < t)
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo == 0) return 0;
    if (lo == v.size()) return v.size() - 1;
    return (t - get_t(v[lo - 1])) <= (get_t(v[lo]) - t) ? lo - 1 : lo;
}

}  // namespace

RawStream parse_log(const std::string& text) {
    RawStream raw;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto toks = split_ws(line);
        if (toks.empty()) continue;
        if (toks[0] == "S" && toks.size() == 19) {
            SampleRecord rec;
            if (!parse_double(toks[1], rec.t)) {
                ++raw.skipped_lines;
                continue;
            }
            if (toks[2] == "HEAD")
                rec.channel = Channel::Head;
            else if (toks[2] == "LEYE")
                rec.channel = Channel::LeftEye;
            else if (toks[2] == "REYE")
                rec.channel = Channel::RightEye;
            else {
                ++raw.skipped_lines;
                continue;
            }
            bool ok = true;
            for (int i = 0; i < 16; ++i)
                if (!parse_double(toks[3 + i], rec.transform.m[static_cast<std::size_t>(i)])) {
                    ok = false;
                    break;
                }
            if (!ok) {
                ++raw.skipped_lines;
                continue;
            }
            raw.samples.push_back(rec);
        } else if (toks[0] == "E" && toks.size() == 7) {
            EventRecord ev;
            if (!parse_double(toks[1], ev.t)) {
                ++raw.skipped_lines;
                continue;
            }
            if (toks[2] == "TRIAL_START")
                ev.kind = EventKind::TrialStart;
            else if (toks[2] == "TRIAL_END")
                ev.kind = EventKind::TrialEnd;
            else {
                ++raw.skipped_lines;
                continue;
            }
            ev.participant_id = toks[3];
            auto g = gesture_from_token(toks[4]);
            auto s = stage_from_token(toks[5]);
            if (!g || !s) {
                ++raw.skipped_lines;
                continue;
            }
            ev.gesture = *g;
            ev.stage = *s;
            char* end = nullptr;
            long rep = std::strtol(toks[6].c_str(), &end, 10);
            if (!end || *end != '\0' || rep < 1) {
                ++raw.skipped_lines;
                continue;
            }
            ev.repetition = static_cast<int>(rep);
            raw.events.push_back(ev);
        } else {
            ++raw.skipped_lines;
        }
    }
    if (raw.samples.empty() && raw.events.empty())
        throw std::runtime_error("parse_log: no valid records");
    return raw;
}

SyncResult synchronize(const RawStream& raw, double max_gap) {
    if (max_gap <= 0) throw std::invalid_argument("synchronize: max_gap must be > 0");
    std::vector<SampleRecord> head, leye, reye;
    for (const auto& s : raw.samples) {
        (s.channel == Channel::Head ? head : s.channel == Channel::LeftEye ? leye : reye)
            .push_back(s);
    }
    auto by_t = [](const SampleRecord& a, const SampleRecord& b) { return a.t < b.t; };
    std::stable_sort(head.begin(), head.end(), by_t);
    std::stable_sort(leye.begin(), leye.end(), by_t);
    std::stable_sort(reye.begin(), reye.end(), by_t);

    SyncResult out;
    auto get_t = [](const SampleRecord& s) { return s.t; };
    for (const auto& h : head) {
        if (leye.empty() || reye.empty()) {
            ++out.dropped;
            continue;
        }
        std::size_t li = nearest_index(leye, h.t, get_t);
        std::size_t ri = nearest_index(reye, h.t, get_t);
        if (std::abs(leye[li].t - h.t) > max_gap || std::abs(reye[ri].t - h.t) > max_gap) {
            ++out.dropped;
            continue;
        }
        FrameSample f;
        f.t = h.t;
        f.head = h.transform;
        f.left_eye = leye[li].transform;
        f.right_eye = reye[ri].transform;
        out.frames.push_back(f);
    }
    return out;
}

SegmentResult segment_trials(const std::vector<FrameSample>& frames,
                             const std::vector<EventRecord>& events) {
    constexpr std::size_t kMinFrames = 8;
    SegmentResult out;
    // pair starts with ends per (participant, gesture, stage, rep) key, in time order
    struct Key {
        std::string p;
        int g, s, r;
        auto operator<=>(const Key&) const = default;
    };
    std::map<Key, std::vector<const EventRecord*>> starts, ends;
    std::vector<EventRecord> sorted_events = events;
    std::stable_sort(sorted_events.begin(), sorted_events.end(),
                     [](const EventRecord& a, const EventRecord& b) { return a.t < b.t; });
    for (const auto& ev : sorted_events) {
        Key k{ev.participant_id, static_cast<int>(ev.gesture), static_cast<int>(ev.stage),
              ev.repetition};
        (ev.kind == EventKind::TrialStart ? starts : ends)[k].push_back(&ev);
    }
    for (auto& [key, ss] : starts) {
        auto& ee = ends[key];
        std::size_t n = std::min(ss.size(), ee.size());
        for (std::size_t i = 0; i < n; ++i) {
            const EventRecord* start = ss[i];
            const EventRecord* end = ee[i];
            if (start->t >= end->t) {
                out.errors.push_back("trial " + key.p + "/" + gesture_token(start->gesture) + "/" +
                                     stage_token(start->stage) + "/r" + std::to_string(key.r) +
                                     ": start not before end");
                continue;
            }
            GestureTrial trial;
            trial.participant_id = start->participant_id;
            trial.gesture = start->gesture;
            trial.stage = start->stage;
            trial.repetition = start->repetition;
            for (const auto& f : frames)
                if (f.t >= start->t && f.t <= end->t) trial.frames.push_back(f);
            if (trial.frames.size() < kMinFrames) {
                out.errors.push_back("trial " + key.p + "/" + gesture_token(trial.gesture) + "/" +
                                     stage_token(trial.stage) + "/r" + std::to_string(key.r) +
                                     ": only " + std::to_string(trial.frames.size()) +
                                     " frames (< " + std::to_string(kMinFrames) + ")");
                continue;
            }
            out.trials.push_back(std::move(trial));
        }
        for (std::size_t i = n; i < ss.size(); ++i)
            out.errors.push_back("unpaired TRIAL_START " + key.p + "/" +
                                 gesture_token(ss[i]->gesture) + "/" + stage_token(ss[i]->stage) +
                                 "/r" + std::to_string(key.r));
        for (std::size_t i = n; i < ee.size(); ++i)
            out.errors.push_back("unpaired TRIAL_END " + key.p + "/" +
                                 gesture_token(ee[i]->gesture) + "/" + stage_token(ee[i]->stage) +
                                 "/r" + std::to_string(key.r));
    }
    for (auto& [key, ee] : ends) {
        if (!starts.contains(key))
            for (const auto* ev : ee)
                out.errors.push_back("unpaired TRIAL_END " + key.p + "/" +
                                     gesture_token(ev->gesture) + "/" + stage_token(ev->stage) +
                                     "/r" + std::to_string(key.r));
    }
    // keep session time order
    std::stable_sort(out.trials.begin(), out.trials.end(),
                     [](const GestureTrial& a, const GestureTrial& b) {
                         return a.frames.front().t < b.frames.front().t;
                     });
    return out;
}

}  // namespace tinygaze::ingest
