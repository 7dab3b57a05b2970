#include "tinygaze/evalharness.hpp"

#include "tinygaze/graph.hpp"
#include "tinygaze/util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tinygaze::eval {

using net::Tensor;
using preprocess::LabeledWindow;

namespace {

std::vector<std::string> subject_order(const std::vector<GestureTrial>& trials) {
    std::set<std::string> s;
    for (const auto& t : trials) s.insert(t.participant_id);
    return {s.begin(), s.end()};
}

int window_label(const LabeledWindow& w, Task task,
                 const std::map<std::string, int>& subject_index) {
    if (task == Task::GestureRecognition) return static_cast<int>(w.gesture);
    return subject_index.at(w.subject);
}

Tensor tensorize(const std::vector<const LabeledWindow*>& windows) {
    std::size_t n = windows.size(), w = windows[0]->rows, d = windows[0]->cols;
    Tensor x({n, w, d});
    for (std::size_t i = 0; i < n; ++i)
        std::copy(windows[i]->values.begin(), windows[i]->values.end(), &x.data[i * w * d]);
    return x;
}

Confusion eval_confusion(net::ModelGraph& graph, const std::vector<const LabeledWindow*>& windows,
                         const std::vector<int>& labels, std::size_t classes) {
    Confusion m(classes, std::vector<long>(classes, 0));
    constexpr std::size_t kChunk = 256;
    std::size_t w = graph.input_width(), d = graph.input_dim();
    for (std::size_t off = 0; off < windows.size(); off += kChunk) {
        std::size_t n = std::min(kChunk, windows.size() - off);
        Tensor x({n, w, d});
        for (std::size_t i = 0; i < n; ++i)
            std::copy(windows[off + i]->values.begin(), windows[off + i]->values.end(),
                      &x.data[i * w * d]);
        Tensor logits = graph.forward(x);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < classes; ++j)
                if (logits.at2(i, j) > logits.at2(i, best)) best = j;
            m[static_cast<std::size_t>(labels[off + i])][best] += 1;
        }
    }
    return m;
}

struct FoldData {
    std::vector<LabeledWindow> train, test;
};

FoldData build_fold_windows(const std::vector<GestureTrial>& trials, const Fold& fold,
                            const RunOptions& opts) {
    FoldData data;
    preprocess::PrepConfig train_cfg = opts.prep;
    train_cfg.overlap = opts.overlap_train;
    preprocess::PrepConfig test_cfg = opts.prep;
    test_cfg.overlap = opts.overlap_test;
    for (std::size_t id : fold.train_trials) {
        auto ws = preprocess::windows_for_trial(trials[id], "t" + std::to_string(id), train_cfg);
        data.train.insert(data.train.end(), ws.begin(), ws.end());
    }
    for (std::size_t id : fold.test_trials) {
        auto ws = preprocess::windows_for_trial(trials[id], "t" + std::to_string(id), test_cfg);
        data.test.insert(data.test.end(), ws.begin(), ws.end());
    }
    if (data.train.empty() || data.test.empty())
        throw std::runtime_error("empty fold: train=" + std::to_string(data.train.size()) +
                                 " test=" + std::to_string(data.test.size()));
    return data;
}

FoldResult run_fold(const std::vector<GestureTrial>& trials, const models::ModelSpec& spec,
                    const Fold& fold, const std::string& fold_name, const RunOptions& opts,
                    std::size_t classes, const std::map<std::string, int>& subject_index,
                    Task task, std::uint64_t fold_seed) {
    FoldData data = build_fold_windows(trials, fold, opts);
    if (opts.normalize) {
        auto stats = preprocess::zscore_fit(data.train);
        for (auto& w : data.train) preprocess::zscore_apply(w, stats);
        for (auto& w : data.test) preprocess::zscore_apply(w, stats);
    }

    std::mt19937_64 rng(fold_seed);
    std::vector<std::size_t> order(data.train.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    auto n_val = static_cast<std::size_t>(
        std::floor(opts.train.val_fraction * static_cast<double>(order.size())));
    std::vector<const LabeledWindow*> fit, val, test;
    std::vector<int> fit_y, val_y, test_y;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const LabeledWindow* w = &data.train[order[i]];
        int y = window_label(*w, task, subject_index);
        if (i < n_val) {
            val.push_back(w);
            val_y.push_back(y);
        } else {
            fit.push_back(w);
            fit_y.push_back(y);
        }
    }
    for (const auto& w : data.test) {
        test.push_back(&w);
        test_y.push_back(window_label(w, task, subject_index));
    }

    models::ModelSpec fold_spec = spec;
    fold_spec.classes = classes;
    fold_spec.seed = fold_seed;
    net::ModelGraph graph = models::build_model(fold_spec);
    net::AdamConfig adam{opts.train.lr};

    FoldResult res;
    res.name = fold_name;
    res.train_windows = data.train.size();
    res.test_windows = data.test.size();

    auto t_train0 = std::chrono::steady_clock::now();
    double best_val = -1.0;
    std::size_t bad = 0, perfect = 0;
    std::vector<double> best_params = graph.snapshot();
    std::vector<std::size_t> batch_order(fit.size());
    std::iota(batch_order.begin(), batch_order.end(), 0);
    for (std::size_t epoch = 0; epoch < opts.train.max_epochs; ++epoch) {
        std::shuffle(batch_order.begin(), batch_order.end(), rng);
        for (std::size_t off = 0; off < fit.size(); off += opts.train.batch) {
            std::size_t n = std::min(opts.train.batch, fit.size() - off);
            std::vector<const LabeledWindow*> batch(n);
            std::vector<int> labels(n);
            for (std::size_t i = 0; i < n; ++i) {
                batch[i] = fit[batch_order[off + i]];
                labels[i] = fit_y[batch_order[off + i]];
            }
            Tensor x = tensorize(batch);
            graph.zero_grad();
            Tensor logits = graph.forward(x);
            auto ce = net::softmax_cross_entropy(logits, labels);
            graph.backward(ce.dlogits);
            net::adam_step(graph, adam);
        }
        res.epochs_run = epoch + 1;
        double score;
        if (!val.empty()) {
            score = macro_f1(eval_confusion(graph, val, val_y, classes));
        } else {
            score = macro_f1(eval_confusion(graph, fit, fit_y, classes));
        }
        if (score > best_val + 1e-9) {
            best_val = score;
            best_params = graph.snapshot();
            bad = 0;
        } else {
            ++bad;
        }
        if (score >= 0.9999) {
            if (++perfect >= 3) {
                best_params = graph.snapshot();
                break;
            }
        } else {
            perfect = 0;
        }
        if (bad >= opts.train.patience) break;
    }
    graph.restore(best_params);
    res.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_train0).count();

    auto t_inf0 = std::chrono::steady_clock::now();
    res.confusion = eval_confusion(graph, test, test_y, classes);
    res.infer_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_inf0).count();
    res.accuracy = accuracy(res.confusion);
    res.macro_f1 = macro_f1(res.confusion);
    res.weighted_f1 = weighted_f1(res.confusion);
    return res;
}

}  // namespace

EvalReport run_task(const std::vector<GestureTrial>& trials, const models::ModelSpec& spec,
                    const SplitPlan& plan, const RunOptions& opts) {
    audit_no_leakage(plan);
    auto subjects = subject_order(trials);
    std::map<std::string, int> subject_index;
    for (std::size_t i = 0; i < subjects.size(); ++i)
        subject_index[subjects[i]] = static_cast<int>(i);
    std::size_t classes = plan.task == Task::GestureRecognition
                              ? static_cast<std::size_t>(kNumGestures)
                              : subjects.size();
    if (plan.task == Task::UserIdentification && subjects.size() < 2)
        throw std::invalid_argument("user identification needs >= 2 subjects");

    EvalReport report;
    report.task = plan.task;
    report.model = models::model_name(spec.kind);
    report.modality = opts.prep.modality;
    if (plan.task == Task::GestureRecognition)
        for (int g = 0; g < kNumGestures; ++g)
            report.class_names.push_back(gesture_name(static_cast<GestureClass>(g)));
    else
        report.class_names = subjects;

    auto worker = [&](std::size_t f) {
        std::uint64_t fold_seed = opts.train.seed ^ fnv1a64("fold-" + std::to_string(f));
        return run_fold(trials, spec, plan.folds[f], plan.fold_names[f], opts, classes,
                        subject_index, plan.task, fold_seed);
    };
    report.folds.resize(plan.folds.size());
    if (opts.jobs > 1) {
        std::vector<std::future<FoldResult>> futs;
        for (std::size_t f = 0; f < plan.folds.size(); ++f)
            futs.push_back(std::async(std::launch::async, worker, f));
        for (std::size_t f = 0; f < plan.folds.size(); ++f) report.folds[f] = futs[f].get();
    } else {
        for (std::size_t f = 0; f < plan.folds.size(); ++f) report.folds[f] = worker(f);
    }

    report.pooled_confusion.assign(classes, std::vector<long>(classes, 0));
    for (const auto& fr : report.folds) {
        report.mean_accuracy += fr.accuracy;
        report.mean_macro_f1 += fr.macro_f1;
        report.mean_weighted_f1 += fr.weighted_f1;
        for (std::size_t i = 0; i < classes; ++i)
            for (std::size_t j = 0; j < classes; ++j)
                report.pooled_confusion[i][j] += fr.confusion[i][j];
    }
    auto nf = static_cast<double>(report.folds.size());
    report.mean_accuracy /= nf;
    report.mean_macro_f1 /= nf;
    report.mean_weighted_f1 /= nf;
    return report;
}

AblationTable run_modality_ablation(const std::vector<GestureTrial>& trials,
                                    const models::ModelSpec& spec, const RunOptions& opts) {
    AblationTable table;
    table.modalities = {Modality::EyeHead, Modality::Eyes, Modality::LeftEye, Modality::RightEye,
                        Modality::Head};
    SplitPlan plan = loso_splits(trials, Task::GestureRecognition);
    table.subjects = plan.fold_names;
    table.subject_avg.assign(table.subjects.size(), 0.0);
    for (Modality m : table.modalities) {
        RunOptions o = opts;
        o.prep.modality = m;
        models::ModelSpec s = spec;
        s.dim = static_cast<std::size_t>(modality_dim(m));
        EvalReport rep = run_task(trials, s, plan, o);
        std::vector<double> row;
        double avg = 0;
        for (std::size_t f = 0; f < rep.folds.size(); ++f) {
            row.push_back(rep.folds[f].macro_f1);
            avg += rep.folds[f].macro_f1;
            table.subject_avg[f] += rep.folds[f].macro_f1;
        }
        table.macro_f1.push_back(std::move(row));
        table.modality_avg.push_back(avg / static_cast<double>(rep.folds.size()));
    }
    for (auto& v : table.subject_avg) v /= static_cast<double>(table.modalities.size());
    for (double v : table.modality_avg) table.grand_avg += v;
    table.grand_avg /= static_cast<double>(table.modality_avg.size());
    return table;
}

EvalReport run_cross_stage(const std::vector<GestureTrial>& trials, const models::ModelSpec& spec,
                           const RunOptions& opts) {
    std::set<Stage> present;
    for (const auto& t : trials) present.insert(t.stage);
    for (int s = 0; s < kNumStages; ++s)
        if (!present.contains(static_cast<Stage>(s)))
            throw std::invalid_argument(std::string("cross-stage run: dataset is missing stage ") +
                                        stage_name(static_cast<Stage>(s)));
    SplitPlan plan;
    plan.task = Task::GestureRecognition;
    plan.protocol = Protocol::StratifiedKFoldByTrial;
    Fold fold;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        if (trials[i].stage == Stage::Recall)
            fold.test_trials.push_back(i);
        else
            fold.train_trials.push_back(i);
    }
    plan.folds.push_back(std::move(fold));
    plan.fold_names.push_back("recall");
    return run_task(trials, spec, plan, opts);
}

// ---------------------------------------------------------------- reports

namespace {
std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}
}  // namespace

std::string EvalReport::to_text() const {
    std::ostringstream out;
    out << "Task: "
        << (task == Task::GestureRecognition ? "gesture recognition" : "user identification")
        << "   Model: " << model << "   Modality: " << modality_name(modality) << "\n";
    out << "Fold         Accuracy  Weighted F1  Macro F1  Train(s)  Windows(train/test)\n";
    for (const auto& f : folds) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-12s %8.3f %12.3f %9.3f %9.1f  %zu/%zu\n",
                      f.name.c_str(), f.accuracy, f.weighted_f1, f.macro_f1, f.train_seconds,
                      f.train_windows, f.test_windows);
        out << line;
    }
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %8.3f %12.3f %9.3f\n", "mean", mean_accuracy,
                  mean_weighted_f1, mean_macro_f1);
    out << line;
    return out.str();
}

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out << "fold,accuracy,weighted_f1,macro_f1,train_windows,test_windows,train_seconds,infer_seconds,epochs\n";
    for (const auto& f : folds)
        out << f.name << "," << fmt_double(f.accuracy) << "," << fmt_double(f.weighted_f1) << ","
            << fmt_double(f.macro_f1) << "," << f.train_windows << "," << f.test_windows << ","
            << fmt_double(f.train_seconds) << "," << fmt_double(f.infer_seconds) << ","
            << f.epochs_run << "\n";
    out << "mean," << fmt_double(mean_accuracy) << "," << fmt_double(mean_weighted_f1) << ","
        << fmt_double(mean_macro_f1) << ",,,,,\n";
    return out.str();
}

std::string EvalReport::confusion_csv() const {
    std::ostringstream out;
    out << "true\\pred";
    for (const auto& n : class_names) out << "," << n;
    out << "\n";
    for (std::size_t i = 0; i < pooled_confusion.size(); ++i) {
        out << class_names[i];
        for (long v : pooled_confusion[i]) out << "," << v;
        out << "\n";
    }
    return out.str();
}

std::string AblationTable::to_text() const {
    std::ostringstream out;
    out << "Input      ";
    for (const auto& s : subjects) out << "  " << s;
    out << "    Avg\n";
    for (std::size_t m = 0; m < modalities.size(); ++m) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%-10s", modality_name(modalities[m]));
        out << buf;
        for (double v : macro_f1[m]) out << "  " << fixed3(v);
        out << "  " << fixed3(modality_avg[m]) << "\n";
    }
    out << "Avg       ";
    for (double v : subject_avg) out << "  " << fixed3(v);
    out << "  " << fixed3(grand_avg) << "\n";
    return out.str();
}

std::string AblationTable::to_csv() const {
    std::ostringstream out;
    out << "modality";
    for (const auto& s : subjects) out << "," << s;
    out << ",avg\n";
    for (std::size_t m = 0; m < modalities.size(); ++m) {
        out << modality_name(modalities[m]);
        for (double v : macro_f1[m]) out << "," << fmt_double(v);
        out << "," << fmt_double(modality_avg[m]) << "\n";
    }
    out << "avg";
    for (double v : subject_avg) out << "," << fmt_double(v);
    out << "," << fmt_double(grand_avg) << "\n";
    return out.str();
}

}  // namespace tinygaze::eval
