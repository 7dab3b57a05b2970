#pragma once

#include "tinygaze/core.hpp"
#include "tinygaze/models.hpp"
#include "tinygaze/preprocess.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tinygaze::eval {

// ------------------------------------------------------------------ metrics

using Confusion = std::vector<std::vector<long>>;  // [true][pred]

double accuracy(const Confusion& m);
double macro_f1(const Confusion& m);
double weighted_f1(const Confusion& m);

// ------------------------------------------------------------------ splits

enum class Task : int { GestureRecognition = 0, UserIdentification = 1 };
enum class Protocol : int { LOSO = 0, StratifiedKFoldByTrial = 1 };

struct Fold {
    std::vector<std::size_t> train_trials;  // indices into the trial list
    std::vector<std::size_t> test_trials;
};

struct SplitPlan {
    Task task = Task::GestureRecognition;
    Protocol protocol = Protocol::LOSO;
    std::vector<Fold> folds;
    std::vector<std::string> fold_names;  // e.g. test subject per LOSO fold
};

SplitPlan loso_splits(const std::vector<GestureTrial>& trials, Task task = Task::GestureRecognition);
SplitPlan stratified_kfold_by_trial(const std::vector<GestureTrial>& trials, int k,
                                    std::uint64_t seed, Task task = Task::UserIdentification);

// Throws if any trial sits in both train and test of a fold.
void audit_no_leakage(const SplitPlan& plan);

// ------------------------------------------------------------------ runner

struct TrainConfig {
    std::size_t batch = 32;
    double lr = 1e-3;
    std::size_t max_epochs = 150;
    std::size_t patience = 15;
    double val_fraction = 0.1;  // carved from train trials, window level
    std::uint64_t seed = 7;
};

struct FoldResult {
    std::string name;
    double accuracy = 0;
    double macro_f1 = 0;
    double weighted_f1 = 0;
    Confusion confusion;
    std::size_t train_windows = 0;
    std::size_t test_windows = 0;
    double train_seconds = 0;
    double infer_seconds = 0;
    std::size_t epochs_run = 0;
};

struct EvalReport {
    Task task = Task::GestureRecognition;
    std::string model;
    Modality modality = Modality::EyeHead;
    std::vector<FoldResult> folds;
    double mean_accuracy = 0;
    double mean_macro_f1 = 0;
    double mean_weighted_f1 = 0;
    Confusion pooled_confusion;
    std::vector<std::string> class_names;

    std::string to_text() const;
    std::string to_csv() const;
    std::string confusion_csv() const;
};

struct RunOptions {
    preprocess::PrepConfig prep;      // overlap field ignored; the two below win
    double overlap_train = 0.5;
    double overlap_test = 0.9;
    bool normalize = true;
    TrainConfig train;
    int jobs = 1;  // fold-level parallelism
};

EvalReport run_task(const std::vector<GestureTrial>& trials, const models::ModelSpec& spec,
                    const SplitPlan& plan, const RunOptions& opts);

struct AblationTable {
    std::vector<Modality> modalities;
    std::vector<std::string> subjects;                // LOSO fold order
    std::vector<std::vector<double>> macro_f1;        // [modality][subject]
    std::vector<double> modality_avg;                 // per modality
    std::vector<double> subject_avg;                  // per subject
    double grand_avg = 0;

    std::string to_text() const;
    std::string to_csv() const;
};

AblationTable run_modality_ablation(const std::vector<GestureTrial>& trials,
                                    const models::ModelSpec& spec, const RunOptions& opts);

// Train on Follow+Fixed+IRecall, test on Recall (subject-inclusive).
EvalReport run_cross_stage(const std::vector<GestureTrial>& trials, const models::ModelSpec& spec,
                           const RunOptions& opts);

}  // namespace tinygaze::eval
