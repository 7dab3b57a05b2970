#include "tinygaze/evalharness.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

namespace tinygaze::eval {

SplitPlan loso_splits(const std::vector<GestureTrial>& trials, Task task) {
    std::map<std::string, std::vector<std::size_t>> by_subject;
    for (std::size_t i = 0; i < trials.size(); ++i)
        by_subject[trials[i].participant_id].push_back(i);
    if (by_subject.size() < 2)
        throw std::invalid_argument("loso_splits: needs at least 2 subjects, got " +
                                    std::to_string(by_subject.size()));
    SplitPlan plan;
    plan.task = task;
    plan.protocol = Protocol::LOSO;
    for (const auto& [subject, test] : by_subject) {
        Fold fold;
        fold.test_trials = test;
        for (const auto& [other, ids] : by_subject)
            if (other != subject)
                fold.train_trials.insert(fold.train_trials.end(), ids.begin(), ids.end());
        plan.folds.push_back(std::move(fold));
        plan.fold_names.push_back(subject);
    }
    return plan;
}

SplitPlan stratified_kfold_by_trial(const std::vector<GestureTrial>& trials, int k,
                                    std::uint64_t seed, Task task) {
    if (k < 2) throw std::invalid_argument("stratified_kfold_by_trial: k must be >= 2");
    // strata: subject, with gesture balanced secondarily
    std::map<std::string, std::map<int, std::vector<std::size_t>>> strata;
    std::map<std::string, std::size_t> counts;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        strata[trials[i].participant_id][static_cast<int>(trials[i].gesture)].push_back(i);
        counts[trials[i].participant_id] += 1;
    }
    for (const auto& [subject, n] : counts)
        if (n < static_cast<std::size_t>(k))
            throw std::invalid_argument("stratified_kfold_by_trial: subject " + subject +
                                        " has only " + std::to_string(n) + " trials (< k=" +
                                        std::to_string(k) + ")");
    std::mt19937_64 rng(seed);
    std::vector<std::vector<std::size_t>> fold_members(static_cast<std::size_t>(k));
    for (auto& [subject, by_gesture] : strata) {
        std::size_t deal = rng() % static_cast<std::size_t>(k);  // rotate fold sizes per stratum
        for (auto& [gesture, ids] : by_gesture) {
            std::shuffle(ids.begin(), ids.end(), rng);
            for (std::size_t i = 0; i < ids.size(); ++i)
                fold_members[(deal++) % static_cast<std::size_t>(k)].push_back(ids[i]);
        }
    }
    SplitPlan plan;
    plan.task = task;
    plan.protocol = Protocol::StratifiedKFoldByTrial;
    for (int f = 0; f < k; ++f) {
        Fold fold;
        fold.test_trials = fold_members[static_cast<std::size_t>(f)];
        for (int g = 0; g < k; ++g)
            if (g != f)
                fold.train_trials.insert(fold.train_trials.end(),
                                         fold_members[static_cast<std::size_t>(g)].begin(),
                                         fold_members[static_cast<std::size_t>(g)].end());
        std::sort(fold.test_trials.begin(), fold.test_trials.end());
        std::sort(fold.train_trials.begin(), fold.train_trials.end());
        plan.folds.push_back(std::move(fold));
        plan.fold_names.push_back("fold" + std::to_string(f));
    }
    return plan;
}

void audit_no_leakage(const SplitPlan& plan) {
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
        std::set<std::size_t> train(plan.folds[f].train_trials.begin(),
                                    plan.folds[f].train_trials.end());
        for (std::size_t id : plan.folds[f].test_trials)
            if (train.contains(id))
                throw std::logic_error("leakage: trial " + std::to_string(id) +
                                       " in both train and test of fold " + std::to_string(f));
    }
}

}  // namespace tinygaze::eval
