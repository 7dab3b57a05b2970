#include "tinygaze/evalharness.hpp"

#include <stdexcept>

namespace tinygaze::eval {

namespace {

void check_confusion(const Confusion& m) {
    if (m.empty()) throw std::invalid_argument("confusion matrix is empty");
    for (const auto& row : m) {
        if (row.size() != m.size()) throw std::invalid_argument("confusion matrix not square");
        for (long v : row)
            if (v < 0) throw std::invalid_argument("confusion matrix has negative entries");
    }
}

struct PerClass {
    double f1 = 0;
    long support = 0;
    bool counted = false;  // excluded only when support and predictions are both 0
};

std::vector<PerClass> per_class_f1(const Confusion& m) {
    std::size_t c = m.size();
    std::vector<PerClass> out(c);
    for (std::size_t i = 0; i < c; ++i) {
        long tp = m[i][i], fn = 0, fp = 0;
        for (std::size_t j = 0; j < c; ++j) {
            if (j != i) {
                fn += m[i][j];
                fp += m[j][i];
            }
        }
        out[i].support = tp + fn;
        long predicted = tp + fp;
        if (out[i].support == 0 && predicted == 0) continue;
        out[i].counted = true;
        double p = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        double r = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        out[i].f1 = (p + r) > 0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    return out;
}

}  // namespace

double accuracy(const Confusion& m) {
    check_confusion(m);
    long trace = 0, total = 0;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j) {
            total += m[i][j];
            if (i == j) trace += m[i][j];
        }
    return total > 0 ? static_cast<double>(trace) / static_cast<double>(total) : 0.0;
}

double macro_f1(const Confusion& m) {
    check_confusion(m);
    auto pc = per_class_f1(m);
    double sum = 0;
    std::size_t n = 0;
    for (const auto& c : pc)
        if (c.counted) {
            sum += c.f1;
            ++n;
        }
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

double weighted_f1(const Confusion& m) {
    check_confusion(m);
    auto pc = per_class_f1(m);
    double sum = 0;
    long total = 0;
    for (const auto& c : pc) {
        sum += c.f1 * static_cast<double>(c.support);
        total += c.support;
    }
    return total > 0 ? sum / static_cast<double>(total) : 0.0;
}

}  // namespace tinygaze::eval
