#pragma once

#include "tinygaze/layers.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace tinygaze::net {

// Static feed-forward chain: [B,W,D] in, [B,C] logits out.
class ModelGraph {
public:
    ModelGraph(std::string name, std::size_t width, std::size_t dim, std::size_t classes,
               std::uint64_t seed)
        : name_(std::move(name)), width_(width), dim_(dim), classes_(classes), seed_(seed) {}

    void add(std::unique_ptr<Layer> layer);

    Tensor forward(const Tensor& x);
    void backward(const Tensor& dlogits);  // errors if no forward ran
    void zero_grad();

    std::size_t count_params() const;
    const std::vector<Parameter*>& parameters() const { return params_; }
    std::vector<Parameter*>& parameters() { return params_; }

    const std::string& name() const { return name_; }
    std::size_t input_width() const { return width_; }
    std::size_t input_dim() const { return dim_; }
    std::size_t num_classes() const { return classes_; }
    std::uint64_t seed() const { return seed_; }

    // Flat copy of all parameter values, registry order.
    std::vector<double> snapshot() const;
    void restore(const std::vector<double>& flat);

    // Checkpoint: <prefix>.manifest (text) + <prefix>.params (64-bit LE doubles).
    void save(const std::string& prefix) const;
    void load(const std::string& prefix);

private:
    std::string name_;
    std::size_t width_, dim_, classes_;
    std::uint64_t seed_;
    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<Parameter*> params_;
    bool forward_ran_ = false;
};

struct LossResult {
    double loss = 0.0;
    Tensor dlogits;
};

// Mean -log softmax(logits)[label] with max-subtraction; dlogits = (softmax - onehot)/B.
LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

Tensor softmax_rows(const Tensor& logits);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam update over all graph parameters; zeroes grads after.
void adam_step(ModelGraph& graph, const AdamConfig& cfg);

// Central-difference check on <= max_samples sampled scalars; returns max
// relative error |ga - gn| / max(1e-8, |ga| + |gn|).
double gradient_check(ModelGraph& graph, const Tensor& batch, const std::vector<int>& labels,
                      double h = 1e-5, std::size_t max_samples = 200, std::uint64_t seed = 1234);

}  // namespace tinygaze::net
