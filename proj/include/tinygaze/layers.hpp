#pragma once

#include "tinygaze/tensor.hpp"

#include <memory>
#include <string>
#include <vector>

namespace tinygaze::net {

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor adam_m;
    Tensor adam_v;
    long step = 0;

    Parameter(std::string n, Tensor v)
        : name(std::move(n)),
          value(std::move(v)),
          grad(value.shape),
          adam_m(value.shape),
          adam_v(value.shape) {}
};

// One node in a static feed-forward chain. forward caches whatever backward
// needs; backward takes d(loss)/d(output) and returns d(loss)/d(input),
// accumulating into parameter grads.
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x) = 0;
    virtual Tensor backward(const Tensor& dout) = 0;
    virtual std::vector<Parameter*> params() { return {}; }
    virtual std::string spec() const = 0;
};

class Linear : public Layer {
public:
    Linear(std::size_t in, std::size_t out, std::mt19937_64& rng, std::string name = "linear");
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dout) override;
    std::vector<Parameter*> params() override { return {&w_, &b_}; }
    std::string spec() const override;

private:
    std::size_t in_, out_;
    Parameter w_, b_;  // w: [in,out], b: [out]
    Tensor x_;         // cached input, flattened [M,in]
    std::vector<std::size_t> in_shape_;
};

class ReLU : public Layer {
public:
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dout) override;
    std::string spec() const override { return "relu"; }

private:
    Tensor x_;
};

// Valid (no padding) 1-D convolution over [B,T,Cin] -> [B,T',Cout],
// T' = floor((T-K)/stride) + 1.
class Conv1d : public Layer {
public:
    Conv1d(std::size_t kernel, std::size_t cin, std::size_t cout, std::size_t stride,
           std::mt19937_64& rng, std::string name = "conv1d");
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dout) override;
    std::vector<Parameter*> params() override { return {&w_, &b_}; }
    std::string spec() const override;
    static std::size_t out_len(std::size_t t, std::size_t k, std::size_t stride);

private:
    std::size_t k_, cin_, cout_, stride_;
    Parameter w_, b_;  // w laid out as [K*Cin, Cout]
    Tensor cols_;      // im2col cache [B*T', K*Cin]
    std::vector<std::size_t> in_shape_;
};

// Zero padding along the time axis of [B,T,C].
class PadTime : public Layer {
public:
    PadTime(std::size_t left, std::size_t right) : left_(left), right_(right) {}
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dout) override;
    std::string spec() const override;

private:
    std::size_t left_, right_;
    std::vector<std::size_t> in_shape_;
};

// Single-layer LSTM, zero initial state, returns all hidden states [B,T,H].
class LSTM : public Layer {
public:
    LSTM(std::size_t din, std::size_t hidden, std::mt19937_64& rng, std::string name = "lstm");
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dout) override;
    std::vector<Parameter*> params() override { return {&wx_, &wh_, &b_}; }
    std::string spec() const override;

private:
    std::size_t din_, h_;
    Parameter wx_, wh_, b_;  // wx: [Din,4H], wh: [H,4H], b: [4H]; gate order i,f,g,o
    Tensor x_;
    std::vector<Tensor> gates_;  // per t, post-activation [B,4H]
    std::vector<Tensor> cells_;  // c_t, [B,H], index 0..T-1
    std::vector<Tensor> tanhc_;  // tanh(c_t)
    Tensor hidden_;              // [B,T,H]
};

// [B,T,H] -> [B,H], selects t = T-1.
class LastTimestep : public Layer {
public:
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dout) override;
    std::string spec() const override { return "last_timestep"; }

private:
    std::vector<std::size_t> in_shape_;
};

// Multi-head self-attention over [N,T,E]; E must divide by heads.
class SelfAttention : public Layer {
public:
    SelfAttention(std::size_t embed, std::size_t heads, std::mt19937_64& rng,
                  std::string name = "attn");
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dout) override;
    std::vector<Parameter*> params() override {
        return {&wq_, &bq_, &wk_, &wv_, &bv_, &wo_, &bo_};
    }
    std::string spec() const override;

private:
    std::size_t e_, heads_, dk_;
    // no key-projection bias: a constant added to every key shifts each
    // attention row uniformly, which row-softmax cancels exactly
    Parameter wq_, bq_, wk_, wv_, bv_, wo_, bo_;
    Tensor x_, q_, k_, v_, ctx_;  // flattened [N*T, E]
    Tensor attn_;                 // [N, heads, T, T], softmax rows
    std::size_t n_ = 0, t_ = 0;
};

// Layer normalization over the last dimension, with gain and bias.
class LayerNorm : public Layer {
public:
    explicit LayerNorm(std::size_t dim, std::string name = "ln");
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dout) override;
    std::vector<Parameter*> params() override { return {&g_, &b_}; }
    std::string spec() const override;

private:
    std::size_t dim_;
    Parameter g_, b_;
    Tensor xhat_;
    std::vector<double> inv_std_;
    std::vector<std::size_t> in_shape_;
};

// y = x + chain(x)
class Residual : public Layer {
public:
    explicit Residual(std::vector<std::unique_ptr<Layer>> inner) : inner_(std::move(inner)) {}
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dout) override;
    std::vector<Parameter*> params() override;
    std::string spec() const override;

private:
    std::vector<std::unique_ptr<Layer>> inner_;
};

// Additive sinusoidal position table over [B,T,E]; no parameters.
class PositionalEncoding : public Layer {
public:
    explicit PositionalEncoding(std::size_t embed) : e_(embed) {}
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dout) override { return dout; }
    std::string spec() const override;

private:
    std::size_t e_;
};

// Learned-score softmax pooling over time: [B,T,H] -> [B,H].
class TemporalAttentionPool : public Layer {
public:
    TemporalAttentionPool(std::size_t hidden, std::mt19937_64& rng, std::string name = "pool");
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dout) override;
    std::vector<Parameter*> params() override { return {&w_, &b_}; }
    std::string spec() const override;

private:
    std::size_t h_;
    Parameter w_, b_;  // w: [H], b: [1]
    Tensor x_;
    Tensor attn_;  // [B,T]
};

// [B,W,D] -> [B*D,W,1]; each sensor channel becomes its own sequence.
class SplitChannels : public Layer {
public:
    explicit SplitChannels(std::size_t d) : d_(d) {}
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dout) override;
    std::string spec() const override;

private:
    std::size_t d_;
    std::vector<std::size_t> in_shape_;
};

// [B*D,T,F] -> [B*T,D,F]; channels become attention tokens per timestep.
class ChannelsToTokens : public Layer {
public:
    ChannelsToTokens(std::size_t d, std::size_t t) : d_(d), t_(t) {}
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dout) override;
    std::string spec() const override;

private:
    std::size_t d_, t_;
    std::size_t b_ = 0, f_ = 0;
};

// [B*T,D,F] -> [B,T,D*F]; concatenates per-channel features per timestep.
class TokensToFused : public Layer {
public:
    TokensToFused(std::size_t d, std::size_t t) : d_(d), t_(t) {}
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dout) override;
    std::string spec() const override;

private:
    std::size_t d_, t_;
    std::size_t b_ = 0, f_ = 0;
};

}  // namespace tinygaze::net
