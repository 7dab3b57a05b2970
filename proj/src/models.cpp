#include "tinygaze/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tinygaze::models {

using namespace tinygaze::net;

const char* model_name(ModelKind k) {
    switch (k) {
        case ModelKind::TinyHAR: return "tinyhar";
        case ModelKind::DeepConvLSTM: return "deepconvlstm";
        case ModelKind::SAHAR: return "sahar";
    }
    return "?";
}

std::optional<ModelKind> model_from_name(const std::string& name) {
    if (name == "tinyhar") return ModelKind::TinyHAR;
    if (name == "deepconvlstm") return ModelKind::DeepConvLSTM;
    if (name == "sahar") return ModelKind::SAHAR;
    return std::nullopt;
}

namespace {

struct SamePad {
    std::size_t left, right, out;
};

// Padding so a valid conv produces ceil(t / stride) steps.
SamePad same_pad(std::size_t t, std::size_t k, std::size_t stride) {
    std::size_t out = (t + stride - 1) / stride;
    std::size_t needed = (out - 1) * stride + k;
    std::size_t total = needed > t ? needed - t : 0;
    return {total / 2, total - total / 2, out};
}

void add_same_conv(ModelGraph& g, std::size_t& t, std::size_t k, std::size_t cin, std::size_t cout,
                   std::size_t stride, std::mt19937_64& rng, const std::string& name) {
    auto pad = same_pad(t, k, stride);
    if (pad.left + pad.right > 0) g.add(std::make_unique<PadTime>(pad.left, pad.right));
    g.add(std::make_unique<Conv1d>(k, cin, cout, stride, rng, name));
    g.add(std::make_unique<ReLU>());
    t = pad.out;
}

}  // namespace

ModelGraph build_tinyhar(std::size_t w, std::size_t d, std::size_t c, std::uint64_t seed,
                         std::size_t f) {
    if (w < 8)
        throw std::invalid_argument("tinyhar: window " + std::to_string(w) +
                                    " too small; conv stack (2x stride-2) needs W >= 8");
    std::mt19937_64 rng(seed);
    ModelGraph g("tinyhar", w, d, c, seed);
    g.add(std::make_unique<SplitChannels>(d));
    std::size_t t = w;
    add_same_conv(g, t, 5, 1, f, 2, rng, "conv1");
    add_same_conv(g, t, 5, f, f, 2, rng, "conv2");
    add_same_conv(g, t, 5, f, f, 1, rng, "conv3");
    add_same_conv(g, t, 5, f, f, 1, rng, "conv4");
    g.add(std::make_unique<ChannelsToTokens>(d, t));
    g.add(std::make_unique<SelfAttention>(f, 1, rng, "chattn"));
    g.add(std::make_unique<TokensToFused>(d, t));
    g.add(std::make_unique<Linear>(d * f, 2 * f, rng, "fuse"));
    g.add(std::make_unique<ReLU>());
    g.add(std::make_unique<LSTM>(2 * f, 2 * f, rng, "lstm"));
    g.add(std::make_unique<TemporalAttentionPool>(2 * f, rng, "pool"));
    g.add(std::make_unique<Linear>(2 * f, c, rng, "head"));
    return g;
}

ModelGraph build_deepconvlstm(std::size_t w, std::size_t d, std::size_t c, std::uint64_t seed,
                              std::size_t f, std::size_t hidden) {
    constexpr std::size_t kKernel = 5;
    if (w < 16)
        throw std::invalid_argument("deepconvlstm: window " + std::to_string(w) +
                                    " too small; four valid kernel-5 convs need W >= 16");
    std::size_t t = w;
    for (int i = 0; i < 4; ++i) {
        if (t < kKernel)
            throw std::invalid_argument("deepconvlstm: conv " + std::to_string(i + 1) +
                                        " sees only " + std::to_string(t) + " frames (< kernel 5)");
        t = Conv1d::out_len(t, kKernel, 1);
    }
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    ModelGraph g("deepconvlstm", w, d, c, seed);
    g.add(std::make_unique<Conv1d>(kKernel, d, f, 1, rng, "conv1"));
    g.add(std::make_unique<ReLU>());
    for (int i = 2; i <= 4; ++i) {
        g.add(std::make_unique<Conv1d>(kKernel, f, f, 1, rng, "conv" + std::to_string(i)));
        g.add(std::make_unique<ReLU>());
    }
    g.add(std::make_unique<LSTM>(f, hidden, rng, "lstm1"));
    g.add(std::make_unique<LSTM>(hidden, hidden, rng, "lstm2"));
    g.add(std::make_unique<LastTimestep>());
    g.add(std::make_unique<Linear>(hidden, c, rng, "head"));
    return g;
}

ModelGraph build_sahar(std::size_t w, std::size_t d, std::size_t c, std::uint64_t seed,
                       std::size_t embed, std::size_t heads, std::size_t ff_width,
                       std::size_t blocks) {
    if (w < 8)
        throw std::invalid_argument("sahar: window " + std::to_string(w) +
                                    " too small; conv embedding needs W >= 8");
    std::mt19937_64 rng(seed ^ 0xda3e39cb94b95bdbull);
    ModelGraph g("sahar", w, d, c, seed);
    std::size_t t = w;
    add_same_conv(g, t, 5, d, embed, 1, rng, "embed");
    g.add(std::make_unique<PositionalEncoding>(embed));
    for (std::size_t bi = 0; bi < blocks; ++bi) {
        std::string tag = "blk" + std::to_string(bi);
        std::vector<std::unique_ptr<Layer>> attn;
        attn.push_back(std::make_unique<SelfAttention>(embed, heads, rng, tag + ".attn"));
        g.add(std::make_unique<Residual>(std::move(attn)));
        g.add(std::make_unique<LayerNorm>(embed, tag + ".ln1"));
        std::vector<std::unique_ptr<Layer>> ff;
        ff.push_back(std::make_unique<Linear>(embed, ff_width, rng, tag + ".ff1"));
        ff.push_back(std::make_unique<ReLU>());
        ff.push_back(std::make_unique<Linear>(ff_width, embed, rng, tag + ".ff2"));
        g.add(std::make_unique<Residual>(std::move(ff)));
        g.add(std::make_unique<LayerNorm>(embed, tag + ".ln2"));
    }
    g.add(std::make_unique<TemporalAttentionPool>(embed, rng, "pool"));
    g.add(std::make_unique<Linear>(embed, c, rng, "head"));
    return g;
}

ModelGraph build_model(const ModelSpec& spec) {
    switch (spec.kind) {
        case ModelKind::TinyHAR:
            return build_tinyhar(spec.width, spec.dim, spec.classes, spec.seed);
        case ModelKind::DeepConvLSTM:
            return build_deepconvlstm(spec.width, spec.dim, spec.classes, spec.seed);
        case ModelKind::SAHAR:
            return build_sahar(spec.width, spec.dim, spec.classes, spec.seed);
    }
    throw std::invalid_argument("unknown model kind");
}

WindowPrediction predict_window(net::ModelGraph& graph, const Tensor& window) {
    if (window.ndim() != 2 || window.shape[0] != graph.input_width() ||
        window.shape[1] != graph.input_dim())
        throw std::invalid_argument("predict_window: window " + window.shape_str() +
                                    " does not match model input");
    Tensor batch = window.reshaped({1, window.shape[0], window.shape[1]});
    Tensor logits = graph.forward(batch);
    Tensor probs = softmax_rows(logits);
    WindowPrediction pred;
    pred.probabilities.assign(probs.data.begin(), probs.data.end());
    for (std::size_t j = 1; j < pred.probabilities.size(); ++j)
        if (pred.probabilities[j] > pred.probabilities[static_cast<std::size_t>(pred.label)])
            pred.label = static_cast<int>(j);
    return pred;
}

int predict_trial(net::ModelGraph& graph, const Tensor& windows) {
    if (windows.ndim() != 3 || windows.shape[0] == 0)
        throw std::invalid_argument("predict_trial: expected non-empty [N,W,D]");
    Tensor logits = graph.forward(windows);
    Tensor probs = softmax_rows(logits);
    std::size_t n = probs.shape[0], c = probs.shape[1];
    std::vector<int> votes(c, 0);
    std::vector<double> mass(c, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < c; ++j)
            if (probs.at2(i, j) > probs.at2(i, best)) best = j;
        votes[best] += 1;
        for (std::size_t j = 0; j < c; ++j) mass[j] += probs.at2(i, j);
    }
    std::size_t winner = 0;
    for (std::size_t j = 1; j < c; ++j) {
        if (votes[j] > votes[winner] || (votes[j] == votes[winner] && mass[j] > mass[winner]))
            winner = j;
    }
    return static_cast<int>(winner);
}

}  // namespace tinygaze::models
