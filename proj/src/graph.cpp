#include "tinygaze/graph.hpp"

#include "tinygaze/util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace tinygaze::net {

void ModelGraph::add(std::unique_ptr<Layer> layer) {
    for (auto* p : layer->params()) params_.push_back(p);
    layers_.push_back(std::move(layer));
}

Tensor ModelGraph::forward(const Tensor& x) {
    if (x.ndim() != 3 || x.shape[1] != width_ || x.shape[2] != dim_)
        throw std::invalid_argument(name_ + ": input " + x.shape_str() + " does not match [B," +
                                    std::to_string(width_) + "," + std::to_string(dim_) + "]");
    Tensor y = x;
    for (auto& l : layers_) y = l->forward(y);
    forward_ran_ = true;
    return y;
}

void ModelGraph::backward(const Tensor& dlogits) {
    if (!forward_ran_) throw std::logic_error(name_ + ": backward called before forward");
    Tensor d = dlogits;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) d = (*it)->backward(d);
}

void ModelGraph::zero_grad() {
    for (auto* p : params_) std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
}

std::size_t ModelGraph::count_params() const {
    std::size_t n = 0;
    for (auto* p : params_) n += p->value.numel();
    return n;
}

std::vector<double> ModelGraph::snapshot() const {
    std::vector<double> flat;
    flat.reserve(count_params());
    for (auto* p : params_) flat.insert(flat.end(), p->value.data.begin(), p->value.data.end());
    return flat;
}

void ModelGraph::restore(const std::vector<double>& flat) {
    if (flat.size() != count_params())
        throw std::invalid_argument(name_ + ": snapshot size mismatch");
    std::size_t off = 0;
    for (auto* p : params_) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                  flat.begin() + static_cast<std::ptrdiff_t>(off + p->value.numel()),
                  p->value.data.begin());
        off += p->value.numel();
    }
}

void ModelGraph::save(const std::string& prefix) const {
    auto flat = snapshot();
    write_doubles_le(prefix + ".params", flat);
    std::ostringstream m;
    m << "tinygaze-checkpoint v1\n";
    m << "model " << name_ << "\n";
    m << "input " << width_ << " " << dim_ << "\n";
    m << "classes " << classes_ << "\n";
    m << "seed " << seed_ << "\n";
    m << "param_count " << count_params() << "\n";
    m << "blob_hash " << hex64(fnv1a64(std::span<const double>(flat))) << "\n";
    for (const auto& l : layers_) m << "layer " << l->spec() << "\n";
    for (const auto* p : params_) m << "tensor " << p->name << " " << p->value.numel() << "\n";
    write_text_file(prefix + ".manifest", m.str());
}

void ModelGraph::load(const std::string& prefix) {
    std::string manifest = read_text_file(prefix + ".manifest");
    std::istringstream in(manifest);
    std::string line;
    std::string blob_hash;
    while (std::getline(in, line)) {
        auto toks = split_ws(line);
        if (toks.size() >= 2 && toks[0] == "model" && toks[1] != name_)
            throw std::runtime_error("checkpoint model " + toks[1] + " does not match " + name_);
        if (toks.size() >= 2 && toks[0] == "param_count" &&
            std::stoull(toks[1]) != count_params())
            throw std::runtime_error("checkpoint parameter count mismatch");
        if (toks.size() >= 2 && toks[0] == "blob_hash") blob_hash = toks[1];
    }
    auto flat = read_doubles_le(prefix + ".params");
    if (!blob_hash.empty() && hex64(fnv1a64(std::span<const double>(flat))) != blob_hash)
        throw std::runtime_error("checkpoint blob hash mismatch: " + prefix);
    restore(flat);
}

Tensor softmax_rows(const Tensor& logits) {
    std::size_t b = logits.shape[0], c = logits.shape[1];
    Tensor p = logits;
    for (std::size_t i = 0; i < b; ++i) {
        double* row = &p.at2(i, 0);
        double mx = *std::max_element(row, row + c);
        double sum = 0;
        for (std::size_t j = 0; j < c; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (std::size_t j = 0; j < c; ++j) row[j] /= sum;
    }
    return p;
}

LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.ndim() != 2 || logits.shape[0] != labels.size())
        throw std::invalid_argument("softmax_cross_entropy: logits " + logits.shape_str() +
                                    " vs " + std::to_string(labels.size()) + " labels");
    std::size_t b = logits.shape[0], c = logits.shape[1];
    for (int l : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= c)
            throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(l) +
                                        " out of range [0," + std::to_string(c) + ")");
    LossResult res;
    res.dlogits = softmax_rows(logits);
    double loss = 0;
    for (std::size_t i = 0; i < b; ++i) {
        double p = res.dlogits.at2(i, static_cast<std::size_t>(labels[i]));
        loss += -std::log(std::max(p, 1e-300));
        res.dlogits.at2(i, static_cast<std::size_t>(labels[i])) -= 1.0;
    }
    for (double& v : res.dlogits.data) v /= static_cast<double>(b);
    res.loss = loss / static_cast<double>(b);
    return res;
}

void adam_step(ModelGraph& graph, const AdamConfig& cfg) {
    for (auto* p : graph.parameters()) {
        p->step += 1;
        double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p->step));
        double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p->step));
        for (std::size_t i = 0; i < p->value.numel(); ++i) {
            double g = p->grad(i);
            p->adam_m(i) = cfg.beta1 * p->adam_m(i) + (1.0 - cfg.beta1) * g;
            p->adam_v(i) = cfg.beta2 * p->adam_v(i) + (1.0 - cfg.beta2) * g * g;
            double mhat = p->adam_m(i) / bc1;
            double vhat = p->adam_v(i) / bc2;
            p->value(i) -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
        std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
    }
}

double gradient_check(ModelGraph& graph, const Tensor& batch, const std::vector<int>& labels,
                      double h, std::size_t max_samples, std::uint64_t seed) {
    auto loss_of = [&]() {
        Tensor logits = graph.forward(batch);
        return softmax_cross_entropy(logits, labels).loss;
    };
    graph.zero_grad();
    Tensor logits = graph.forward(batch);
    auto ce = softmax_cross_entropy(logits, labels);
    graph.backward(ce.dlogits);

    struct Slot {
        Parameter* p;
        std::size_t idx;
    };
    std::vector<Slot> all;
    for (auto* p : graph.parameters())
        for (std::size_t i = 0; i < p->value.numel(); ++i) all.push_back({p, i});
    if (all.empty()) return 0.0;  // vacuous pass

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t n = std::min(max_samples, all.size());

    double max_rel = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        auto& slot = all[order[s]];
        double ga = slot.p->grad(slot.idx);
        double orig = slot.p->value(slot.idx);
        slot.p->value(slot.idx) = orig + h;
        double lp = loss_of();
        slot.p->value(slot.idx) = orig - h;
        double lm = loss_of();
        slot.p->value(slot.idx) = orig;
        double gn = (lp - lm) / (2.0 * h);
        double rel = std::abs(ga - gn) / std::max(1e-8, std::abs(ga) + std::abs(gn));
        max_rel = std::max(max_rel, rel);
    }
    graph.zero_grad();
    return max_rel;
}

}  // namespace tinygaze::net
