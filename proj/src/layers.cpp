#include "tinygaze/layers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tinygaze::net {

namespace {

std::size_t leading(const std::vector<std::size_t>& shape) {
    std::size_t m = 1;
    for (std::size_t i = 0; i + 1 < shape.size(); ++i) m *= shape[i];
    return m;
}

[[noreturn]] void shape_error(const std::string& op, const Tensor& x, const std::string& expect) {
    throw std::invalid_argument(op + ": got " + x.shape_str() + ", expected " + expect);
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void softmax_rows_inplace(double* row, std::size_t n) {
    double mx = row[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, row[i]);
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        row[i] = std::exp(row[i] - mx);
        sum += row[i];
    }
    for (std::size_t i = 0; i < n; ++i) row[i] /= sum;
}

}  // namespace

// ---------------------------------------------------------------- Linear

Linear::Linear(std::size_t in, std::size_t out, std::mt19937_64& rng, std::string name)
    : in_(in),
      out_(out),
      w_(name + ".w", Tensor({in, out})),
      b_(name + ".b", Tensor({out})) {
    init_glorot_uniform(w_.value, in, out, rng);
}

Tensor Linear::forward(const Tensor& x) {
    if (x.ndim() < 2 || x.shape.back() != in_) shape_error("linear", x, "[...," + std::to_string(in_) + "]");
    in_shape_ = x.shape;
    std::size_t m = leading(x.shape);
    x_ = x.reshaped({m, in_});
    Tensor out({m, out_});
    matmul(x_.data.data(), w_.value.data.data(), out.data.data(), m, in_, out_);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < out_; ++j) out.at2(i, j) += b_.value(j);
    auto shape = in_shape_;
    shape.back() = out_;
    return out.reshaped(shape);
}

Tensor Linear::backward(const Tensor& dout) {
    std::size_t m = leading(in_shape_);
    Tensor d = dout.reshaped({m, out_});
    // dW += x^T d ; db += colsum(d)
    matmul(x_.data.data(), d.data.data(), w_.grad.data.data(), in_, m, out_, true, false, true);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < out_; ++j) b_.grad(j) += d.at2(i, j);
    Tensor dx({m, in_});
    matmul(d.data.data(), w_.value.data.data(), dx.data.data(), m, out_, in_, false, true);
    return dx.reshaped(in_shape_);
}

std::string Linear::spec() const {
    return "linear(in=" + std::to_string(in_) + ",out=" + std::to_string(out_) + ")";
}

// ---------------------------------------------------------------- ReLU

Tensor ReLU::forward(const Tensor& x) {
    x_ = x;
    Tensor out = x;
    for (double& v : out.data) v = v > 0 ? v : 0.0;
    return out;
}

Tensor ReLU::backward(const Tensor& dout) {
    Tensor dx = dout;
    for (std::size_t i = 0; i < dx.data.size(); ++i)
        if (x_.data[i] <= 0) dx.data[i] = 0.0;
    return dx;
}

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(std::size_t kernel, std::size_t cin, std::size_t cout, std::size_t stride,
               std::mt19937_64& rng, std::string name)
    : k_(kernel),
      cin_(cin),
      cout_(cout),
      stride_(stride),
      w_(name + ".w", Tensor({kernel * cin, cout})),
      b_(name + ".b", Tensor({cout})) {
    init_glorot_uniform(w_.value, kernel * cin, cout, rng);
}

std::size_t Conv1d::out_len(std::size_t t, std::size_t k, std::size_t stride) {
    return (t - k) / stride + 1;
}

Tensor Conv1d::forward(const Tensor& x) {
    if (x.ndim() != 3 || x.shape[2] != cin_) shape_error("conv1d", x, "[B,T," + std::to_string(cin_) + "]");
    std::size_t b = x.shape[0], t = x.shape[1];
    if (t < k_)
        throw std::invalid_argument("conv1d: kernel " + std::to_string(k_) +
                                    " exceeds input length " + std::to_string(t));
    in_shape_ = x.shape;
    std::size_t tp = out_len(t, k_, stride_);
    cols_ = Tensor({b * tp, k_ * cin_});
    for (std::size_t bi = 0; bi < b; ++bi)
        for (std::size_t ti = 0; ti < tp; ++ti) {
            double* row = &cols_.at2(bi * tp + ti, 0);
            const double* src = &x.data[(bi * t + ti * stride_) * cin_];
            std::copy(src, src + k_ * cin_, row);
        }
    Tensor out({b * tp, cout_});
    matmul(cols_.data.data(), w_.value.data.data(), out.data.data(), b * tp, k_ * cin_, cout_);
    for (std::size_t i = 0; i < b * tp; ++i)
        for (std::size_t j = 0; j < cout_; ++j) out.at2(i, j) += b_.value(j);
    return out.reshaped({b, tp, cout_});
}

Tensor Conv1d::backward(const Tensor& dout) {
    std::size_t b = in_shape_[0], t = in_shape_[1];
    std::size_t tp = out_len(t, k_, stride_);
    Tensor d = dout.reshaped({b * tp, cout_});
    matmul(cols_.data.data(), d.data.data(), w_.grad.data.data(), k_ * cin_, b * tp, cout_, true, false, true);
    for (std::size_t i = 0; i < b * tp; ++i)
        for (std::size_t j = 0; j < cout_; ++j) b_.grad(j) += d.at2(i, j);
    Tensor dcols({b * tp, k_ * cin_});
    matmul(d.data.data(), w_.value.data.data(), dcols.data.data(), b * tp, cout_, k_ * cin_, false, true);
    Tensor dx(in_shape_);
    for (std::size_t bi = 0; bi < b; ++bi)
        for (std::size_t ti = 0; ti < tp; ++ti) {
            const double* row = &dcols.at2(bi * tp + ti, 0);
            double* dst = &dx.data[(bi * t + ti * stride_) * cin_];
            for (std::size_t j = 0; j < k_ * cin_; ++j) dst[j] += row[j];
        }
    return dx;
}

std::string Conv1d::spec() const {
    std::ostringstream ss;
    ss << "conv1d(k=" << k_ << ",cin=" << cin_ << ",cout=" << cout_ << ",stride=" << stride_ << ")";
    return ss.str();
}

// ---------------------------------------------------------------- PadTime

Tensor PadTime::forward(const Tensor& x) {
    if (x.ndim() != 3) shape_error("pad_time", x, "[B,T,C]");
    in_shape_ = x.shape;
    std::size_t b = x.shape[0], t = x.shape[1], c = x.shape[2];
    Tensor out({b, t + left_ + right_, c});
    for (std::size_t bi = 0; bi < b; ++bi)
        for (std::size_t ti = 0; ti < t; ++ti)
            std::copy(&x.data[(bi * t + ti) * c], &x.data[(bi * t + ti) * c] + c,
                      &out.data[(bi * (t + left_ + right_) + ti + left_) * c]);
    return out;
}

Tensor PadTime::backward(const Tensor& dout) {
    std::size_t b = in_shape_[0], t = in_shape_[1], c = in_shape_[2];
    Tensor dx(in_shape_);
    std::size_t tp = t + left_ + right_;
    for (std::size_t bi = 0; bi < b; ++bi)
        for (std::size_t ti = 0; ti < t; ++ti)
            std::copy(&dout.data[(bi * tp + ti + left_) * c],
                      &dout.data[(bi * tp + ti + left_) * c] + c, &dx.data[(bi * t + ti) * c]);
    return dx;
}

std::string PadTime::spec() const {
    return "pad_time(left=" + std::to_string(left_) + ",right=" + std::to_string(right_) + ")";
}

// ---------------------------------------------------------------- LSTM

LSTM::LSTM(std::size_t din, std::size_t hidden, std::mt19937_64& rng, std::string name)
    : din_(din),
      h_(hidden),
      wx_(name + ".wx", Tensor({din, 4 * hidden})),
      wh_(name + ".wh", Tensor({hidden, 4 * hidden})),
      b_(name + ".b", Tensor({4 * hidden})) {
    init_glorot_uniform(wx_.value, din, 4 * hidden, rng);
    init_glorot_uniform(wh_.value, hidden, 4 * hidden, rng);
}

Tensor LSTM::forward(const Tensor& x) {
    if (x.ndim() != 3 || x.shape[2] != din_) shape_error("lstm", x, "[B,T," + std::to_string(din_) + "]");
    x_ = x;
    std::size_t b = x.shape[0], t = x.shape[1];
    gates_.assign(t, Tensor({b, 4 * h_}));
    cells_.assign(t, Tensor({b, h_}));
    tanhc_.assign(t, Tensor({b, h_}));
    hidden_ = Tensor({b, t, h_});
    Tensor h_prev({b, h_});
    Tensor c_prev({b, h_});
    for (std::size_t ti = 0; ti < t; ++ti) {
        Tensor& z = gates_[ti];
        // z = x_t Wx + h_prev Wh + b; x_t rows are strided, gather explicitly
        for (std::size_t bi = 0; bi < b; ++bi) {
            const double* xt = &x.data[(bi * t + ti) * din_];
            double* zrow = &z.at2(bi, 0);
            for (std::size_t j = 0; j < 4 * h_; ++j) zrow[j] = b_.value(j);
            for (std::size_t i = 0; i < din_; ++i) {
                double xv = xt[i];
                const double* wrow = &wx_.value.at2(i, 0);
                for (std::size_t j = 0; j < 4 * h_; ++j) zrow[j] += xv * wrow[j];
            }
        }
        matmul(h_prev.data.data(), wh_.value.data.data(), z.data.data(), b, h_, 4 * h_, false, false, true);
        for (std::size_t bi = 0; bi < b; ++bi) {
            double* zrow = &z.at2(bi, 0);
            for (std::size_t j = 0; j < h_; ++j) {
                double ig = sigmoid(zrow[j]);
                double fg = sigmoid(zrow[h_ + j]);
                double gg = std::tanh(zrow[2 * h_ + j]);
                double og = sigmoid(zrow[3 * h_ + j]);
                zrow[j] = ig;
                zrow[h_ + j] = fg;
                zrow[2 * h_ + j] = gg;
                zrow[3 * h_ + j] = og;
                double c = fg * c_prev.at2(bi, j) + ig * gg;
                cells_[ti].at2(bi, j) = c;
                double tc = std::tanh(c);
                tanhc_[ti].at2(bi, j) = tc;
                hidden_.at3(bi, ti, j) = og * tc;
            }
        }
        c_prev = cells_[ti];
        for (std::size_t bi = 0; bi < b; ++bi)
            for (std::size_t j = 0; j < h_; ++j) h_prev.at2(bi, j) = hidden_.at3(bi, ti, j);
    }
    return hidden_;
}

Tensor LSTM::backward(const Tensor& dout) {
    std::size_t b = x_.shape[0], t = x_.shape[1];
    Tensor dx(x_.shape);
    Tensor dh_next({b, h_});
    Tensor dc_next({b, h_});
    Tensor dz({b, 4 * h_});
    Tensor h_prev_t({b, h_});
    for (std::size_t ti_plus = t; ti_plus > 0; --ti_plus) {
        std::size_t ti = ti_plus - 1;
        const Tensor& z = gates_[ti];
        for (std::size_t bi = 0; bi < b; ++bi) {
            for (std::size_t j = 0; j < h_; ++j) {
                double dh = dout.at3(bi, ti, j) + dh_next.at2(bi, j);
                double ig = z.at2(bi, j);
                double fg = z.at2(bi, h_ + j);
                double gg = z.at2(bi, 2 * h_ + j);
                double og = z.at2(bi, 3 * h_ + j);
                double tc = tanhc_[ti].at2(bi, j);
                double c_prev = ti == 0 ? 0.0 : cells_[ti - 1].at2(bi, j);
                double dog = dh * tc;
                double dc = dc_next.at2(bi, j) + dh * og * (1.0 - tc * tc);
                double dig = dc * gg;
                double dgg = dc * ig;
                double dfg = dc * c_prev;
                dc_next.at2(bi, j) = dc * fg;
                dz.at2(bi, j) = dig * ig * (1.0 - ig);
                dz.at2(bi, h_ + j) = dfg * fg * (1.0 - fg);
                dz.at2(bi, 2 * h_ + j) = dgg * (1.0 - gg * gg);
                dz.at2(bi, 3 * h_ + j) = dog * og * (1.0 - og);
            }
        }
        // dWx += x_t^T dz (x_t gathered), db += colsum dz
        for (std::size_t bi = 0; bi < b; ++bi) {
            const double* xt = &x_.data[(bi * t + ti) * din_];
            const double* dzrow = &dz.at2(bi, 0);
            for (std::size_t i = 0; i < din_; ++i) {
                double xv = xt[i];
                double* grow = &wx_.grad.at2(i, 0);
                for (std::size_t j = 0; j < 4 * h_; ++j) grow[j] += xv * dzrow[j];
            }
            for (std::size_t j = 0; j < 4 * h_; ++j) b_.grad(j) += dzrow[j];
        }
        if (ti > 0) {
            for (std::size_t bi = 0; bi < b; ++bi)
                for (std::size_t j = 0; j < h_; ++j)
                    h_prev_t.at2(bi, j) = hidden_.at3(bi, ti - 1, j);
            matmul(h_prev_t.data.data(), dz.data.data(), wh_.grad.data.data(), h_, b, 4 * h_, true,
                   false, true);
            matmul(dz.data.data(), wh_.value.data.data(), dh_next.data.data(), b, 4 * h_, h_, false,
                   true);
        } else {
            std::fill(dh_next.data.begin(), dh_next.data.end(), 0.0);
        }
        // dx_t = dz Wx^T
        Tensor dxt({b, din_});
        matmul(dz.data.data(), wx_.value.data.data(), dxt.data.data(), b, 4 * h_, din_, false, true);
        for (std::size_t bi = 0; bi < b; ++bi)
            for (std::size_t i = 0; i < din_; ++i) dx.data[(bi * t + ti) * din_ + i] = dxt.at2(bi, i);
    }
    return dx;
}

std::string LSTM::spec() const {
    return "lstm(in=" + std::to_string(din_) + ",hidden=" + std::to_string(h_) + ")";
}

// ---------------------------------------------------------------- LastTimestep

Tensor LastTimestep::forward(const Tensor& x) {
    if (x.ndim() != 3) shape_error("last_timestep", x, "[B,T,H]");
    in_shape_ = x.shape;
    std::size_t b = x.shape[0], t = x.shape[1], h = x.shape[2];
    Tensor out({b, h});
    for (std::size_t bi = 0; bi < b; ++bi)
        for (std::size_t j = 0; j < h; ++j) out.at2(bi, j) = x.at3(bi, t - 1, j);
    return out;
}

Tensor LastTimestep::backward(const Tensor& dout) {
    std::size_t b = in_shape_[0], t = in_shape_[1], h = in_shape_[2];
    Tensor dx(in_shape_);
    for (std::size_t bi = 0; bi < b; ++bi)
        for (std::size_t j = 0; j < h; ++j) dx.at3(bi, t - 1, j) = dout.at2(bi, j);
    return dx;
}

// ---------------------------------------------------------------- SelfAttention

SelfAttention::SelfAttention(std::size_t embed, std::size_t heads, std::mt19937_64& rng,
                             std::string name)
    : e_(embed),
      heads_(heads),
      dk_(embed / heads),
      wq_(name + ".wq", Tensor({embed, embed})),
      bq_(name + ".bq", Tensor({embed})),
      wk_(name + ".wk", Tensor({embed, embed})),
      wv_(name + ".wv", Tensor({embed, embed})),
      bv_(name + ".bv", Tensor({embed})),
      wo_(name + ".wo", Tensor({embed, embed})),
      bo_(name + ".bo", Tensor({embed})) {
    if (embed % heads != 0)
        throw std::invalid_argument("self_attention: embed " + std::to_string(embed) +
                                    " not divisible by heads " + std::to_string(heads));
    init_glorot_uniform(wq_.value, embed, embed, rng);
    init_glorot_uniform(wk_.value, embed, embed, rng);
    init_glorot_uniform(wv_.value, embed, embed, rng);
    init_glorot_uniform(wo_.value, embed, embed, rng);
}

namespace {
// Projects flat [M,E] through w, optionally adding a bias.
Tensor project(const Tensor& x, const Parameter& w, const Parameter* b) {
    std::size_t m = x.shape[0], e = x.shape[1];
    Tensor out({m, e});
    matmul(x.data.data(), w.value.data.data(), out.data.data(), m, e, e);
    if (b)
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < e; ++j) out.at2(i, j) += b->value(j);
    return out;
}
}  // namespace

Tensor SelfAttention::forward(const Tensor& x) {
    if (x.ndim() != 3 || x.shape[2] != e_)
        shape_error("self_attention", x, "[N,T," + std::to_string(e_) + "]");
    n_ = x.shape[0];
    t_ = x.shape[1];
    x_ = x.reshaped({n_ * t_, e_});
    q_ = project(x_, wq_, &bq_);
    k_ = project(x_, wk_, nullptr);
    v_ = project(x_, wv_, &bv_);
    attn_ = Tensor({n_, heads_, t_, t_});
    ctx_ = Tensor({n_ * t_, e_});
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk_));
    std::vector<double> qh(t_ * dk_), kh(t_ * dk_), vh(t_ * dk_), ch(t_ * dk_);
    for (std::size_t n = 0; n < n_; ++n) {
        for (std::size_t h = 0; h < heads_; ++h) {
            for (std::size_t t = 0; t < t_; ++t)
                for (std::size_t d = 0; d < dk_; ++d) {
                    qh[t * dk_ + d] = q_.at2(n * t_ + t, h * dk_ + d);
                    kh[t * dk_ + d] = k_.at2(n * t_ + t, h * dk_ + d);
                    vh[t * dk_ + d] = v_.at2(n * t_ + t, h * dk_ + d);
                }
            double* a = &attn_.data[((n * heads_) + h) * t_ * t_];
            matmul(qh.data(), kh.data(), a, t_, dk_, t_, false, true);
            for (std::size_t i = 0; i < t_ * t_; ++i) a[i] *= scale;
            for (std::size_t t = 0; t < t_; ++t) softmax_rows_inplace(a + t * t_, t_);
            matmul(a, vh.data(), ch.data(), t_, t_, dk_);
            for (std::size_t t = 0; t < t_; ++t)
                for (std::size_t d = 0; d < dk_; ++d)
                    ctx_.at2(n * t_ + t, h * dk_ + d) = ch[t * dk_ + d];
        }
    }
    Tensor out = project(ctx_, wo_, &bo_);
    return out.reshaped({n_, t_, e_});
}

Tensor SelfAttention::backward(const Tensor& dout_in) {
    Tensor dout = dout_in.reshaped({n_ * t_, e_});
    std::size_t m = n_ * t_;
    // output projection
    matmul(ctx_.data.data(), dout.data.data(), wo_.grad.data.data(), e_, m, e_, true, false, true);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < e_; ++j) bo_.grad(j) += dout.at2(i, j);
    Tensor dctx({m, e_});
    matmul(dout.data.data(), wo_.value.data.data(), dctx.data.data(), m, e_, e_, false, true);

    Tensor dq({m, e_}), dk({m, e_}), dv({m, e_});
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk_));
    std::vector<double> qh(t_ * dk_), kh(t_ * dk_), vh(t_ * dk_), dch(t_ * dk_);
    std::vector<double> da(t_ * t_), ds(t_ * t_), dqh(t_ * dk_), dkh(t_ * dk_), dvh(t_ * dk_);
    for (std::size_t n = 0; n < n_; ++n) {
        for (std::size_t h = 0; h < heads_; ++h) {
            for (std::size_t t = 0; t < t_; ++t)
                for (std::size_t d = 0; d < dk_; ++d) {
                    qh[t * dk_ + d] = q_.at2(n * t_ + t, h * dk_ + d);
                    kh[t * dk_ + d] = k_.at2(n * t_ + t, h * dk_ + d);
                    vh[t * dk_ + d] = v_.at2(n * t_ + t, h * dk_ + d);
                    dch[t * dk_ + d] = dctx.at2(n * t_ + t, h * dk_ + d);
                }
            const double* a = &attn_.data[((n * heads_) + h) * t_ * t_];
            // dA = dC V^T ; dV = A^T dC
            matmul(dch.data(), vh.data(), da.data(), t_, dk_, t_, false, true);
            matmul(a, dch.data(), dvh.data(), t_, t_, dk_, true, false);
            // softmax rows: dS = A * (dA - rowdot(A,dA)), then * scale
            for (std::size_t i = 0; i < t_; ++i) {
                double dot = 0;
                for (std::size_t j = 0; j < t_; ++j) dot += a[i * t_ + j] * da[i * t_ + j];
                for (std::size_t j = 0; j < t_; ++j)
                    ds[i * t_ + j] = a[i * t_ + j] * (da[i * t_ + j] - dot) * scale;
            }
            matmul(ds.data(), kh.data(), dqh.data(), t_, t_, dk_);
            matmul(ds.data(), qh.data(), dkh.data(), t_, t_, dk_, true, false);
            for (std::size_t t = 0; t < t_; ++t)
                for (std::size_t d = 0; d < dk_; ++d) {
                    dq.at2(n * t_ + t, h * dk_ + d) = dqh[t * dk_ + d];
                    dk.at2(n * t_ + t, h * dk_ + d) = dkh[t * dk_ + d];
                    dv.at2(n * t_ + t, h * dk_ + d) = dvh[t * dk_ + d];
                }
        }
    }
    // back through the three input projections
    auto proj_back = [&](const Tensor& dproj, Parameter& w, Parameter* b, Tensor& dx_accum) {
        matmul(x_.data.data(), dproj.data.data(), w.grad.data.data(), e_, m, e_, true, false, true);
        if (b)
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < e_; ++j) b->grad(j) += dproj.at2(i, j);
        matmul(dproj.data.data(), w.value.data.data(), dx_accum.data.data(), m, e_, e_, false, true,
               true);
    };
    Tensor dx({m, e_});
    proj_back(dq, wq_, &bq_, dx);
    proj_back(dk, wk_, nullptr, dx);
    proj_back(dv, wv_, &bv_, dx);
    return dx.reshaped({n_, t_, e_});
}

std::string SelfAttention::spec() const {
    return "self_attention(embed=" + std::to_string(e_) + ",heads=" + std::to_string(heads_) + ")";
}

// ---------------------------------------------------------------- LayerNorm

LayerNorm::LayerNorm(std::size_t dim, std::string name)
    : dim_(dim), g_(name + ".g", Tensor({dim})), b_(name + ".b", Tensor({dim})) {
    for (double& v : g_.value.data) v = 1.0;
}

Tensor LayerNorm::forward(const Tensor& x) {
    if (x.shape.back() != dim_) shape_error("layer_norm", x, "[...," + std::to_string(dim_) + "]");
    constexpr double kEps = 1e-5;
    in_shape_ = x.shape;
    std::size_t m = leading(x.shape);
    xhat_ = Tensor({m, dim_});
    inv_std_.assign(m, 0.0);
    Tensor out({m, dim_});
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = &x.data[i * dim_];
        double mu = 0;
        for (std::size_t j = 0; j < dim_; ++j) mu += row[j];
        mu /= static_cast<double>(dim_);
        double var = 0;
        for (std::size_t j = 0; j < dim_; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= static_cast<double>(dim_);
        double is = 1.0 / std::sqrt(var + kEps);
        inv_std_[i] = is;
        for (std::size_t j = 0; j < dim_; ++j) {
            double xh = (row[j] - mu) * is;
            xhat_.at2(i, j) = xh;
            out.at2(i, j) = g_.value(j) * xh + b_.value(j);
        }
    }
    return out.reshaped(in_shape_);
}

Tensor LayerNorm::backward(const Tensor& dout_in) {
    std::size_t m = leading(in_shape_);
    Tensor dout = dout_in.reshaped({m, dim_});
    Tensor dx({m, dim_});
    const double n = static_cast<double>(dim_);
    for (std::size_t i = 0; i < m; ++i) {
        double sum_dxhat = 0, sum_dxhat_xhat = 0;
        for (std::size_t j = 0; j < dim_; ++j) {
            double dxh = dout.at2(i, j) * g_.value(j);
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xhat_.at2(i, j);
            g_.grad(j) += dout.at2(i, j) * xhat_.at2(i, j);
            b_.grad(j) += dout.at2(i, j);
        }
        for (std::size_t j = 0; j < dim_; ++j) {
            double dxh = dout.at2(i, j) * g_.value(j);
            dx.at2(i, j) =
                inv_std_[i] / n * (n * dxh - sum_dxhat - xhat_.at2(i, j) * sum_dxhat_xhat);
        }
    }
    return dx.reshaped(in_shape_);
}

std::string LayerNorm::spec() const { return "layer_norm(dim=" + std::to_string(dim_) + ")"; }

// ---------------------------------------------------------------- Residual

Tensor Residual::forward(const Tensor& x) {
    Tensor y = x;
    for (auto& l : inner_) y = l->forward(y);
    if (!y.same_shape(x)) shape_error("residual", y, "same shape as input " + x.shape_str());
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += x.data[i];
    return y;
}

Tensor Residual::backward(const Tensor& dout) {
    Tensor d = dout;
    for (auto it = inner_.rbegin(); it != inner_.rend(); ++it) d = (*it)->backward(d);
    for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] += dout.data[i];
    return d;
}

std::vector<Parameter*> Residual::params() {
    std::vector<Parameter*> out;
    for (auto& l : inner_)
        for (auto* p : l->params()) out.push_back(p);
    return out;
}

std::string Residual::spec() const {
    std::string s = "residual(";
    for (std::size_t i = 0; i < inner_.size(); ++i) s += (i ? ";" : "") + inner_[i]->spec();
    return s + ")";
}

// ---------------------------------------------------------------- PositionalEncoding

Tensor PositionalEncoding::forward(const Tensor& x) {
    if (x.ndim() != 3 || x.shape[2] != e_)
        shape_error("positional_encoding", x, "[B,T," + std::to_string(e_) + "]");
    std::size_t b = x.shape[0], t = x.shape[1];
    Tensor out = x;
    for (std::size_t ti = 0; ti < t; ++ti)
        for (std::size_t j = 0; j < e_; ++j) {
            double angle = static_cast<double>(ti) /
                           std::pow(10000.0, static_cast<double>(2 * (j / 2)) / static_cast<double>(e_));
            double pe = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
            for (std::size_t bi = 0; bi < b; ++bi) out.at3(bi, ti, j) += pe;
        }
    return out;
}

std::string PositionalEncoding::spec() const {
    return "positional_encoding(embed=" + std::to_string(e_) + ")";
}

// ---------------------------------------------------------------- TemporalAttentionPool

TemporalAttentionPool::TemporalAttentionPool(std::size_t hidden, std::mt19937_64& rng,
                                             std::string name)
    : h_(hidden), w_(name + ".w", Tensor({hidden})), b_(name + ".b", Tensor({1})) {
    init_glorot_uniform(w_.value, hidden, 1, rng);
}

Tensor TemporalAttentionPool::forward(const Tensor& x) {
    if (x.ndim() != 3 || x.shape[2] != h_)
        shape_error("temporal_attention_pool", x, "[B,T," + std::to_string(h_) + "]");
    x_ = x;
    std::size_t b = x.shape[0], t = x.shape[1];
    attn_ = Tensor({b, t});
    Tensor out({b, h_});
    for (std::size_t bi = 0; bi < b; ++bi) {
        for (std::size_t ti = 0; ti < t; ++ti) {
            double s = b_.value(0);
            for (std::size_t j = 0; j < h_; ++j) s += x.at3(bi, ti, j) * w_.value(j);
            attn_.at2(bi, ti) = s;
        }
        softmax_rows_inplace(&attn_.at2(bi, 0), t);
        for (std::size_t ti = 0; ti < t; ++ti) {
            double a = attn_.at2(bi, ti);
            for (std::size_t j = 0; j < h_; ++j) out.at2(bi, j) += a * x.at3(bi, ti, j);
        }
    }
    return out;
}

Tensor TemporalAttentionPool::backward(const Tensor& dout) {
    std::size_t b = x_.shape[0], t = x_.shape[1];
    Tensor dx(x_.shape);
    for (std::size_t bi = 0; bi < b; ++bi) {
        // g_t = dout . x_t ; ds = a * (g - sum(a*g))
        std::vector<double> g(t);
        double mix = 0;
        for (std::size_t ti = 0; ti < t; ++ti) {
            double d = 0;
            for (std::size_t j = 0; j < h_; ++j) d += dout.at2(bi, j) * x_.at3(bi, ti, j);
            g[ti] = d;
            mix += attn_.at2(bi, ti) * d;
        }
        for (std::size_t ti = 0; ti < t; ++ti) {
            double a = attn_.at2(bi, ti);
            double ds = a * (g[ti] - mix);
            b_.grad(0) += ds;
            for (std::size_t j = 0; j < h_; ++j) {
                w_.grad(j) += ds * x_.at3(bi, ti, j);
                dx.at3(bi, ti, j) = a * dout.at2(bi, j) + ds * w_.value(j);
            }
        }
    }
    return dx;
}

std::string TemporalAttentionPool::spec() const {
    return "temporal_attention_pool(hidden=" + std::to_string(h_) + ")";
}

// ---------------------------------------------------------------- reshape layers

Tensor SplitChannels::forward(const Tensor& x) {
    if (x.ndim() != 3 || x.shape[2] != d_)
        shape_error("split_channels", x, "[B,W," + std::to_string(d_) + "]");
    in_shape_ = x.shape;
    std::size_t b = x.shape[0], w = x.shape[1];
    Tensor out({b * d_, w, 1});
    for (std::size_t bi = 0; bi < b; ++bi)
        for (std::size_t wi = 0; wi < w; ++wi)
            for (std::size_t di = 0; di < d_; ++di)
                out.at3(bi * d_ + di, wi, 0) = x.at3(bi, wi, di);
    return out;
}

Tensor SplitChannels::backward(const Tensor& dout) {
    std::size_t b = in_shape_[0], w = in_shape_[1];
    Tensor dx(in_shape_);
    for (std::size_t bi = 0; bi < b; ++bi)
        for (std::size_t wi = 0; wi < w; ++wi)
            for (std::size_t di = 0; di < d_; ++di)
                dx.at3(bi, wi, di) = dout.at3(bi * d_ + di, wi, 0);
    return dx;
}

std::string SplitChannels::spec() const { return "split_channels(d=" + std::to_string(d_) + ")"; }

Tensor ChannelsToTokens::forward(const Tensor& x) {
    if (x.ndim() != 3 || x.shape[1] != t_ || x.shape[0] % d_ != 0)
        shape_error("channels_to_tokens", x,
                    "[B*" + std::to_string(d_) + "," + std::to_string(t_) + ",F]");
    b_ = x.shape[0] / d_;
    f_ = x.shape[2];
    Tensor out({b_ * t_, d_, f_});
    for (std::size_t bi = 0; bi < b_; ++bi)
        for (std::size_t di = 0; di < d_; ++di)
            for (std::size_t ti = 0; ti < t_; ++ti)
                for (std::size_t fi = 0; fi < f_; ++fi)
                    out.at3(bi * t_ + ti, di, fi) = x.at3(bi * d_ + di, ti, fi);
    return out;
}

Tensor ChannelsToTokens::backward(const Tensor& dout) {
    Tensor dx({b_ * d_, t_, f_});
    for (std::size_t bi = 0; bi < b_; ++bi)
        for (std::size_t di = 0; di < d_; ++di)
            for (std::size_t ti = 0; ti < t_; ++ti)
                for (std::size_t fi = 0; fi < f_; ++fi)
                    dx.at3(bi * d_ + di, ti, fi) = dout.at3(bi * t_ + ti, di, fi);
    return dx;
}

std::string ChannelsToTokens::spec() const {
    return "channels_to_tokens(d=" + std::to_string(d_) + ",t=" + std::to_string(t_) + ")";
}

Tensor TokensToFused::forward(const Tensor& x) {
    if (x.ndim() != 3 || x.shape[1] != d_ || x.shape[0] % t_ != 0)
        shape_error("tokens_to_fused", x,
                    "[B*" + std::to_string(t_) + "," + std::to_string(d_) + ",F]");
    b_ = x.shape[0] / t_;
    f_ = x.shape[2];
    // contiguous relabel: [B*T, D, F] and [B, T, D*F] share the same layout
    return x.reshaped({b_, t_, d_ * f_});
}

Tensor TokensToFused::backward(const Tensor& dout) {
    return dout.reshaped({b_ * t_, d_, f_});
}

std::string TokensToFused::spec() const {
    return "tokens_to_fused(d=" + std::to_string(d_) + ",t=" + std::to_string(t_) + ")";
}

}  // namespace tinygaze::net
