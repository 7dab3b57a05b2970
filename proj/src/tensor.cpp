#include "tinygaze/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace tinygaze::net {

std::string Tensor::shape_str() const {
    std::ostringstream ss;
    ss << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) ss << (i ? "," : "") << shape[i];
    ss << "]";
    return ss.str();
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

using MatMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using MatMapMut = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n,
            bool transpose_a, bool transpose_b, bool accumulate) {
    // Operands are copied into Eigen-owned (aligned) storage so the product
    // is bit-reproducible: vectorized kernels otherwise pick different code
    // paths — and different roundings — depending on heap pointer alignment.
    using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Mat A = MatMap(a, static_cast<Eigen::Index>(transpose_a ? k : m),
                   static_cast<Eigen::Index>(transpose_a ? m : k));
    Mat B = MatMap(b, static_cast<Eigen::Index>(transpose_b ? n : k),
                   static_cast<Eigen::Index>(transpose_b ? k : n));
    Mat C(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    if (!transpose_a && !transpose_b) {
        C.noalias() = A * B;
    } else if (transpose_a && !transpose_b) {
        C.noalias() = A.transpose() * B;
    } else if (!transpose_a && transpose_b) {
        C.noalias() = A * B.transpose();
    } else {
        C.noalias() = A.transpose() * B.transpose();
    }
    const double* src = C.data();
    const std::size_t total = m * n;
    if (accumulate) {
        for (std::size_t i = 0; i < total; ++i) c[i] += src[i];
    } else {
        for (std::size_t i = 0; i < total; ++i) c[i] = src[i];
    }
}

Tensor matmul2d(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.shape[1] != b.shape[0])
        throw std::invalid_argument("matmul2d shape mismatch: " + a.shape_str() + " x " + b.shape_str());
    Tensor c({a.shape[0], b.shape[1]});
    matmul(a.data.data(), b.data.data(), c.data.data(), a.shape[0], a.shape[1], b.shape[1]);
    return c;
}

void init_glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    for (double& v : t.data) v = dist(rng);
}

}  // namespace tinygaze::net
