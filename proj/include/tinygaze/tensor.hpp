#pragma once

#include <cstddef>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tinygaze::net {

// Dense row-major tensor of doubles.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        data.assign(numel(), 0.0);
    }
    Tensor(std::vector<std::size_t> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != numel()) throw std::invalid_argument("tensor data/shape mismatch");
    }

    std::size_t numel() const {
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        return n;
    }
    std::size_t ndim() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }

    double& operator()(std::size_t i) { return data[i]; }
    double operator()(std::size_t i) const { return data[i]; }
    double& at2(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    double at2(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
    double& at3(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    double at3(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * shape[1] + j) * shape[2] + k];
    }

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

    Tensor reshaped(std::vector<std::size_t> s) const {
        Tensor t(std::move(s), data);
        return t;
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    std::string shape_str() const;
    bool all_finite() const;
};

// C = A(mxk) * B(kxn), row-major. Backed by Eigen.
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n,
            bool transpose_a = false, bool transpose_b = false,
            bool accumulate = false);

Tensor matmul2d(const Tensor& a, const Tensor& b);

// Glorot-style uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
void init_glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

}  // namespace tinygaze::net
