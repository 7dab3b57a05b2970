#pragma once

#include "tinygaze/graph.hpp"

#include <optional>
#include <string>

namespace tinygaze::models {

enum class ModelKind : int { TinyHAR = 0, DeepConvLSTM = 1, SAHAR = 2 };

const char* model_name(ModelKind k);
std::optional<ModelKind> model_from_name(const std::string& name);

struct ModelSpec {
    ModelKind kind = ModelKind::TinyHAR;
    std::size_t width = 32;   // W, frames per window
    std::size_t dim = 48;     // D, feature channels
    std::size_t classes = 5;  // C
    std::uint64_t seed = 7;
};

// Per-channel conv encoder -> cross-channel attention -> FC fusion ->
// LSTM -> temporal attention pooling -> classifier.
net::ModelGraph build_tinyhar(std::size_t w, std::size_t d, std::size_t c, std::uint64_t seed,
                              std::size_t filters = 16);

// 4x time conv (full channel mixing) -> 2-layer LSTM -> last-timestep classifier.
net::ModelGraph build_deepconvlstm(std::size_t w, std::size_t d, std::size_t c, std::uint64_t seed,
                                   std::size_t filters = 64, std::size_t hidden = 256);

// Conv embedding -> positional encoding -> 2 transformer blocks ->
// temporal attention pooling -> classifier.
net::ModelGraph build_sahar(std::size_t w, std::size_t d, std::size_t c, std::uint64_t seed,
                            std::size_t embed = 128, std::size_t heads = 4,
                            std::size_t ff_width = 256, std::size_t blocks = 2);

net::ModelGraph build_model(const ModelSpec& spec);

struct WindowPrediction {
    int label = 0;
    std::vector<double> probabilities;
};

// Argmax of softmax; ties break to the lowest class index.
WindowPrediction predict_window(net::ModelGraph& graph, const net::Tensor& window);

// Majority vote over windows; ties by summed probability mass, then lowest index.
int predict_trial(net::ModelGraph& graph, const net::Tensor& windows);

}  // namespace tinygaze::models
