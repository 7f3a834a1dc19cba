#pragma once

#include <span>

#include "ierot/nn/autograd.hpp"

namespace ierot::nn {

/// 3x3 cross-correlation, stride 1, padding 1, no bias.
/// x: [N,C,H,W], weight: [K,C,3,3] -> [N,K,H,W]
Var conv2d(const Var& x, const Var& weight);

struct BatchNormState {
    Tensor running_mean;  // [C], starts at 0
    Tensor running_var;   // [C], starts at 1
    float eps = 1e-5f;
    float momentum = 0.1f;

    explicit BatchNormState(std::size_t channels = 0)
        : running_mean({channels}, 0.0f), running_var({channels}, 1.0f) {}
};

/// Per-channel batch norm over (N,H,W). Training mode normalizes with batch
/// statistics (N >= 2 required) and updates the running mean and unbiased
/// running variance; eval mode uses the running statistics.
Var batch_norm(const Var& x, const Var& gamma, const Var& beta, BatchNormState& state,
               bool training);

Var relu(const Var& x);

/// 2x2 max pooling, stride 2; odd extents are floor-divided.
Var maxpool2x2(const Var& x);

/// [N,C,H,W] -> [N,C]
Var global_avg_pool(const Var& x);

/// x: [N,I], weight: [O,I], bias: [O] -> [N,O]
Var linear(const Var& x, const Var& weight, const Var& bias);

/// Mean over the batch of -log softmax(logits)[label]; scalar result.
/// Gradient w.r.t. logits is (softmax - onehot) / N.
Var softmax_cross_entropy(const Var& logits, std::span<const int> labels);

/// Scalar loss value and logits gradient without building a graph.
struct CrossEntropyResult {
    double loss;
    Tensor grad;
};
CrossEntropyResult cross_entropy_with_grad(const Tensor& logits, std::span<const int> labels);

/// Argmax per row, ties to the lowest index.
std::vector<int> argmax_rows(const Tensor& logits);

}  // namespace ierot::nn
