#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ierot/nn/tensor.hpp"
#include "ierot/rng.hpp"

namespace ierot::nn {

struct OptimizerConfig {
    double lr0 = 0.01;
    double momentum = 0.9;
    double weight_decay = 5.0e-4;
    bool nesterov = true;

    void validate() const;
};

/// One SGD update in place.
///   g  = grad + weight_decay * value
///   v  = momentum * v + g
///   value -= lr * (g + momentum * v)   (Nesterov)
///   value -= lr * v                    (plain momentum)
/// Throws NumericalError naming `name` on a non-finite gradient.
void sgd_nesterov_step(Tensor& value, Tensor& momentum_buffer, const Tensor& grad, double lr,
                       const OptimizerConfig& cfg, std::string_view name = {});

/// Step decay: lr0 * factor^(number of milestones <= epoch).
struct LrSchedule {
    double lr0 = 0.01;
    std::vector<int> milestones{30, 60, 80};
    double factor = 0.1;
    int total_epochs = 100;

    /// Throws std::out_of_range for epoch outside [0, total_epochs).
    double at(int epoch) const;
};

/// Fan-in of a weight shape: product of all extents after the first
/// ([K,C,kh,kw] -> C*kh*kw, [O,I] -> I).
std::size_t fan_in(const Shape& shape);

/// i.i.d. N(0, 2 / fan_in) samples.
Tensor he_normal(const Shape& shape, Rng& rng);

}  // namespace ierot::nn
