#include "ierot/nn/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ierot/errors.hpp"

namespace ierot::nn {

void OptimizerConfig::validate() const {
    if (!(lr0 > 0.0)) throw ConfigError("lr0 must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
}

void sgd_nesterov_step(Tensor& value, Tensor& momentum_buffer, const Tensor& grad, double lr,
                       const OptimizerConfig& cfg, std::string_view name) {
    expect_shape(grad, value.shape(), "sgd step gradient");
    expect_shape(momentum_buffer, value.shape(), "sgd step momentum buffer");
    for (std::size_t i = 0; i < grad.numel(); ++i)
        if (!std::isfinite(grad[i]))
            throw NumericalError("non-finite gradient in parameter '" + std::string(name) + "'");
    const auto mu = static_cast<float>(cfg.momentum);
    const auto wd = static_cast<float>(cfg.weight_decay);
    const auto step = static_cast<float>(lr);
    for (std::size_t i = 0; i < value.numel(); ++i) {
        const float g = grad[i] + wd * value[i];
        const float v = mu * momentum_buffer[i] + g;
        momentum_buffer[i] = v;
        value[i] -= step * (cfg.nesterov ? g + mu * v : v);
    }
}

double LrSchedule::at(int epoch) const {
    if (epoch < 0 || epoch >= total_epochs)
        throw std::out_of_range("lr_schedule: epoch " + std::to_string(epoch) + " outside [0, " +
                                std::to_string(total_epochs) + ")");
    double lr = lr0;
    for (int m : milestones)
        if (epoch >= m) lr *= factor;
    return lr;
}

std::size_t fan_in(const Shape& shape) {
    if (shape.size() < 2) throw std::invalid_argument("fan_in: weight needs rank >= 2");
    std::size_t f = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) f *= shape[i];
    return f;
}

Tensor he_normal(const Shape& shape, Rng& rng) {
    const std::size_t f = fan_in(shape);
    if (f == 0) throw std::invalid_argument("he_normal: zero fan-in for shape " + shape_str(shape));
    const double stddev = std::sqrt(2.0 / static_cast<double>(f));
    Tensor t(shape);
    for (auto& x : t.data()) x = static_cast<float>(stddev * rng.normal());
    return t;
}

}  // namespace ierot::nn
