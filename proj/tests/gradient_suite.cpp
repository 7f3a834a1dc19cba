#include "gradient_suite.hpp"

#include <algorithm>
#include <numeric>

#include "gradcheck.hpp"
#include "ierot/nn/ops.hpp"

namespace ierot::testing {

using nn::Shape;
using nn::Tensor;
using nn::Var;

namespace {

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + rng.uniform_index(hi - lo + 1);
}

// Values bounded away from the ReLU kink by more than the FD step.
Tensor away_from_zero(const Shape& shape, Rng& rng) {
    Tensor t(shape);
    for (auto& v : t.data()) {
        const double mag = 0.05 + rng.uniform01();
        v = static_cast<float>(rng.uniform_index(2) ? mag : -mag);
    }
    return t;
}

// Distinct values with gaps of 0.02, so a 1e-3 perturbation never changes a max.
Tensor distinct_values(const Shape& shape, Rng& rng) {
    Tensor t(shape);
    std::vector<std::size_t> order(t.numel());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
    for (std::size_t i = 0; i < order.size(); ++i) t[order[i]] = static_cast<float>(0.02 * i - 1.0);
    return t;
}

}  // namespace

std::vector<OpGradReport> run_gradient_suite(int seeds) {
    std::vector<OpGradReport> reports;
    auto record = [&](const std::string& op, double err) {
        auto it = std::find_if(reports.begin(), reports.end(), [&](auto& r) { return r.op == op; });
        if (it == reports.end()) {
            reports.push_back({op, 0, 0.0});
            it = reports.end() - 1;
        }
        ++it->cases;
        it->worst_rel_error = std::max(it->worst_rel_error, err);
    };

    for (int s = 0; s < seeds; ++s) {
        Rng rng = Rng::derive(2024, {static_cast<std::uint64_t>(s)});

        {  // conv2d
            const std::size_t n = pick(rng, 1, 2), c = pick(rng, 1, 3), k = pick(rng, 1, 3);
            const std::size_t h = pick(rng, 2, 5), w = pick(rng, 2, 5);
            auto r = gradcheck([](const std::vector<Var>& in) { return nn::conv2d(in[0], in[1]); },
                               {random_tensor({n, c, h, w}, rng), random_tensor({k, c, 3, 3}, rng, 0.5)},
                               rng);
            record("conv2d", r.max_rel_error);
        }
        {  // batch_norm (train mode)
            const std::size_t n = pick(rng, 2, 3), c = pick(rng, 1, 3), h = pick(rng, 1, 3),
                              w = pick(rng, 2, 3);
            nn::BatchNormState state(c);
            auto r = gradcheck(
                [&state](const std::vector<Var>& in) { return nn::batch_norm(in[0], in[1], in[2], state, true); },
                {random_tensor({n, c, h, w}, rng), random_tensor({c}, rng), random_tensor({c}, rng)}, rng);
            record("batch_norm", r.max_rel_error);
        }
        {  // batch_norm (eval mode)
            const std::size_t n = pick(rng, 1, 3), c = pick(rng, 1, 3), h = pick(rng, 1, 3),
                              w = pick(rng, 1, 3);
            nn::BatchNormState state(c);
            for (std::size_t i = 0; i < c; ++i) {
                state.running_mean[i] = static_cast<float>(rng.normal());
                state.running_var[i] = static_cast<float>(0.5 + rng.uniform01());
            }
            auto r = gradcheck(
                [&state](const std::vector<Var>& in) { return nn::batch_norm(in[0], in[1], in[2], state, false); },
                {random_tensor({n, c, h, w}, rng), random_tensor({c}, rng), random_tensor({c}, rng)}, rng);
            record("batch_norm_eval", r.max_rel_error);
        }
        {  // relu
            const Shape shape{pick(rng, 1, 3), pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 4)};
            auto r = gradcheck([](const std::vector<Var>& in) { return nn::relu(in[0]); },
                               {away_from_zero(shape, rng)}, rng);
            record("relu", r.max_rel_error);
        }
        {  // maxpool2x2, odd extents included
            const Shape shape{pick(rng, 1, 2), pick(rng, 1, 3), pick(rng, 2, 5), pick(rng, 2, 5)};
            auto r = gradcheck([](const std::vector<Var>& in) { return nn::maxpool2x2(in[0]); },
                               {distinct_values(shape, rng)}, rng);
            record("maxpool2x2", r.max_rel_error);
        }
        {  // global_avg_pool
            const Shape shape{pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 1, 4), pick(rng, 1, 4)};
            auto r = gradcheck([](const std::vector<Var>& in) { return nn::global_avg_pool(in[0]); },
                               {random_tensor(shape, rng)}, rng);
            record("global_avg_pool", r.max_rel_error);
        }
        {  // linear
            const std::size_t n = pick(rng, 1, 4), in_f = pick(rng, 1, 6), out_f = pick(rng, 1, 5);
            auto r = gradcheck(
                [](const std::vector<Var>& in) { return nn::linear(in[0], in[1], in[2]); },
                {random_tensor({n, in_f}, rng), random_tensor({out_f, in_f}, rng), random_tensor({out_f}, rng)},
                rng);
            record("linear", r.max_rel_error);
        }
        {  // softmax_cross_entropy
            const std::size_t n = pick(rng, 1, 5), classes = pick(rng, 2, 5);
            std::vector<int> labels(n);
            for (auto& l : labels) l = static_cast<int>(rng.uniform_index(classes));
            auto r = gradcheck(
                [labels](const std::vector<Var>& in) { return nn::softmax_cross_entropy(in[0], labels); },
                {random_tensor({n, classes}, rng, 2.0)}, rng);
            record("softmax_cross_entropy", r.max_rel_error);
        }
    }
    return reports;
}

}  // namespace ierot::testing
