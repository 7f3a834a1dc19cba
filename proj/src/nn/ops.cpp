#include "ierot/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>

#include "ierot/nn/kernels.hpp"

namespace ierot::nn {

namespace {

void add_into(Tensor& dst, std::span<const float> src) {
    auto d = dst.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i];
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
    if (t.rank() != rank)
        throw std::invalid_argument(std::string(what) + ": expected rank " + std::to_string(rank) +
                                    ", got shape " + shape_str(t.shape()));
}

kernels::PlaneDims plane_dims(const Tensor& x) {
    return {x.dim(0), x.dim(1), x.dim(2), x.dim(3)};
}

}  // namespace

Var conv2d(const Var& x, const Var& weight) {
    const Tensor& xv = x.value();
    const Tensor& wv = weight.value();
    require_rank(xv, 4, "conv2d input");
    require_rank(wv, 4, "conv2d weight");
    if (wv.dim(1) != xv.dim(1) || wv.dim(2) != 3 || wv.dim(3) != 3)
        throw std::invalid_argument("conv2d: weight " + shape_str(wv.shape()) +
                                    " incompatible with input " + shape_str(xv.shape()));
    const kernels::ConvDims d{xv.dim(0), xv.dim(1), xv.dim(2), xv.dim(3), wv.dim(0)};
    Tensor out({d.n, d.k, d.h, d.w});
    kernels::conv3x3_forward(d, xv.data(), wv.data(), out.data());
    return Var::make_op(std::move(out), {x, weight}, [d](Node& self) {
        const Tensor& xin = self.inputs[0]->value;
        const Tensor& win = self.inputs[1]->value;
        Tensor* gx = self.input_grad(0);
        Tensor* gw = self.input_grad(1);
        Tensor dx = gx ? Tensor(xin.shape()) : Tensor();
        Tensor dw(win.shape());
        kernels::conv3x3_backward(d, xin.data(), win.data(), self.grad.data(), dx.data(), dw.data());
        if (gx) add_into(*gx, dx.data());
        if (gw) add_into(*gw, dw.data());
    });
}

Var batch_norm(const Var& x, const Var& gamma, const Var& beta, BatchNormState& state,
               bool training) {
    const Tensor& xv = x.value();
    require_rank(xv, 4, "batch_norm input");
    const std::size_t c = xv.dim(1);
    expect_shape(gamma.value(), {c}, "batch_norm gamma");
    expect_shape(beta.value(), {c}, "batch_norm beta");
    expect_shape(state.running_mean, {c}, "batch_norm running_mean");
    expect_shape(state.running_var, {c}, "batch_norm running_var");
    const auto d = plane_dims(xv);
    const std::size_t hw = d.h * d.w;

    if (!training) {
        Tensor out(xv.shape());
        Tensor scale({c});
        for (std::size_t ch = 0; ch < c; ++ch)
            scale[ch] = gamma.value()[ch] / std::sqrt(state.running_var[ch] + state.eps);
        for (std::size_t n = 0; n < d.n; ++n)
            for (std::size_t ch = 0; ch < c; ++ch) {
                const std::size_t off = (n * c + ch) * hw;
                const float m = state.running_mean[ch];
                const float b = beta.value()[ch];
                for (std::size_t i = 0; i < hw; ++i) out[off + i] = (xv[off + i] - m) * scale[ch] + b;
            }
        const float eps = state.eps;
        Tensor running_var = state.running_var;
        Tensor running_mean = state.running_mean;
        return Var::make_op(std::move(out), {x, gamma, beta},
                            [d, hw, eps, running_var, running_mean](Node& self) {
            const Tensor& xin = self.inputs[0]->value;
            const Tensor& g = self.inputs[1]->value;
            Tensor* gx = self.input_grad(0);
            Tensor* gg = self.input_grad(1);
            Tensor* gb = self.input_grad(2);
            for (std::size_t ch = 0; ch < d.c; ++ch) {
                const float istd = 1.0f / std::sqrt(running_var[ch] + eps);
                double sg = 0.0, sb = 0.0;
                for (std::size_t n = 0; n < d.n; ++n) {
                    const std::size_t off = (n * d.c + ch) * hw;
                    for (std::size_t i = 0; i < hw; ++i) {
                        const float dy = self.grad[off + i];
                        sb += dy;
                        sg += static_cast<double>(dy) * (xin[off + i] - running_mean[ch]) * istd;
                        if (gx) (*gx)[off + i] += dy * g[ch] * istd;
                    }
                }
                if (gg) (*gg)[ch] += static_cast<float>(sg);
                if (gb) (*gb)[ch] += static_cast<float>(sb);
            }
        });
    }

    if (d.n < 2) throw std::invalid_argument("batch_norm: training mode needs batch size >= 2");
    Tensor out(xv.shape());
    auto xhat = std::make_shared<Tensor>(xv.shape());
    Tensor mean({c}), var({c});
    auto inv_std = std::make_shared<Tensor>(Shape{c});
    kernels::batchnorm_forward_train(d, xv.data(), gamma.value().data(), beta.value().data(),
                                     state.eps, out.data(), xhat->data(), mean.data(), var.data(),
                                     inv_std->data());
    const double m = static_cast<double>(d.n * hw);
    for (std::size_t ch = 0; ch < c; ++ch) {
        const float unbiased = static_cast<float>(var[ch] * m / (m - 1.0));
        state.running_mean[ch] =
            (1.0f - state.momentum) * state.running_mean[ch] + state.momentum * mean[ch];
        state.running_var[ch] =
            (1.0f - state.momentum) * state.running_var[ch] + state.momentum * unbiased;
    }
    return Var::make_op(std::move(out), {x, gamma, beta}, [d, xhat, inv_std](Node& self) {
        const Tensor& g = self.inputs[1]->value;
        Tensor* gx = self.input_grad(0);
        Tensor* gg = self.input_grad(1);
        Tensor* gb = self.input_grad(2);
        Tensor dx = gx ? Tensor(xhat->shape()) : Tensor();
        Tensor dg({d.c}), db({d.c});
        kernels::batchnorm_backward_train(d, self.grad.data(), xhat->data(), g.data(),
                                          inv_std->data(), dx.data(), dg.data(), db.data());
        if (gx) add_into(*gx, dx.data());
        if (gg) add_into(*gg, dg.data());
        if (gb) add_into(*gb, db.data());
    });
}

Var relu(const Var& x) {
    const Tensor& xv = x.value();
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < xv.numel(); ++i) out[i] = xv[i] > 0.0f ? xv[i] : 0.0f;
    return Var::make_op(std::move(out), {x}, [](Node& self) {
        const Tensor& xin = self.inputs[0]->value;
        Tensor* gx = self.input_grad(0);
        if (!gx) return;
        for (std::size_t i = 0; i < xin.numel(); ++i)
            if (xin[i] > 0.0f) (*gx)[i] += self.grad[i];
    });
}

Var maxpool2x2(const Var& x) {
    const Tensor& xv = x.value();
    require_rank(xv, 4, "maxpool2x2 input");
    const auto d = plane_dims(xv);
    if (d.h < 2 || d.w < 2) throw std::invalid_argument("maxpool2x2: spatial extent below 2");
    Tensor out({d.n, d.c, d.h / 2, d.w / 2});
    auto argmax = std::make_shared<std::vector<std::uint32_t>>(out.numel());
    kernels::maxpool2x2_forward(d, xv.data(), out.data(), *argmax);
    return Var::make_op(std::move(out), {x}, [d, argmax](Node& self) {
        Tensor* gx = self.input_grad(0);
        if (!gx) return;
        Tensor dx(gx->shape());
        kernels::maxpool2x2_backward(d, self.grad.data(), *argmax, dx.data());
        add_into(*gx, dx.data());
    });
}

Var global_avg_pool(const Var& x) {
    const Tensor& xv = x.value();
    require_rank(xv, 4, "global_avg_pool input");
    const auto d = plane_dims(xv);
    const std::size_t hw = d.h * d.w;
    if (hw == 0) throw std::invalid_argument("global_avg_pool: empty spatial extent");
    Tensor out({d.n, d.c});
    for (std::size_t p = 0; p < d.n * d.c; ++p) {
        float acc = 0.0f;
        for (std::size_t i = 0; i < hw; ++i) acc += xv[p * hw + i];
        out[p] = acc / static_cast<float>(hw);
    }
    return Var::make_op(std::move(out), {x}, [d, hw](Node& self) {
        Tensor* gx = self.input_grad(0);
        if (!gx) return;
        const float inv = 1.0f / static_cast<float>(hw);
        for (std::size_t p = 0; p < d.n * d.c; ++p) {
            const float g = self.grad[p] * inv;
            for (std::size_t i = 0; i < hw; ++i) (*gx)[p * hw + i] += g;
        }
    });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
    const Tensor& xv = x.value();
    const Tensor& wv = weight.value();
    require_rank(xv, 2, "linear input");
    require_rank(wv, 2, "linear weight");
    if (wv.dim(1) != xv.dim(1))
        throw std::invalid_argument("linear: weight " + shape_str(wv.shape()) +
                                    " incompatible with input " + shape_str(xv.shape()));
    const std::size_t n = xv.dim(0), in = xv.dim(1), out_f = wv.dim(0);
    expect_shape(bias.value(), {out_f}, "linear bias");
    Tensor out({n, out_f});
    kernels::linear_forward(n, in, out_f, xv.data(), wv.data(), bias.value().data(), out.data());
    return Var::make_op(std::move(out), {x, weight, bias}, [n, in, out_f](Node& self) {
        const Tensor& xin = self.inputs[0]->value;
        const Tensor& win = self.inputs[1]->value;
        Tensor* gx = self.input_grad(0);
        Tensor* gw = self.input_grad(1);
        Tensor* gb = self.input_grad(2);
        Tensor dx = gx ? Tensor(xin.shape()) : Tensor();
        Tensor dw(win.shape());
        Tensor db({out_f});
        kernels::linear_backward(n, in, out_f, xin.data(), win.data(), self.grad.data(), dx.data(),
                                 dw.data(), db.data());
        if (gx) add_into(*gx, dx.data());
        if (gw) add_into(*gw, dw.data());
        if (gb) add_into(*gb, db.data());
    });
}

CrossEntropyResult cross_entropy_with_grad(const Tensor& logits, std::span<const int> labels) {
    require_rank(logits, 2, "softmax_cross_entropy logits");
    const std::size_t n = logits.dim(0), classes = logits.dim(1);
    if (labels.size() != n)
        throw std::invalid_argument("softmax_cross_entropy: " + std::to_string(labels.size()) +
                                    " labels for " + std::to_string(n) + " rows");
    if (n == 0) throw std::invalid_argument("softmax_cross_entropy: empty batch");
    CrossEntropyResult r{0.0, Tensor(logits.shape())};
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= classes)
            throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(label) +
                                        " out of range [0," + std::to_string(classes) + ")");
        const float* row = logits.ptr() + i * classes;
        double mx = row[0];
        for (std::size_t j = 1; j < classes; ++j) mx = std::max(mx, static_cast<double>(row[j]));
        double sum = 0.0;
        for (std::size_t j = 0; j < classes; ++j) sum += std::exp(row[j] - mx);
        const double lse = mx + std::log(sum);
        r.loss += (lse - row[label]) * inv_n;
        for (std::size_t j = 0; j < classes; ++j) {
            const double p = std::exp(row[j] - lse);
            r.grad[i * classes + j] =
                static_cast<float>((p - (static_cast<int>(j) == label ? 1.0 : 0.0)) * inv_n);
        }
    }
    return r;
}

Var softmax_cross_entropy(const Var& logits, std::span<const int> labels) {
    auto r = cross_entropy_with_grad(logits.value(), labels);
    auto grad = std::make_shared<Tensor>(std::move(r.grad));
    Tensor loss({1}, static_cast<float>(r.loss));
    return Var::make_op(std::move(loss), {logits}, [grad](Node& self) {
        Tensor* gl = self.input_grad(0);
        if (!gl) return;
        const float up = self.grad[0];
        for (std::size_t i = 0; i < grad->numel(); ++i) (*gl)[i] += up * (*grad)[i];
    });
}

std::vector<int> argmax_rows(const Tensor& logits) {
    require_rank(logits, 2, "argmax_rows");
    const std::size_t n = logits.dim(0), classes = logits.dim(1);
    std::vector<int> out(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < classes; ++j)
            if (logits[i * classes + j] > logits[i * classes + best]) best = j;
        out[i] = static_cast<int>(best);
    }
    return out;
}

}  // namespace ierot::nn
