#pragma once

// Raw compute kernels behind the autodiff ops.
//
// `kernels::` holds the OpenMP versions used for training. Work is split so
// that every output element is reduced by exactly one thread in a fixed order,
// which keeps results bitwise identical for any thread count.
// `kernels::reference::` holds plain serial loops kept as test oracles and as
// the benchmark baseline.

#include <cstddef>
#include <cstdint>
#include <span>

namespace ierot::nn::kernels {

struct ConvDims {
    std::size_t n, c, h, w, k;  // batch, in channels, height, width, out channels
};

struct PlaneDims {
    std::size_t n, c, h, w;
};

// 3x3 cross-correlation, stride 1, zero padding 1.
// x: [n,c,h,w], weight: [k,c,3,3], out: [n,k,h,w] (overwritten).
void conv3x3_forward(const ConvDims& d, std::span<const float> x, std::span<const float> weight,
                     std::span<float> out);
// dx (may be empty to skip) and dweight are overwritten.
void conv3x3_backward(const ConvDims& d, std::span<const float> x, std::span<const float> weight,
                      std::span<const float> dout, std::span<float> dx, std::span<float> dweight);

// Training-mode batch norm over (n, h, w) per channel. Writes the normalized
// input xhat, the per-channel batch mean, biased variance and 1/sqrt(var+eps).
void batchnorm_forward_train(const PlaneDims& d, std::span<const float> x,
                             std::span<const float> gamma, std::span<const float> beta, float eps,
                             std::span<float> out, std::span<float> xhat,
                             std::span<float> batch_mean, std::span<float> batch_var,
                             std::span<float> inv_std);
void batchnorm_backward_train(const PlaneDims& d, std::span<const float> dout,
                              std::span<const float> xhat, std::span<const float> gamma,
                              std::span<const float> inv_std, std::span<float> dx,
                              std::span<float> dgamma, std::span<float> dbeta);

// 2x2 max pooling, stride 2, odd extents floor-divided. argmax holds the flat
// input offset of each selected element (first maximum wins).
void maxpool2x2_forward(const PlaneDims& d, std::span<const float> x, std::span<float> out,
                        std::span<std::uint32_t> argmax);
void maxpool2x2_backward(const PlaneDims& d, std::span<const float> dout,
                         std::span<const std::uint32_t> argmax, std::span<float> dx);

// y[n,o] = sum_i x[n,i] * weight[o,i] + bias[o]
void linear_forward(std::size_t n, std::size_t in, std::size_t out_features,
                    std::span<const float> x, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> y);
void linear_backward(std::size_t n, std::size_t in, std::size_t out_features,
                     std::span<const float> x, std::span<const float> weight,
                     std::span<const float> dy, std::span<float> dx, std::span<float> dweight,
                     std::span<float> dbias);

namespace reference {

void conv3x3_forward(const ConvDims& d, std::span<const float> x, std::span<const float> weight,
                     std::span<float> out);
void conv3x3_backward(const ConvDims& d, std::span<const float> x, std::span<const float> weight,
                      std::span<const float> dout, std::span<float> dx, std::span<float> dweight);
void batchnorm_forward_train(const PlaneDims& d, std::span<const float> x,
                             std::span<const float> gamma, std::span<const float> beta, float eps,
                             std::span<float> out, std::span<float> xhat,
                             std::span<float> batch_mean, std::span<float> batch_var,
                             std::span<float> inv_std);
void batchnorm_backward_train(const PlaneDims& d, std::span<const float> dout,
                              std::span<const float> xhat, std::span<const float> gamma,
                              std::span<const float> inv_std, std::span<float> dx,
                              std::span<float> dgamma, std::span<float> dbeta);
void maxpool2x2_forward(const PlaneDims& d, std::span<const float> x, std::span<float> out,
                        std::span<std::uint32_t> argmax);
void linear_forward(std::size_t n, std::size_t in, std::size_t out_features,
                    std::span<const float> x, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> y);

}  // namespace reference

/// Thread count used by the OpenMP kernels (1 when built without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace ierot::nn::kernels
