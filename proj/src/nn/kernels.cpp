#include "ierot/nn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ierot::nn::kernels {

namespace {

bool nested() {
#ifdef _OPENMP
    return omp_in_parallel() != 0;
#else
    return true;
#endif
}

constexpr std::size_t kMr = 6;
constexpr std::size_t kNr = 32;
constexpr std::size_t kRowChunk = 8 * kMr;

// Sixteen floats; lowered to whatever vector width the target offers. A tile
// row is two of them.
typedef float Vec16 __attribute__((vector_size(64)));

// C[i0:i1, :] (+)= A[i0:i1, :K] * B[:K, :N]. Each C element is reduced over k
// in ascending order, then added to C once. Panels are packed and zero-padded
// so edge tiles run the same arithmetic as interior ones.
template <bool Accumulate>
void gemm_rows(std::size_t i0, std::size_t i1, std::size_t n, std::size_t k_dim, const float* a,
               std::size_t lda, const float* b, std::size_t ldb, float* c, std::size_t ldc) {
    const std::size_t row_blocks = (i1 - i0 + kMr - 1) / kMr;
    std::vector<float> ap(row_blocks * kMr * k_dim, 0.0f);  // [block][k][r]
    for (std::size_t blk = 0; blk < row_blocks; ++blk) {
        float* dst = ap.data() + blk * kMr * k_dim;
        const std::size_t rows = std::min(kMr, i1 - i0 - blk * kMr);
        for (std::size_t r = 0; r < rows; ++r) {
            const float* src = a + (i0 + blk * kMr + r) * lda;
            for (std::size_t k = 0; k < k_dim; ++k) dst[k * kMr + r] = src[k];
        }
    }
    std::vector<Vec16> bp(k_dim * 2);  // [k][two halves of the tile row]
    for (std::size_t j0 = 0; j0 < n; j0 += kNr) {
        const std::size_t jn = std::min(kNr, n - j0);
        for (std::size_t k = 0; k < k_dim; ++k) {
            const float* src = b + k * ldb + j0;
            float row[kNr] = {};
            std::copy(src, src + jn, row);
            std::memcpy(&bp[2 * k], row, sizeof row);
        }
        for (std::size_t blk = 0; blk < row_blocks; ++blk) {
            const float* pa = ap.data() + blk * kMr * k_dim;
            Vec16 l0{}, l1{}, l2{}, l3{}, l4{}, l5{}, h0{}, h1{}, h2{}, h3{}, h4{}, h5{};
            for (std::size_t k = 0; k < k_dim; ++k) {
                const Vec16 b0 = bp[2 * k], b1 = bp[2 * k + 1];
                const float* av = pa + k * kMr;
                l0 += av[0] * b0;
                h0 += av[0] * b1;
                l1 += av[1] * b0;
                h1 += av[1] * b1;
                l2 += av[2] * b0;
                h2 += av[2] * b1;
                l3 += av[3] * b0;
                h3 += av[3] * b1;
                l4 += av[4] * b0;
                h4 += av[4] * b1;
                l5 += av[5] * b0;
                h5 += av[5] * b1;
            }
            const Vec16 tile[kMr][2] = {{l0, h0}, {l1, h1}, {l2, h2}, {l3, h3}, {l4, h4}, {l5, h5}};
            float out[kMr][kNr];
            std::memcpy(out, tile, sizeof out);
            const std::size_t rows = std::min(kMr, i1 - i0 - blk * kMr);
            for (std::size_t r = 0; r < rows; ++r) {
                float* crow = c + (i0 + blk * kMr + r) * ldc + j0;
                for (std::size_t j = 0; j < jn; ++j) {
                    const float v = out[r][j];
                    if constexpr (Accumulate)
                        crow[j] += v;
                    else
                        crow[j] = v;
                }
            }
        }
    }
}

// Row-parallel unless already inside a parallel region.
template <bool Accumulate>
void gemm(std::size_t m, std::size_t n, std::size_t k_dim, const float* a, const float* b, float* c) {
    const auto chunks = static_cast<std::ptrdiff_t>((m + kRowChunk - 1) / kRowChunk);
#pragma omp parallel for schedule(static) if (!nested() && chunks > 1)
    for (std::ptrdiff_t ch = 0; ch < chunks; ++ch) {
        const std::size_t i0 = static_cast<std::size_t>(ch) * kRowChunk;
        gemm_rows<Accumulate>(i0, std::min(m, i0 + kRowChunk), n, k_dim, a, k_dim, b, n, c, n);
    }
}

// col[(ci*9 + ky*3 + kx), y*w + x] = x_padded[ci, y+ky-1, x+kx-1]
void im2col(const float* x, std::size_t c, std::size_t h, std::size_t w, float* col) {
    const std::size_t hw = h * w;
    for (std::size_t ci = 0; ci < c; ++ci) {
        const float* plane = x + ci * hw;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                float* dst = col + (ci * 9 + static_cast<std::size_t>(ky * 3 + kx)) * hw;
                for (std::size_t y = 0; y < h; ++y) {
                    const long sy = static_cast<long>(y) + ky - 1;
                    float* drow = dst + y * w;
                    if (sy < 0 || sy >= static_cast<long>(h)) {
                        std::fill(drow, drow + w, 0.0f);
                        continue;
                    }
                    const float* srow = plane + static_cast<std::size_t>(sy) * w;
                    for (std::size_t xx = 0; xx < w; ++xx) {
                        const long sx = static_cast<long>(xx) + kx - 1;
                        drow[xx] = (sx < 0 || sx >= static_cast<long>(w)) ? 0.0f : srow[sx];
                    }
                }
            }
        }
    }
}

// Transposed layout: colt[y*w + x, ci*9 + ky*3 + kx].
void im2col_t(const float* x, std::size_t c, std::size_t h, std::size_t w, float* colt) {
    const std::size_t c9 = c * 9;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t xx = 0; xx < w; ++xx) {
            float* dst = colt + (y * w + xx) * c9;
            for (std::size_t ci = 0; ci < c; ++ci) {
                const float* plane = x + ci * h * w;
                for (int ky = 0; ky < 3; ++ky) {
                    const long sy = static_cast<long>(y) + ky - 1;
                    for (int kx = 0; kx < 3; ++kx) {
                        const long sx = static_cast<long>(xx) + kx - 1;
                        const bool in = sy >= 0 && sy < static_cast<long>(h) && sx >= 0 &&
                                        sx < static_cast<long>(w);
                        *dst++ = in ? plane[static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)] : 0.0f;
                    }
                }
            }
        }
    }
}

// dx[ci, y+ky-1, x+kx-1] += col[(ci*9 + ky*3 + kx), y*w + x]
void col2im(const float* col, std::size_t c, std::size_t h, std::size_t w, float* dx) {
    const std::size_t hw = h * w;
    std::fill(dx, dx + c * hw, 0.0f);
    for (std::size_t ci = 0; ci < c; ++ci) {
        float* plane = dx + ci * hw;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const float* src = col + (ci * 9 + static_cast<std::size_t>(ky * 3 + kx)) * hw;
                for (std::size_t y = 0; y < h; ++y) {
                    const long sy = static_cast<long>(y) + ky - 1;
                    if (sy < 0 || sy >= static_cast<long>(h)) continue;
                    float* drow = plane + static_cast<std::size_t>(sy) * w;
                    const float* srow = src + y * w;
                    for (std::size_t xx = 0; xx < w; ++xx) {
                        const long sx = static_cast<long>(xx) + kx - 1;
                        if (sx >= 0 && sx < static_cast<long>(w)) drow[sx] += srow[xx];
                    }
                }
            }
        }
    }
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
    omp_set_num_threads(std::max(1, n));
#else
    (void)n;
#endif
}

void conv3x3_forward(const ConvDims& d, std::span<const float> x, std::span<const float> weight,
                     std::span<float> out) {
    const std::size_t hw = d.h * d.w;
    const std::size_t c9 = d.c * 9;
#pragma omp parallel
    {
        std::vector<float> col(c9 * hw);
#pragma omp for schedule(static)
        for (std::ptrdiff_t ni = 0; ni < static_cast<std::ptrdiff_t>(d.n); ++ni) {
            const auto n = static_cast<std::size_t>(ni);
            im2col(x.data() + n * d.c * hw, d.c, d.h, d.w, col.data());
            gemm_rows<false>(0, d.k, hw, c9, weight.data(), c9, col.data(), hw,
                             out.data() + n * d.k * hw, hw);
        }
    }
}

void conv3x3_backward(const ConvDims& d, std::span<const float> x, std::span<const float> weight,
                      std::span<const float> dout, std::span<float> dx, std::span<float> dweight) {
    const std::size_t hw = d.h * d.w;
    const std::size_t c9 = d.c * 9;

    if (!dx.empty()) {
        // weight^T: [c9, k]
        std::vector<float> wt(c9 * d.k);
        for (std::size_t k = 0; k < d.k; ++k)
            for (std::size_t j = 0; j < c9; ++j) wt[j * d.k + k] = weight[k * c9 + j];
#pragma omp parallel
        {
            std::vector<float> dcol(c9 * hw);
#pragma omp for schedule(static)
            for (std::ptrdiff_t ni = 0; ni < static_cast<std::ptrdiff_t>(d.n); ++ni) {
                const auto n = static_cast<std::size_t>(ni);
                gemm_rows<false>(0, c9, hw, d.k, wt.data(), d.k, dout.data() + n * d.k * hw, hw,
                                 dcol.data(), hw);
                col2im(dcol.data(), d.c, d.h, d.w, dx.data() + n * d.c * hw);
            }
        }
    }

    // dweight[k, c9] = sum_n dout_n[k, hw] * colt_n[hw, c9], images in order.
    std::fill(dweight.begin(), dweight.end(), 0.0f);
    std::vector<float> colt(hw * c9);
    for (std::size_t n = 0; n < d.n; ++n) {
        im2col_t(x.data() + n * d.c * hw, d.c, d.h, d.w, colt.data());
        gemm<true>(d.k, c9, hw, dout.data() + n * d.k * hw, colt.data(), dweight.data());
    }
}

void batchnorm_forward_train(const PlaneDims& d, std::span<const float> x,
                             std::span<const float> gamma, std::span<const float> beta, float eps,
                             std::span<float> out, std::span<float> xhat,
                             std::span<float> batch_mean, std::span<float> batch_var,
                             std::span<float> inv_std) {
    const std::size_t hw = d.h * d.w;
    const double m = static_cast<double>(d.n * hw);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(d.c); ++ci) {
        const auto c = static_cast<std::size_t>(ci);
        double sum = 0.0;
        for (std::size_t n = 0; n < d.n; ++n) {
            const float* p = x.data() + (n * d.c + c) * hw;
            for (std::size_t i = 0; i < hw; ++i) sum += p[i];
        }
        const double mean = sum / m;
        double sq = 0.0;
        for (std::size_t n = 0; n < d.n; ++n) {
            const float* p = x.data() + (n * d.c + c) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
                const double diff = p[i] - mean;
                sq += diff * diff;
            }
        }
        const double var = sq / m;
        const double istd = 1.0 / std::sqrt(var + eps);
        batch_mean[c] = static_cast<float>(mean);
        batch_var[c] = static_cast<float>(var);
        inv_std[c] = static_cast<float>(istd);
        const float g = gamma[c];
        const float b = beta[c];
        for (std::size_t n = 0; n < d.n; ++n) {
            const std::size_t off = (n * d.c + c) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
                const float xh = static_cast<float>((x[off + i] - mean) * istd);
                xhat[off + i] = xh;
                out[off + i] = g * xh + b;
            }
        }
    }
}

void batchnorm_backward_train(const PlaneDims& d, std::span<const float> dout,
                              std::span<const float> xhat, std::span<const float> gamma,
                              std::span<const float> inv_std, std::span<float> dx,
                              std::span<float> dgamma, std::span<float> dbeta) {
    const std::size_t hw = d.h * d.w;
    const double m = static_cast<double>(d.n * hw);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(d.c); ++ci) {
        const auto c = static_cast<std::size_t>(ci);
        double sum_dy = 0.0;
        double sum_dy_xhat = 0.0;
        for (std::size_t n = 0; n < d.n; ++n) {
            const std::size_t off = (n * d.c + c) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
                sum_dy += dout[off + i];
                sum_dy_xhat += static_cast<double>(dout[off + i]) * xhat[off + i];
            }
        }
        dgamma[c] = static_cast<float>(sum_dy_xhat);
        dbeta[c] = static_cast<float>(sum_dy);
        if (dx.empty()) continue;
        const double scale = gamma[c] * inv_std[c];
        const double mean_dy = sum_dy / m;
        const double mean_dy_xhat = sum_dy_xhat / m;
        for (std::size_t n = 0; n < d.n; ++n) {
            const std::size_t off = (n * d.c + c) * hw;
            for (std::size_t i = 0; i < hw; ++i)
                dx[off + i] = static_cast<float>(
                    scale * (dout[off + i] - mean_dy - xhat[off + i] * mean_dy_xhat));
        }
    }
}

void maxpool2x2_forward(const PlaneDims& d, std::span<const float> x, std::span<float> out,
                        std::span<std::uint32_t> argmax) {
    const std::size_t oh = d.h / 2;
    const std::size_t ow = d.w / 2;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(d.n * d.c); ++pi) {
        const auto p = static_cast<std::size_t>(pi);
        const std::size_t in_off = p * d.h * d.w;
        const std::size_t out_off = p * oh * ow;
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t xx = 0; xx < ow; ++xx) {
                std::size_t best = in_off + 2 * y * d.w + 2 * xx;
                for (std::size_t dy = 0; dy < 2; ++dy)
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const std::size_t idx = in_off + (2 * y + dy) * d.w + 2 * xx + dx;
                        if (x[idx] > x[best]) best = idx;
                    }
                out[out_off + y * ow + xx] = x[best];
                argmax[out_off + y * ow + xx] = static_cast<std::uint32_t>(best);
            }
        }
    }
}

void maxpool2x2_backward(const PlaneDims& d, std::span<const float> dout,
                         std::span<const std::uint32_t> argmax, std::span<float> dx) {
    std::fill(dx.begin(), dx.end(), 0.0f);
    const std::size_t per_plane = (d.h / 2) * (d.w / 2);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(d.n * d.c); ++pi) {
        const auto p = static_cast<std::size_t>(pi);
        for (std::size_t i = p * per_plane; i < (p + 1) * per_plane; ++i) dx[argmax[i]] += dout[i];
    }
}

void linear_forward(std::size_t n, std::size_t in, std::size_t out_features,
                    std::span<const float> x, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> y) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ri = 0; ri < static_cast<std::ptrdiff_t>(n); ++ri) {
        const auto r = static_cast<std::size_t>(ri);
        const float* xr = x.data() + r * in;
        for (std::size_t o = 0; o < out_features; ++o) {
            const float* wr = weight.data() + o * in;
            float acc = 0.0f;
            for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wr[i];
            y[r * out_features + o] = acc + (bias.empty() ? 0.0f : bias[o]);
        }
    }
}

void linear_backward(std::size_t n, std::size_t in, std::size_t out_features,
                     std::span<const float> x, std::span<const float> weight,
                     std::span<const float> dy, std::span<float> dx, std::span<float> dweight,
                     std::span<float> dbias) {
    if (!dx.empty()) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ri = 0; ri < static_cast<std::ptrdiff_t>(n); ++ri) {
            const auto r = static_cast<std::size_t>(ri);
            float* dxr = dx.data() + r * in;
            std::fill(dxr, dxr + in, 0.0f);
            for (std::size_t o = 0; o < out_features; ++o) {
                const float g = dy[r * out_features + o];
                const float* wr = weight.data() + o * in;
                for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wr[i];
            }
        }
    }
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t oi = 0; oi < static_cast<std::ptrdiff_t>(out_features); ++oi) {
        const auto o = static_cast<std::size_t>(oi);
        float* dwr = dweight.data() + o * in;
        std::fill(dwr, dwr + in, 0.0f);
        float db = 0.0f;
        for (std::size_t r = 0; r < n; ++r) {
            const float g = dy[r * out_features + o];
            const float* xr = x.data() + r * in;
            for (std::size_t i = 0; i < in; ++i) dwr[i] += g * xr[i];
            db += g;
        }
        if (!dbias.empty()) dbias[o] = db;
    }
}

namespace reference {

void conv3x3_forward(const ConvDims& d, std::span<const float> x, std::span<const float> weight,
                     std::span<float> out) {
    for (std::size_t n = 0; n < d.n; ++n)
        for (std::size_t k = 0; k < d.k; ++k)
            for (std::size_t y = 0; y < d.h; ++y)
                for (std::size_t xx = 0; xx < d.w; ++xx) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < d.c; ++c)
                        for (int ky = 0; ky < 3; ++ky)
                            for (int kx = 0; kx < 3; ++kx) {
                                const long sy = static_cast<long>(y) + ky - 1;
                                const long sx = static_cast<long>(xx) + kx - 1;
                                if (sy < 0 || sx < 0 || sy >= static_cast<long>(d.h) ||
                                    sx >= static_cast<long>(d.w))
                                    continue;
                                acc += static_cast<double>(
                                           x[((n * d.c + c) * d.h + static_cast<std::size_t>(sy)) * d.w +
                                             static_cast<std::size_t>(sx)]) *
                                       weight[((k * d.c + c) * 3 + static_cast<std::size_t>(ky)) * 3 +
                                              static_cast<std::size_t>(kx)];
                            }
                    out[((n * d.k + k) * d.h + y) * d.w + xx] = static_cast<float>(acc);
                }
}

void conv3x3_backward(const ConvDims& d, std::span<const float> x, std::span<const float> weight,
                      std::span<const float> dout, std::span<float> dx, std::span<float> dweight) {
    std::vector<double> gx(dx.empty() ? 0 : dx.size(), 0.0);
    std::vector<double> gw(dweight.size(), 0.0);
    for (std::size_t n = 0; n < d.n; ++n)
        for (std::size_t k = 0; k < d.k; ++k)
            for (std::size_t y = 0; y < d.h; ++y)
                for (std::size_t xx = 0; xx < d.w; ++xx) {
                    const double g = dout[((n * d.k + k) * d.h + y) * d.w + xx];
                    for (std::size_t c = 0; c < d.c; ++c)
                        for (int ky = 0; ky < 3; ++ky)
                            for (int kx = 0; kx < 3; ++kx) {
                                const long sy = static_cast<long>(y) + ky - 1;
                                const long sx = static_cast<long>(xx) + kx - 1;
                                if (sy < 0 || sx < 0 || sy >= static_cast<long>(d.h) ||
                                    sx >= static_cast<long>(d.w))
                                    continue;
                                const std::size_t xi =
                                    ((n * d.c + c) * d.h + static_cast<std::size_t>(sy)) * d.w +
                                    static_cast<std::size_t>(sx);
                                const std::size_t wi =
                                    ((k * d.c + c) * 3 + static_cast<std::size_t>(ky)) * 3 +
                                    static_cast<std::size_t>(kx);
                                gw[wi] += g * x[xi];
                                if (!gx.empty()) gx[xi] += g * weight[wi];
                            }
                }
    for (std::size_t i = 0; i < gw.size(); ++i) dweight[i] = static_cast<float>(gw[i]);
    for (std::size_t i = 0; i < gx.size(); ++i) dx[i] = static_cast<float>(gx[i]);
}

void batchnorm_forward_train(const PlaneDims& d, std::span<const float> x,
                             std::span<const float> gamma, std::span<const float> beta, float eps,
                             std::span<float> out, std::span<float> xhat,
                             std::span<float> batch_mean, std::span<float> batch_var,
                             std::span<float> inv_std) {
    const std::size_t hw = d.h * d.w;
    const double m = static_cast<double>(d.n * hw);
    for (std::size_t c = 0; c < d.c; ++c) {
        double sum = 0.0;
        for (std::size_t n = 0; n < d.n; ++n)
            for (std::size_t i = 0; i < hw; ++i) sum += x[(n * d.c + c) * hw + i];
        const double mean = sum / m;
        double sq = 0.0;
        for (std::size_t n = 0; n < d.n; ++n)
            for (std::size_t i = 0; i < hw; ++i) {
                const double diff = x[(n * d.c + c) * hw + i] - mean;
                sq += diff * diff;
            }
        const double var = sq / m;
        const double istd = 1.0 / std::sqrt(var + eps);
        batch_mean[c] = static_cast<float>(mean);
        batch_var[c] = static_cast<float>(var);
        inv_std[c] = static_cast<float>(istd);
        for (std::size_t n = 0; n < d.n; ++n)
            for (std::size_t i = 0; i < hw; ++i) {
                const std::size_t idx = (n * d.c + c) * hw + i;
                const float xh = static_cast<float>((x[idx] - mean) * istd);
                xhat[idx] = xh;
                out[idx] = gamma[c] * xh + beta[c];
            }
    }
}

void batchnorm_backward_train(const PlaneDims& d, std::span<const float> dout,
                              std::span<const float> xhat, std::span<const float> gamma,
                              std::span<const float> inv_std, std::span<float> dx,
                              std::span<float> dgamma, std::span<float> dbeta) {
    const std::size_t hw = d.h * d.w;
    const double m = static_cast<double>(d.n * hw);
    for (std::size_t c = 0; c < d.c; ++c) {
        double sum_dy = 0.0;
        double sum_dy_xhat = 0.0;
        for (std::size_t n = 0; n < d.n; ++n)
            for (std::size_t i = 0; i < hw; ++i) {
                const std::size_t idx = (n * d.c + c) * hw + i;
                sum_dy += dout[idx];
                sum_dy_xhat += static_cast<double>(dout[idx]) * xhat[idx];
            }
        dgamma[c] = static_cast<float>(sum_dy_xhat);
        dbeta[c] = static_cast<float>(sum_dy);
        if (dx.empty()) continue;
        for (std::size_t n = 0; n < d.n; ++n)
            for (std::size_t i = 0; i < hw; ++i) {
                const std::size_t idx = (n * d.c + c) * hw + i;
                dx[idx] = static_cast<float>(static_cast<double>(gamma[c]) * inv_std[c] *
                                             (dout[idx] - sum_dy / m - xhat[idx] * sum_dy_xhat / m));
            }
    }
}

void maxpool2x2_forward(const PlaneDims& d, std::span<const float> x, std::span<float> out,
                        std::span<std::uint32_t> argmax) {
    const std::size_t oh = d.h / 2;
    const std::size_t ow = d.w / 2;
    for (std::size_t p = 0; p < d.n * d.c; ++p)
        for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t xx = 0; xx < ow; ++xx) {
                std::size_t best = p * d.h * d.w + 2 * y * d.w + 2 * xx;
                for (std::size_t dy = 0; dy < 2; ++dy)
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const std::size_t idx = p * d.h * d.w + (2 * y + dy) * d.w + 2 * xx + dx;
                        if (x[idx] > x[best]) best = idx;
                    }
                out[(p * oh + y) * ow + xx] = x[best];
                argmax[(p * oh + y) * ow + xx] = static_cast<std::uint32_t>(best);
            }
}

void linear_forward(std::size_t n, std::size_t in, std::size_t out_features,
                    std::span<const float> x, std::span<const float> weight,
                    std::span<const float> bias, std::span<float> y) {
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t o = 0; o < out_features; ++o) {
            double acc = bias.empty() ? 0.0 : bias[o];
            for (std::size_t i = 0; i < in; ++i)
                acc += static_cast<double>(x[r * in + i]) * weight[o * in + i];
            y[r * out_features + o] = static_cast<float>(acc);
        }
}

}  // namespace reference

}  // namespace ierot::nn::kernels
