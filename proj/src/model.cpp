#include "ierot/model.hpp"

#include <cstring>
#include <stdexcept>

#include "ierot/nn/optim.hpp"

namespace ierot {

using nn::Tensor;
using nn::Var;

namespace {

constexpr std::array<std::size_t, 5> kWidths{3, 32, 64, 128, 128};

}  // namespace

TwoHeadModel::TwoHeadModel(Rng& rng) {
    for (std::size_t i = 0; i < 4; ++i) {
        const std::string tag = std::to_string(i + 1);
        const std::size_t cin = kWidths[i], cout = kWidths[i + 1];
        conv_[i] = Var::leaf(nn::he_normal({cout, cin, 3, 3}, rng), true, "conv" + tag + ".weight");
        gamma_[i] = Var::leaf(Tensor({cout}, 1.0f), true, "bn" + tag + ".gamma");
        beta_[i] = Var::leaf(Tensor({cout}, 0.0f), true, "bn" + tag + ".beta");
        bn_[i] = nn::BatchNormState(cout);
    }
    auto make_head = [&rng](const std::string& name) {
        return Head{Var::leaf(nn::he_normal({kHeadOutputs, kFeatureDim}, rng), true, name + ".weight"),
                    Var::leaf(Tensor({kHeadOutputs}, 0.0f), true, name + ".bias")};
    };
    head_r_ = make_head("head_r");
    head_i_ = make_head("head_i");
}

Var TwoHeadModel::block(const Var& x, std::size_t i, bool training) {
    Var y = nn::conv2d(x, conv_[i]);
    y = nn::batch_norm(y, gamma_[i], beta_[i], bn_[i], training);
    return nn::relu(y);
}

Var TwoHeadModel::features(const Var& x, bool training) {
    Var y = block(x, 0, training);
    y = nn::maxpool2x2(block(y, 1, training));
    y = block(y, 2, training);
    y = nn::maxpool2x2(block(y, 3, training));
    return nn::global_avg_pool(y);
}

Tensor TwoHeadModel::probe(const Tensor& x, std::string_view point) {
    if (point != "pool1" && point != "pool2" && point != "gap") {
        std::string names;
        for (auto p : kProbePoints) names += (names.empty() ? "" : ", ") + std::string(p);
        throw std::invalid_argument("unknown probe point '" + std::string(point) + "' (valid: " + names + ")");
    }
    nn::NoGradGuard guard;
    Var y = block(Var::leaf(x), 0, false);
    y = nn::maxpool2x2(block(y, 1, false));
    if (point == "pool1") return nn::global_avg_pool(y).value();
    y = block(y, 2, false);
    y = nn::maxpool2x2(block(y, 3, false));
    // The GAP output is the pooled pool2 map; both names resolve to it.
    return nn::global_avg_pool(y).value();
}

Var TwoHeadModel::logits(const Head& head, const Var& z) const { return nn::linear(z, head.weight, head.bias); }

std::vector<Var> TwoHeadModel::extractor_parameters() const {
    std::vector<Var> out;
    for (std::size_t i = 0; i < 4; ++i) {
        out.push_back(conv_[i]);
        out.push_back(gamma_[i]);
        out.push_back(beta_[i]);
    }
    return out;
}

std::vector<Var> TwoHeadModel::parameters() const {
    auto out = extractor_parameters();
    for (const Head* h : {&head_r_, &head_i_}) {
        out.push_back(h->weight);
        out.push_back(h->bias);
    }
    return out;
}

std::uint64_t TwoHeadModel::checksum() const {
    std::uint64_t h = 1469598103934665603ull;
    auto feed = [&h](const Tensor& t) {
        for (float v : t.data()) {
            std::uint32_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            for (int b = 0; b < 4; ++b) {
                h ^= (bits >> (8 * b)) & 0xffu;
                h *= 1099511628211ull;
            }
        }
    };
    for (const auto& p : parameters()) feed(p.value());
    for (const auto& s : bn_) {
        feed(s.running_mean);
        feed(s.running_var);
    }
    return h;
}

Tensor normalize_batch(const std::vector<const Image*>& images, const dataio::ChannelStats& stats) {
    if (images.empty()) throw std::invalid_argument("normalize_batch: no images");
    const int h = images.front()->height(), w = images.front()->width();
    const std::size_t plane = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    Tensor out({images.size(), 3, static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
    std::array<std::array<float, 256>, 3> lut{};
    for (std::size_t c = 0; c < 3; ++c)
        for (int v = 0; v < 256; ++v)
            lut[c][static_cast<std::size_t>(v)] =
                static_cast<float>((v / 255.0 - stats.mean[c]) / stats.std[c]);
    for (std::size_t n = 0; n < images.size(); ++n) {
        const Image& img = *images[n];
        if (img.height() != h || img.width() != w) throw std::invalid_argument("normalize_batch: mixed image sizes");
        float* dst = out.ptr() + n * 3 * plane;
        for (std::size_t c = 0; c < 3; ++c) {
            const auto src = img.plane(static_cast<int>(c));
            for (std::size_t i = 0; i < plane; ++i) dst[c * plane + i] = lut[c][src[i]];
        }
    }
    return out;
}

}  // namespace ierot
