#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ierot/dataio.hpp"
#include "ierot/nn/ops.hpp"
#include "ierot/rng.hpp"

namespace ierot {

inline constexpr std::size_t kFeatureDim = 128;
inline constexpr std::size_t kHeadOutputs = 4;

/// Named activation taps usable by the linear probe.
inline constexpr std::array<std::string_view, 3> kProbePoints{"pool1", "pool2", "gap"};

/// Shared compact CNN plus two linear heads:
///   conv(3->32) bn relu, conv(32->64) bn relu, maxpool,
///   conv(64->128) bn relu, conv(128->128) bn relu, maxpool, global avg pool.
/// Convolutions carry no bias; the BN shift plays that role.
class TwoHeadModel {
public:
    struct Head {
        nn::Var weight;  // [4, 128]
        nn::Var bias;    // [4]
    };

    /// He-normal conv and head weights, zero biases, BN gamma 1 and beta 0.
    explicit TwoHeadModel(Rng& rng);

    /// x: [N,3,32,32] normalized input -> Z: [N,128].
    /// `training` selects batch statistics (and running-stat updates) in BN.
    nn::Var features(const nn::Var& x, bool training);

    /// Pooled activations at a probe point, eval mode, no graph.
    /// Throws std::invalid_argument listing the valid names.
    nn::Tensor probe(const nn::Tensor& x, std::string_view point);

    nn::Var logits(const Head& head, const nn::Var& z) const;

    Head& head_rotation() { return head_r_; }
    Head& head_enhancement() { return head_i_; }

    /// Every trainable leaf, extractor first, then head R, then head I.
    std::vector<nn::Var> parameters() const;
    std::vector<nn::Var> extractor_parameters() const;
    static std::vector<nn::Var> head_parameters(const Head& head) { return {head.weight, head.bias}; }

    std::array<nn::BatchNormState, 4>& bn_states() { return bn_; }
    const std::array<nn::BatchNormState, 4>& bn_states() const { return bn_; }

    /// FNV-1a over the raw bytes of every parameter and BN running statistic.
    std::uint64_t checksum() const;

private:
    nn::Var block(const nn::Var& x, std::size_t i, bool training);

    std::array<nn::Var, 4> conv_;
    std::array<nn::Var, 4> gamma_;
    std::array<nn::Var, 4> beta_;
    std::array<nn::BatchNormState, 4> bn_;
    Head head_r_;
    Head head_i_;
};

/// Images to a float batch [N,3,H,W]: (byte / 255 - mean) / std per channel.
nn::Tensor normalize_batch(const std::vector<const Image*>& images, const dataio::ChannelStats& stats);

}  // namespace ierot
