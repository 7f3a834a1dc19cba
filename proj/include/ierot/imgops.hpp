#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "ierot/image.hpp"

namespace ierot::imgops {

enum class IEKind { Brightness, Contrast, Saturation, Sharpness, Solarization };

inline constexpr std::array<IEKind, 5> kAllIEKinds = {IEKind::Brightness, IEKind::Contrast,
                                                     IEKind::Saturation, IEKind::Sharpness,
                                                     IEKind::Solarization};

std::string_view to_string(IEKind kind);
std::optional<IEKind> parse_ie_kind(std::string_view name);  // case-insensitive

/// The four degrees of one enhancement, ordered as label indices 0..3.
/// Exactly one entry is the identity (factor 1.0, or threshold 256 for
/// Solarization).
struct DegreeTable {
    IEKind kind;
    std::array<double, 4> degrees;

    int identity_index() const;
};

const DegreeTable& degree_table(IEKind kind);

/// Counter-clockwise rotation by 90*k degrees, k in 0..3.
Image rotate90(const Image& img, int k);

/// ITU-R 601-2 luma, (299R + 587G + 114B) / 1000 rounded half up.
/// Returned as a 3-channel image with the luma replicated into each plane.
Image grayscale(const Image& img);

/// clamp(round(a + f * (b - a)), 0, 255), rounding half away from zero.
Image blend(const Image& a, const Image& b, double factor);

/// The image that `enhance` interpolates away from (factor 0).
Image degenerate(const Image& img, IEKind kind);

/// blend(degenerate(img, kind), img, factor). Solarization is rejected; use
/// `solarize`.
Image enhance(const Image& img, IEKind kind, double factor);

/// px < threshold ? px : 255 - px, threshold in [0, 256].
Image solarize(const Image& img, int threshold);

/// Applies an enhancement at an explicit degree, dispatching Solarization to
/// `solarize` with the degree as threshold.
Image apply_ie(const Image& img, IEKind kind, double degree);

}  // namespace ierot::imgops
