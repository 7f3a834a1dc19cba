#include "ierot/imgops.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace ierot::imgops {

namespace {

constexpr std::array<DegreeTable, 5> kTables = {{
    {IEKind::Brightness, {0.1, 0.5, 1.0, 1.5}},
    {IEKind::Contrast, {0.1, 0.5, 1.0, 1.5}},
    {IEKind::Saturation, {0.0, 0.5, 1.0, 1.5}},
    {IEKind::Sharpness, {0.0, 0.5, 1.0, 1.5}},
    {IEKind::Solarization, {0.0, 85.0, 170.0, 256.0}},
}};

std::uint8_t clamp_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

std::uint8_t luma(int r, int g, int b) {
    return static_cast<std::uint8_t>(std::min((299 * r + 587 * g + 114 * b + 500) / 1000, 255));
}

Image smooth_interior(const Image& img) {
    Image out = img;
    const int h = img.height();
    const int w = img.width();
    for (int c = 0; c < Image::kChannels; ++c) {
        for (int r = 1; r + 1 < h; ++r) {
            for (int col = 1; col + 1 < w; ++col) {
                int sum = 0;
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) sum += img.at(c, r + dr, col + dc);
                sum += 4 * img.at(c, r, col);  // center weight 5
                // sum/13 never has a fractional part of exactly one half.
                out.at(c, r, col) = static_cast<std::uint8_t>((sum + 6) / 13);
            }
        }
    }
    return out;
}

}  // namespace

std::string_view to_string(IEKind kind) {
    switch (kind) {
        case IEKind::Brightness: return "brightness";
        case IEKind::Contrast: return "contrast";
        case IEKind::Saturation: return "saturation";
        case IEKind::Sharpness: return "sharpness";
        case IEKind::Solarization: return "solarization";
    }
    return "unknown";
}

std::optional<IEKind> parse_ie_kind(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    for (IEKind kind : kAllIEKinds)
        if (to_string(kind) == lower) return kind;
    return std::nullopt;
}

int DegreeTable::identity_index() const {
    const double identity = kind == IEKind::Solarization ? 256.0 : 1.0;
    for (int i = 0; i < 4; ++i)
        if (degrees[i] == identity) return i;
    throw std::logic_error("DegreeTable without identity degree");
}

const DegreeTable& degree_table(IEKind kind) {
    return kTables[static_cast<std::size_t>(kind)];
}

Image rotate90(const Image& img, int k) {
    if (k < 0 || k > 3) throw std::invalid_argument("rotate90: k must be in 0..3");
    if (k == 0) return img;
    const int h = img.height();
    const int w = img.width();
    const bool swap = (k % 2) == 1;
    Image out(swap ? w : h, swap ? h : w);
    for (int c = 0; c < Image::kChannels; ++c) {
        for (int r = 0; r < out.height(); ++r) {
            for (int col = 0; col < out.width(); ++col) {
                std::uint8_t v = 0;
                switch (k) {
                    case 1: v = img.at(c, col, w - 1 - r); break;
                    case 2: v = img.at(c, h - 1 - r, w - 1 - col); break;
                    case 3: v = img.at(c, h - 1 - col, r); break;
                }
                out.at(c, r, col) = v;
            }
        }
    }
    return out;
}

Image grayscale(const Image& img) {
    Image out(img.height(), img.width());
    const auto red = img.plane(0);
    const auto green = img.plane(1);
    const auto blue = img.plane(2);
    for (std::size_t i = 0; i < img.plane_size(); ++i) {
        const std::uint8_t l = luma(red[i], green[i], blue[i]);
        for (int c = 0; c < Image::kChannels; ++c) out.plane(c)[i] = l;
    }
    return out;
}

Image blend(const Image& a, const Image& b, double factor) {
    if (!a.same_shape(b)) throw std::invalid_argument("blend: shape mismatch");
    Image out(a.height(), a.width());
    auto dst = out.data();
    const auto sa = a.data();
    const auto sb = b.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const double v = sa[i] + factor * (static_cast<double>(sb[i]) - sa[i]);
        dst[i] = clamp_u8(std::round(v));
    }
    return out;
}

Image degenerate(const Image& img, IEKind kind) {
    switch (kind) {
        case IEKind::Brightness:
            return Image(img.height(), img.width());
        case IEKind::Contrast: {
            Image out(img.height(), img.width());
            if (img.plane_size() == 0) return out;
            const Image gray = grayscale(img);
            double sum = 0.0;
            for (std::uint8_t v : gray.plane(0)) sum += v;
            const double mean = sum / static_cast<double>(img.plane_size());
            const auto level = static_cast<std::uint8_t>(std::floor(mean + 0.5));
            std::fill(out.data().begin(), out.data().end(), level);
            return out;
        }
        case IEKind::Saturation:
            return grayscale(img);
        case IEKind::Sharpness:
            return smooth_interior(img);
        case IEKind::Solarization:
            break;
    }
    throw std::invalid_argument("degenerate: Solarization has no blend base; use solarize");
}

Image enhance(const Image& img, IEKind kind, double factor) {
    if (kind == IEKind::Solarization)
        throw std::invalid_argument("enhance: Solarization must go through solarize");
    return blend(degenerate(img, kind), img, factor);
}

Image solarize(const Image& img, int threshold) {
    if (threshold < 0 || threshold > 256)
        throw std::invalid_argument("solarize: threshold must be in [0, 256]");
    Image out = img;
    for (auto& px : out.data())
        if (px >= threshold) px = static_cast<std::uint8_t>(255 - px);
    return out;
}

Image apply_ie(const Image& img, IEKind kind, double degree) {
    if (kind == IEKind::Solarization) return solarize(img, static_cast<int>(degree));
    return enhance(img, kind, degree);
}

}  // namespace ierot::imgops
