#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace ierot {

/// 8-bit RGB raster in planar layout: all R samples, then all G, then all B,
/// each plane row-major.
class Image {
public:
    static constexpr int kChannels = 3;

    Image() = default;
    Image(int height, int width)
        : height_(height), width_(width),
          data_(static_cast<std::size_t>(height) * width * kChannels, 0) {
        if (height < 0 || width < 0) throw std::invalid_argument("Image: negative extent");
    }
    Image(int height, int width, std::vector<std::uint8_t> data)
        : height_(height), width_(width), data_(std::move(data)) {
        if (height < 0 || width < 0) throw std::invalid_argument("Image: negative extent");
        if (data_.size() != static_cast<std::size_t>(height) * width * kChannels)
            throw std::invalid_argument("Image: data length != height*width*3");
    }

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return kChannels; }
    std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
    std::size_t size() const { return data_.size(); }

    std::uint8_t& at(int c, int r, int col) {
        return data_[c * plane_size() + static_cast<std::size_t>(r) * width_ + col];
    }
    std::uint8_t at(int c, int r, int col) const {
        return data_[c * plane_size() + static_cast<std::size_t>(r) * width_ + col];
    }

    std::span<std::uint8_t> plane(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
    std::span<const std::uint8_t> plane(int c) const {
        return {data_.data() + c * plane_size(), plane_size()};
    }

    std::span<std::uint8_t> data() { return data_; }
    std::span<const std::uint8_t> data() const { return data_; }

    bool same_shape(const Image& o) const { return height_ == o.height_ && width_ == o.width_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> data_;
};

}  // namespace ierot
