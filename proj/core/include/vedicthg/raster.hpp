#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace vthg {

// Interleaved row-major raster.
template <typename T, int Channels>
class Raster {
public:
    static constexpr int channels = Channels;
    using value_type = T;

    Raster() = default;
    Raster(int width, int height, T fill = T{})
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * Channels, fill) {}

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }
    bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    bool same_size(int w, int h) const noexcept { return width_ == w && height_ == h; }

    T* pixel(int x, int y) noexcept { return data_.data() + offset(x, y); }
    const T* pixel(int x, int y) const noexcept { return data_.data() + offset(x, y); }

    T& at(int x, int y, int c = 0) noexcept { return data_[offset(x, y) + static_cast<std::size_t>(c)]; }
    T at(int x, int y, int c = 0) const noexcept { return data_[offset(x, y) + static_cast<std::size_t>(c)]; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    std::size_t offset(int x, int y) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
               Channels;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using RgbImage = Raster<std::uint8_t, 3>;
using RgbaImage = Raster<std::uint8_t, 4>;
using GrayImage = Raster<std::uint8_t, 1>;
using RgbaFloatImage = Raster<float, 4>;  // channels in 0..255
using AlphaMap = Raster<float, 1>;        // 0..1

// Integer pixel rectangle [x0, x0 + width) x [y0, y0 + height).
struct PixelRect {
    int x0 = 0;
    int y0 = 0;
    int width = 0;
    int height = 0;

    int x1() const noexcept { return x0 + width; }
    int y1() const noexcept { return y0 + height; }
    bool empty() const noexcept { return width <= 0 || height <= 0; }
    bool contains(int x, int y) const noexcept { return x >= x0 && y >= y0 && x < x1() && y < y1(); }
    long long area() const noexcept { return empty() ? 0 : static_cast<long long>(width) * height; }

    PixelRect intersect(const PixelRect& o) const noexcept;
    PixelRect unite(const PixelRect& o) const noexcept;

    friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

// Quantizes a 0..255 float channel: round half to even, then saturate.
std::uint8_t quantize_channel(float v) noexcept;

RgbaImage to_rgba(const RgbImage& rgb, std::uint8_t alpha = 255);

}  // namespace vthg
