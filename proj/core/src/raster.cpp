#include "vedicthg/raster.hpp"

#include <algorithm>
#include <cmath>

namespace vthg {

PixelRect PixelRect::intersect(const PixelRect& o) const noexcept {
    const int x = std::max(x0, o.x0);
    const int y = std::max(y0, o.y0);
    const int xe = std::min(x1(), o.x1());
    const int ye = std::min(y1(), o.y1());
    if (xe <= x || ye <= y) {
        return {};
    }
    return {x, y, xe - x, ye - y};
}

PixelRect PixelRect::unite(const PixelRect& o) const noexcept {
    if (empty()) {
        return o;
    }
    if (o.empty()) {
        return *this;
    }
    const int x = std::min(x0, o.x0);
    const int y = std::min(y0, o.y0);
    return {x, y, std::max(x1(), o.x1()) - x, std::max(y1(), o.y1()) - y};
}

std::uint8_t quantize_channel(float v) noexcept {
    // nearbyint honours the default round-to-nearest-even mode.
    const float r = std::nearbyint(v);
    return static_cast<std::uint8_t>(std::clamp(r, 0.0f, 255.0f));
}

RgbaImage to_rgba(const RgbImage& rgb, std::uint8_t alpha) {
    RgbaImage out(rgb.width(), rgb.height());
    for (int y = 0; y < rgb.height(); ++y) {
        for (int x = 0; x < rgb.width(); ++x) {
            const auto* s = rgb.pixel(x, y);
            auto* d = out.pixel(x, y);
            d[0] = s[0];
            d[1] = s[1];
            d[2] = s[2];
            d[3] = alpha;
        }
    }
    return out;
}

}  // namespace vthg
