#include "vedicthg/sample_assets.hpp"

#include "vedicthg/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vthg {

namespace {

struct Rgb {
    double r, g, b;
};

constexpr Rgb kSkin{224, 182, 150};
constexpr Rgb kLip{178, 78, 84};
constexpr Rgb kLipLine{118, 46, 52};
constexpr Rgb kCavity{58, 18, 28};
constexpr Rgb kTeeth{236, 230, 218};
constexpr Rgb kEyeWhite{240, 238, 232};
constexpr Rgb kIris{52, 72, 96};
constexpr Rgb kBrow{92, 62, 44};

// Approximate pixel coverage of an axis-aligned ellipse (1 px ramp).
double ellipse_cover(double x, double y, double cx, double cy, double rx, double ry) {
    if (rx <= 0.0 || ry <= 0.0) {
        return 0.0;
    }
    const double u = (x - cx) / rx;
    const double v = (y - cy) / ry;
    const double d = (std::sqrt(u * u + v * v) - 1.0) * std::min(rx, ry);
    return std::clamp(0.5 - d, 0.0, 1.0);
}

Rgb mix(const Rgb& a, const Rgb& b, double t) {
    return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

void put(std::uint8_t* px, const Rgb& c) {
    px[0] = quantize_channel(static_cast<float>(c.r));
    px[1] = quantize_channel(static_cast<float>(c.g));
    px[2] = quantize_channel(static_cast<float>(c.b));
}

// Mouth geometry in 256-pixel template units.
constexpr double kMouthCx = 128.0;
constexpr double kMouthCy = 182.0;
constexpr double kMouthRx = 24.0;
constexpr double kMouthRy = 9.0;

}  // namespace

Template make_sample_template(int size) {
    if (size < 64) {
        throw ConfigError("sample template needs at least 64 px per side");
    }
    const double s = size / 256.0;
    const double hcx = 128 * s, hcy = 124 * s, hrx = 80 * s, hry = 104 * s;

    Template t;
    t.image = RgbImage(size, size);
    t.head_mask = GrayImage(size, size, 0);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double fx = x, fy = y;
            Rgb c{70 + 40.0 * y / size, 90 + 30.0 * y / size, 120};
            const double head = ellipse_cover(fx, fy, hcx, hcy, hrx, hry);
            if (head > 0.0) {
                const double shade = 1.0 - 0.18 * std::pow((fx - hcx) / hrx, 2);
                const Rgb skin{kSkin.r * shade, kSkin.g * shade, kSkin.b * shade};
                c = mix(c, skin, head);
            }
            for (double ex : {98.0, 158.0}) {
                c = mix(c, kBrow, ellipse_cover(fx, fy, ex * s, 86 * s, 15 * s, 3 * s));
                c = mix(c, kEyeWhite, ellipse_cover(fx, fy, ex * s, 102 * s, 13 * s, 7 * s));
                c = mix(c, kIris, ellipse_cover(fx, fy, ex * s, 102 * s, 5 * s, 5 * s));
            }
            const Rgb nose{kSkin.r * 0.8, kSkin.g * 0.75, kSkin.b * 0.75};
            c = mix(c, nose, 0.6 * ellipse_cover(fx, fy, 128 * s, 140 * s, 9 * s, 5 * s));
            c = mix(c, nose, 0.4 * ellipse_cover(fx, fy, 128 * s, 126 * s, 2.5 * s, 12 * s));
            c = mix(c, kLip, ellipse_cover(fx, fy, kMouthCx * s, kMouthCy * s, 18 * s, 5.5 * s));
            c = mix(c, kLipLine, ellipse_cover(fx, fy, kMouthCx * s, kMouthCy * s, 15 * s, 1.0 * s));
            put(t.image.pixel(x, y), c);
            if (head >= 0.5) {
                t.head_mask.at(x, y) = 255;
            }
        }
    }

    for (int i = 0; i < 12; ++i) {
        const double a = 2.0 * std::numbers::pi * i / 12.0;
        t.landmarks.push_back({(kMouthCx + kMouthRx * std::cos(a)) * s, (kMouthCy + kMouthRy * std::sin(a)) * s});
        t.mouth_indices.push_back(static_cast<std::size_t>(i));
    }
    for (double ex : {98.0, 158.0}) {
        t.landmarks.push_back({(ex - 13) * s, 102 * s});
        t.landmarks.push_back({(ex + 13) * s, 102 * s});
        t.landmarks.push_back({ex * s, 95 * s});
        t.landmarks.push_back({ex * s, 109 * s});
    }
    t.landmarks.push_back({128 * s, 118 * s});
    t.landmarks.push_back({128 * s, 134 * s});
    t.landmarks.push_back({119 * s, 142 * s});
    t.landmarks.push_back({137 * s, 142 * s});
    for (std::size_t i = 12; i < t.landmarks.size(); ++i) {
        t.stable_indices.push_back(i);
    }
    for (int i = 0; i < 16; ++i) {
        const double a = 2.0 * std::numbers::pi * i / 16.0;
        t.mouth_polygon.push_back({(kMouthCx + 26 * std::cos(a)) * s, (kMouthCy + 10 * std::sin(a)) * s});
    }
    t.validate();
    return t;
}

MouthBank make_sample_mouth_bank(const ParamBank& params, int template_size) {
    const double s = template_size / 256.0;
    const int w = static_cast<int>(std::lround(64 * s));
    const int h = static_cast<int>(std::lround(32 * s));
    const double cx = 0.5 * (w - 1);
    const double cy = 0.5 * (h - 1);

    std::vector<MouthPatch> patches;
    const auto& inv = params.inventory();
    for (std::size_t i = 0; i < inv.size(); ++i) {
        const auto& p = params.at(VisemeId{static_cast<std::uint16_t>(i)});
        const double jaw = p[jaw_open];
        const double width = p[lip_width];
        const double protr = p[lip_protrusion];
        const bool labiodental = inv.names()[i] == "LABIODENTAL";
        const bool bilabial = inv.names()[i] == "BILABIAL";

        const double lw = (16 + 8 * width - 5 * protr) * s;
        const double lh = (5 + 5 * jaw + 2 * protr) * s;
        const double oh = 6.5 * jaw * s;
        const double ow = (protr > 0.5 ? 0.55 : 0.8) * lw;

        MouthPatch patch;
        patch.rgba = RgbaImage(w, h);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double fx = x, fy = y;
                Rgb c = kSkin;
                c = mix(c, kLip, ellipse_cover(fx, fy, cx, cy, lw, lh));
                if (oh > 0.25 * s) {
                    c = mix(c, kCavity, ellipse_cover(fx, fy, cx, cy, ow, oh));
                    if (jaw < 0.6 && protr < 0.5) {
                        const double teeth = ellipse_cover(fx, fy, cx, cy - 0.45 * oh, ow * 0.8, 0.45 * oh);
                        c = mix(c, kTeeth, teeth * ellipse_cover(fx, fy, cx, cy, ow, oh));
                    }
                } else {
                    c = mix(c, kLipLine, ellipse_cover(fx, fy, cx, cy, 0.85 * lw, (bilabial ? 1.4 : 1.0) * s));
                }
                if (labiodental) {
                    c = mix(c, kTeeth, ellipse_cover(fx, fy, cx, cy - 0.5 * s, 0.5 * lw, 1.6 * s));
                }
                auto* px = patch.rgba.pixel(x, y);
                put(px, c);
                px[3] = quantize_channel(static_cast<float>(255.0 * ellipse_cover(fx, fy, cx, cy, 0.47 * w, 0.46 * h)));
            }
        }
        patch.anchors = {{{cx - kMouthRx * s, cy}, {cx + kMouthRx * s, cy}, {cx, cy - kMouthRy * s},
                          {cx, cy + kMouthRy * s}}};
        patches.push_back(std::move(patch));
    }
    return MouthBank(inv, std::move(patches));
}

void write_sample_assets(const std::filesystem::path& dir, const ParamBank& params, int size) {
    save_template(make_sample_template(size), dir / "template");
    save_mouth_bank(make_sample_mouth_bank(params, size), dir / "bank");
}

}  // namespace vthg
