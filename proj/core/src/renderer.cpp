#include "vedicthg/renderer.hpp"

#include "vedicthg/error.hpp"
#include "vedicthg/image_io.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

namespace vthg {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::input, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_manifest(const std::filesystem::path& path) {
    const auto text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(0, path.string() + ": " + e.what());
    }
}

Point2 to_point(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ParseError(0, "expected a point [x, y]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<Point2> to_points(const json& j) {
    if (!j.is_array()) {
        throw ParseError(0, "expected a list of points");
    }
    std::vector<Point2> out;
    out.reserve(j.size());
    for (const auto& p : j) {
        out.push_back(to_point(p));
    }
    return out;
}

json from_points(std::span<const Point2> points) {
    json out = json::array();
    for (const auto& p : points) {
        out.push_back({p.x, p.y});
    }
    return out;
}

const json& require(const json& doc, const char* key) {
    const auto it = doc.find(key);
    if (it == doc.end()) {
        throw ParseError(0, std::string("manifest is missing '") + key + "'");
    }
    return *it;
}

// Bilinear RGBA sample; taps outside the patch are transparent black.
void sample_rgba(const RgbaImage& src, double sx, double sy, float* out) noexcept {
    const double fx0 = std::floor(sx);
    const double fy0 = std::floor(sy);
    const int x0 = static_cast<int>(fx0);
    const int y0 = static_cast<int>(fy0);
    const double fx = sx - fx0;
    const double fy = sy - fy0;
    const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
    const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
    double acc[4] = {0, 0, 0, 0};
    for (int i = 0; i < 4; ++i) {
        if (w[i] == 0.0 || !src.contains(xs[i], ys[i])) {
            continue;
        }
        const auto* p = src.pixel(xs[i], ys[i]);
        for (int c = 0; c < 4; ++c) {
            acc[c] += w[i] * p[c];
        }
    }
    for (int c = 0; c < 4; ++c) {
        out[c] = static_cast<float>(acc[c]);
    }
}

// Bilinear RGB sample with edge clamping.
void sample_rgb(const RgbImage& src, double sx, double sy, double* out) noexcept {
    sx = std::clamp(sx, 0.0, static_cast<double>(src.width() - 1));
    sy = std::clamp(sy, 0.0, static_cast<double>(src.height() - 1));
    const int x0 = static_cast<int>(std::floor(sx));
    const int y0 = static_cast<int>(std::floor(sy));
    const int x1 = std::min(x0 + 1, src.width() - 1);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double fx = sx - x0;
    const double fy = sy - y0;
    const auto* p00 = src.pixel(x0, y0);
    const auto* p10 = src.pixel(x1, y0);
    const auto* p01 = src.pixel(x0, y1);
    const auto* p11 = src.pixel(x1, y1);
    for (int c = 0; c < 3; ++c) {
        out[c] = (1 - fx) * (1 - fy) * p00[c] + fx * (1 - fy) * p10[c] + (1 - fx) * fy * p01[c] + fx * fy * p11[c];
    }
}

bool mask_at(const GrayImage& mask, double x, double y) noexcept {
    const int ix = static_cast<int>(std::lround(x));
    const int iy = static_cast<int>(std::lround(y));
    return mask.contains(ix, iy) && mask.at(ix, iy) != 0;
}

PixelRect image_rect(const RgbImage& img) noexcept {
    return {0, 0, img.width(), img.height()};
}

}  // namespace

void Template::validate() const {
    using Reason = ValidationError::Reason;
    if (image.empty()) {
        throw ValidationError(Reason::malformed, 0, "template image is empty");
    }
    if (landmarks.size() < 20) {
        throw ValidationError(Reason::malformed, landmarks.size(), "template needs at least 20 landmarks");
    }
    for (std::size_t i = 0; i < landmarks.size(); ++i) {
        const auto& p = landmarks[i];
        if (!(p.x >= 0.0 && p.y >= 0.0 && p.x <= image.width() - 1 && p.y <= image.height() - 1)) {
            throw ValidationError(Reason::out_of_range, i, "landmark outside the template image");
        }
    }
    if (!head_mask.same_size(image.width(), image.height())) {
        throw ValidationError(Reason::malformed, 0, "head mask size differs from the template image");
    }
    if (mouth_indices.size() < 4) {
        throw ValidationError(Reason::malformed, mouth_indices.size(), "template needs at least 4 mouth landmarks");
    }
    for (auto idx : mouth_indices) {
        if (idx >= landmarks.size()) {
            throw ValidationError(Reason::out_of_range, idx, "mouth landmark index out of range");
        }
    }
    for (auto idx : stable_indices) {
        if (idx >= landmarks.size()) {
            throw ValidationError(Reason::out_of_range, idx, "stable landmark index out of range");
        }
    }
    if (!is_simple_polygon(mouth_polygon)) {
        throw ValidationError(Reason::malformed, 0, "mouth polygon is not simple");
    }
}

std::vector<Point2> Template::select(std::span<const Point2> points, std::span<const std::size_t> indices) const {
    std::vector<Point2> out;
    out.reserve(indices.size());
    for (auto idx : indices) {
        if (idx >= points.size()) {
            throw ValidationError(ValidationError::Reason::out_of_range, idx, "landmark index out of range");
        }
        out.push_back(points[idx]);
    }
    return out;
}

Template load_template(const std::filesystem::path& manifest_path) {
    const json doc = parse_manifest(manifest_path);
    const auto dir = manifest_path.parent_path();
    Template t;
    t.image = read_png_rgb(dir / require(doc, "image").get<std::string>());
    t.head_mask = read_png_gray(dir / require(doc, "head_mask").get<std::string>());
    t.landmarks = to_points(require(doc, "landmarks"));
    t.mouth_indices = require(doc, "mouth_indices").get<std::vector<std::size_t>>();
    if (doc.contains("stable_indices")) {
        t.stable_indices = doc["stable_indices"].get<std::vector<std::size_t>>();
    }
    t.mouth_polygon = to_points(require(doc, "mouth_polygon"));
    t.validate();
    return t;
}

void save_template(const Template& tmpl, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_png(dir / "face.png", tmpl.image);
    write_png(dir / "head_mask.png", tmpl.head_mask);
    ordered_json doc;
    doc["image"] = "face.png";
    doc["head_mask"] = "head_mask.png";
    doc["landmarks"] = from_points(tmpl.landmarks);
    doc["mouth_indices"] = tmpl.mouth_indices;
    doc["stable_indices"] = tmpl.stable_indices;
    doc["mouth_polygon"] = from_points(tmpl.mouth_polygon);
    std::ofstream(dir / "template.json") << doc.dump(1) << '\n';
}

MouthBank::MouthBank(VisemeInventory inventory, std::vector<MouthPatch> patches)
    : inventory_(std::move(inventory)), patches_(std::move(patches)) {
    if (patches_.size() != inventory_.size()) {
        throw ValidationError(ValidationError::Reason::malformed, patches_.size(),
                              "mouth bank must hold one patch per viseme");
    }
    for (std::size_t i = 0; i < patches_.size(); ++i) {
        const auto& p = patches_[i];
        if (p.rgba.empty()) {
            throw ValidationError(ValidationError::Reason::malformed, i, "mouth patch is empty");
        }
        for (const auto& a : p.anchors) {
            if (!(a.x >= 0.0 && a.y >= 0.0 && a.x <= p.rgba.width() - 1 && a.y <= p.rgba.height() - 1)) {
                throw ValidationError(ValidationError::Reason::out_of_range, i,
                                      "anchor outside mouth patch " + inventory_.names()[i]);
            }
        }
    }
}

const MouthPatch& MouthBank::at(VisemeId id) const {
    if (id.value >= patches_.size()) {
        throw ValidationError(ValidationError::Reason::out_of_range, id.value, "no mouth patch for viseme");
    }
    return patches_[id.value];
}

MouthBank load_mouth_bank(const std::filesystem::path& manifest_path, const VisemeInventory& inventory) {
    const json doc = parse_manifest(manifest_path);
    const auto dir = manifest_path.parent_path();
    const auto& patches = require(doc, "patches");
    std::vector<MouthPatch> out;
    out.reserve(inventory.size());
    for (const auto& name : inventory.names()) {
        const auto it = patches.find(name);
        if (it == patches.end()) {
            throw ValidationError(ValidationError::Reason::malformed, out.size(),
                                  "mouth bank has no patch for viseme " + name);
        }
        MouthPatch p;
        p.rgba = read_png_rgba(dir / require(*it, "file").get<std::string>());
        const auto anchors = to_points(require(*it, "anchors"));
        if (anchors.size() != 4) {
            throw ParseError(0, "mouth patch " + name + " needs exactly 4 anchors");
        }
        std::copy(anchors.begin(), anchors.end(), p.anchors.begin());
        out.push_back(std::move(p));
    }
    return MouthBank(inventory, std::move(out));
}

void save_mouth_bank(const MouthBank& bank, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    ordered_json patches = ordered_json::object();
    for (std::size_t i = 0; i < bank.size(); ++i) {
        const auto& name = bank.inventory().names()[i];
        std::string file = name;
        std::transform(file.begin(), file.end(), file.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        file += ".png";
        const auto& patch = bank.at(VisemeId{static_cast<std::uint16_t>(i)});
        write_png(dir / file, patch.rgba);
        ordered_json anchors = ordered_json::array();
        for (const auto& a : patch.anchors) {
            anchors.push_back({a.x, a.y});
        }
        patches[name] = {{"file", file}, {"anchors", anchors}};
    }
    ordered_json doc;
    doc["patches"] = patches;
    std::ofstream(dir / "bank.json") << doc.dump(1) << '\n';
}

LandmarkTrack parse_landmark_track(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text.begin(), json_text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(0, std::string("landmark track: ") + e.what());
    }
    LandmarkTrack track;
    const auto& frames = doc.is_object() ? require(doc, "frames") : doc;
    if (!frames.is_array()) {
        throw ParseError(0, "landmark track: expected a list of frames");
    }
    for (const auto& f : frames) {
        track.frames.push_back(to_points(f));
        if (track.frames.back().size() != track.frames.front().size()) {
            throw ValidationError(ValidationError::Reason::malformed, track.frames.size() - 1,
                                  "landmark count changes within the track");
        }
    }
    return track;
}

std::string serialize_landmark_track(const LandmarkTrack& track) {
    json frames = json::array();
    for (const auto& f : track.frames) {
        frames.push_back(from_points(f));
    }
    return json{{"frames", frames}}.dump() + "\n";
}

HeadMotionMode parse_head_motion(std::string_view name) {
    if (name == "off") {
        return HeadMotionMode::off;
    }
    if (name == "synth" || name == "synthesized") {
        return HeadMotionMode::synthesized;
    }
    if (name == "tracked") {
        return HeadMotionMode::tracked;
    }
    throw ConfigError("unknown head motion mode '" + std::string(name) + "'");
}

const char* to_string(HeadMotionMode mode) noexcept {
    switch (mode) {
        case HeadMotionMode::off: return "off";
        case HeadMotionMode::synthesized: return "synth";
        case HeadMotionMode::tracked: return "tracked";
    }
    return "off";
}

void RoiConfig::validate() const {
    if (!(beta >= 0.0 && beta < 1.0)) {
        throw ConfigError("EMA coefficient beta must be in [0, 1)");
    }
    if (!(feather_px >= 0.0) || !std::isfinite(feather_px)) {
        throw ConfigError("feather radius must be >= 0");
    }
    if (!(bbox_margin >= 0.0)) {
        throw ConfigError("bbox margin must be >= 0");
    }
}

BBox compute_bbox(std::span<const Point2> mouth_points, double margin) {
    if (mouth_points.size() < 4) {
        throw ValidationError(ValidationError::Reason::malformed, mouth_points.size(),
                              "mouth box needs at least 4 landmarks");
    }
    double x0 = mouth_points[0].x, x1 = x0;
    double y0 = mouth_points[0].y, y1 = y0;
    for (const auto& p : mouth_points) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    if (!(x1 > x0) || !(y1 > y0)) {
        throw ValidationError(ValidationError::Reason::malformed, 0, "degenerate mouth box (zero extent)");
    }
    const double grow = 1.0 + margin;
    return {0.5 * (x0 + x1), 0.5 * (y0 + y1), (x1 - x0) * grow, (y1 - y0) * grow};
}

BBox smooth_bbox(RoiState& state, const BBox& raw, double beta) {
    if (!state.initialized) {
        state.bbox = raw;
        state.initialized = true;
        return raw;
    }
    const double keep = beta;
    const double take = 1.0 - beta;
    state.bbox = {keep * state.bbox.cx + take * raw.cx, keep * state.bbox.cy + take * raw.cy,
                  keep * state.bbox.w + take * raw.w, keep * state.bbox.h + take * raw.h};
    return state.bbox;
}

MouthSelection select_mouth(const VisemeParams& y, VisemeId dominant, const MouthBank& bank, const RoiConfig& cfg) {
    MouthSelection sel;
    sel.patch = &bank.at(dominant);
    if (cfg.jaw_warp) {
        sel.warp.scale_y = 1.0 + cfg.warp.jaw_vertical * y[jaw_open];
        sel.warp.offset_y = -cfg.warp.protrusion_offset * y[lip_protrusion];
    }
    if (cfg.cheek_warp) {
        sel.warp.scale_x = 1.0 + cfg.warp.width_horizontal * (y[lip_width] - 0.5);
    }
    sel.opacity = cfg.mouth_bank ? y[mouth_bank_blend] : 0.0;
    return sel;
}

std::array<Point2, 4> roi_anchors(const BBox& roi, const WarpParams& warp, double margin) {
    const double hw = 0.5 * roi.w / (1.0 + margin) * warp.scale_x;
    const double hh = 0.5 * roi.h / (1.0 + margin) * warp.scale_y;
    const double cy = roi.cy + warp.offset_y * roi.h;
    return {{{roi.cx - hw, cy}, {roi.cx + hw, cy}, {roi.cx, cy - hh}, {roi.cx, cy + hh}}};
}

WarpedPatch warp_patch(const RgbaImage& patch, const std::array<Point2, 4>& anchors, const BBox& dst,
                       const WarpParams& warp, double margin) {
    if (!(dst.w > 0.0) || !(dst.h > 0.0)) {
        throw ValidationError(ValidationError::Reason::malformed, 0, "destination box is empty");
    }
    const auto target = roi_anchors(dst, warp, margin);
    const auto fwd = fit_affine(anchors, target);
    const auto inv = fwd ? fwd->inverse() : std::nullopt;
    if (!fwd || !inv) {
        throw ValidationError(ValidationError::Reason::malformed, 0, "mouth patch anchors are collinear");
    }

    const double pw = patch.width() - 1;
    const double ph = patch.height() - 1;
    const Point2 corners[4] = {fwd->apply({0, 0}), fwd->apply({pw, 0}), fwd->apply({0, ph}), fwd->apply({pw, ph})};
    double minx = corners[0].x, maxx = minx, miny = corners[0].y, maxy = miny;
    for (const auto& c : corners) {
        minx = std::min(minx, c.x);
        maxx = std::max(maxx, c.x);
        miny = std::min(miny, c.y);
        maxy = std::max(maxy, c.y);
    }
    // Tolerance keeps exact integer placements from growing by a column.
    constexpr double eps = 1e-6;
    const int x0 = static_cast<int>(std::floor(minx + eps));
    const int y0 = static_cast<int>(std::floor(miny + eps));
    const int x1 = static_cast<int>(std::ceil(maxx - eps));
    const int y1 = static_cast<int>(std::ceil(maxy - eps));

    // Compositing never leaves the (warped) ROI box.
    const double hw = 0.5 * dst.w * warp.scale_x;
    const double hh = 0.5 * dst.h * warp.scale_y;
    const double cy = dst.cy + warp.offset_y * dst.h;
    const int bx0 = static_cast<int>(std::ceil(dst.cx - hw - eps));
    const int by0 = static_cast<int>(std::ceil(cy - hh - eps));
    const int bx1 = static_cast<int>(std::floor(dst.cx + hw + eps));
    const int by1 = static_cast<int>(std::floor(cy + hh + eps));
    const PixelRect box{bx0, by0, bx1 - bx0 + 1, by1 - by0 + 1};

    WarpedPatch out;
    out.rect = PixelRect{x0, y0, x1 - x0 + 1, y1 - y0 + 1}.intersect(box);
    out.patch_to_image = *fwd;
    out.rgba = RgbaFloatImage(out.rect.width, out.rect.height);
    for (int v = 0; v < out.rect.height; ++v) {
        for (int u = 0; u < out.rect.width; ++u) {
            const Point2 src = inv->apply({static_cast<double>(out.rect.x0 + u), static_cast<double>(out.rect.y0 + v)});
            sample_rgba(patch, src.x, src.y, out.rgba.pixel(u, v));
        }
    }
    return out;
}

AlphaMap feather_mask(std::span<const Point2> polygon, const PixelRect& rect, double feather_px) {
    if (!is_simple_polygon(polygon)) {
        throw ValidationError(ValidationError::Reason::malformed, 0, "mask polygon is not simple");
    }
    if (!(feather_px >= 0.0)) {
        throw ValidationError(ValidationError::Reason::out_of_range, 0, "feather radius must be >= 0");
    }
    double px0 = polygon[0].x, px1 = px0, py0 = polygon[0].y, py1 = py0;
    for (const auto& p : polygon) {
        px0 = std::min(px0, p.x);
        px1 = std::max(px1, p.x);
        py0 = std::min(py0, p.y);
        py1 = std::max(py1, p.y);
    }
    AlphaMap mask(rect.width, rect.height, 0.0f);
    for (int v = 0; v < rect.height; ++v) {
        const double y = rect.y0 + v;
        if (y < py0 - feather_px || y > py1 + feather_px) {
            continue;
        }
        for (int u = 0; u < rect.width; ++u) {
            const double x = rect.x0 + u;
            if (x < px0 - feather_px || x > px1 + feather_px) {
                continue;
            }
            const Point2 p{x, y};
            float a;
            if (feather_px == 0.0) {
                a = point_in_polygon(polygon, p) ? 1.0f : 0.0f;
            } else {
                const double sd = signed_distance(polygon, p);
                a = static_cast<float>(std::clamp(0.5 + sd / (2.0 * feather_px), 0.0, 1.0));
            }
            mask.at(u, v) = a;
        }
    }
    return mask;
}

AlphaMap feather_mask(std::span<const Point2> polygon, int width, int height, double feather_px) {
    return feather_mask(polygon, PixelRect{0, 0, width, height}, feather_px);
}

void composite_mouth_in_place(RgbImage& frame, const WarpedPatch& warped, const AlphaMap& mask, double opacity) {
    if (!mask.same_size(warped.rect.width, warped.rect.height) ||
        !warped.rgba.same_size(warped.rect.width, warped.rect.height)) {
        throw ValidationError(ValidationError::Reason::malformed, 0, "mask and patch sizes differ from the ROI");
    }
    const PixelRect clip = warped.rect.intersect(image_rect(frame));
    const float op = static_cast<float>(opacity);
    for (int y = clip.y0; y < clip.y1(); ++y) {
        for (int x = clip.x0; x < clip.x1(); ++x) {
            const int u = x - warped.rect.x0;
            const int v = y - warped.rect.y0;
            const float* m = warped.rgba.pixel(u, v);
            const float a = mask.at(u, v) * (m[3] / 255.0f) * op;
            if (a <= 0.0f) {
                continue;
            }
            auto* dst = frame.pixel(x, y);
            for (int c = 0; c < 3; ++c) {
                dst[c] = quantize_channel(a * m[c] + (1.0f - a) * static_cast<float>(dst[c]));
            }
        }
    }
}

RgbImage composite_mouth(const RgbImage& base, const WarpedPatch& warped, const AlphaMap& mask, double opacity) {
    RgbImage out = base;
    composite_mouth_in_place(out, warped, mask, opacity);
    return out;
}

AffineTransform head_transform(double t, const HeadMotionConfig& cfg, std::span<const Point2> ref_stable,
                               std::optional<std::span<const Point2>> cur_stable) {
    switch (cfg.mode) {
        case HeadMotionMode::off:
            return AffineTransform::identity();
        case HeadMotionMode::synthesized: {
            const double phase = 2.0 * std::numbers::pi * cfg.frequency_hz * t;
            const double angle = cfg.rotation_deg * std::numbers::pi / 180.0 * std::sin(phase);
            const double shift = cfg.translation_px * std::sin(phase + cfg.phase_rad);
            if (angle == 0.0 && shift == 0.0) {
                return AffineTransform::identity();
            }
            return AffineTransform::rotation_about(centroid(ref_stable), angle, shift, 0.5 * shift);
        }
        case HeadMotionMode::tracked: {
            if (!cur_stable) {
                throw ConfigError("tracked head motion needs a landmark track");
            }
            const auto fit = fit_similarity(ref_stable, *cur_stable);
            if (!fit) {
                throw PipelineError("head", "cannot fit head motion to degenerate landmarks");
            }
            return *fit;
        }
    }
    return AffineTransform::identity();
}

RgbImage apply_head_motion(const RgbImage& frame, const AffineTransform& transform, const GrayImage& head_mask,
                           const RgbImage& background) {
    if (!head_mask.same_size(frame.width(), frame.height()) ||
        !background.same_size(frame.width(), frame.height())) {
        throw ValidationError(ValidationError::Reason::malformed, 0, "head mask or background size mismatch");
    }
    if (transform.is_identity()) {
        return frame;
    }
    const auto inv = transform.inverse();
    if (!inv) {
        throw PipelineError("head", "head transform is singular");
    }

    // Region touched: the head mask bounds and their image under T.
    int mx0 = frame.width(), my0 = frame.height(), mx1 = -1, my1 = -1;
    for (int y = 0; y < head_mask.height(); ++y) {
        for (int x = 0; x < head_mask.width(); ++x) {
            if (head_mask.at(x, y) != 0) {
                mx0 = std::min(mx0, x);
                mx1 = std::max(mx1, x);
                my0 = std::min(my0, y);
                my1 = std::max(my1, y);
            }
        }
    }
    if (mx1 < 0) {
        return frame;
    }
    double rx0 = mx0, rx1 = mx1, ry0 = my0, ry1 = my1;
    for (const Point2 c : {Point2{double(mx0), double(my0)}, Point2{double(mx1), double(my0)},
                           Point2{double(mx0), double(my1)}, Point2{double(mx1), double(my1)}}) {
        const Point2 m = transform.apply(c);
        rx0 = std::min(rx0, m.x);
        rx1 = std::max(rx1, m.x);
        ry0 = std::min(ry0, m.y);
        ry1 = std::max(ry1, m.y);
    }
    const PixelRect region = PixelRect{static_cast<int>(std::floor(rx0)) - 1, static_cast<int>(std::floor(ry0)) - 1,
                                       static_cast<int>(std::ceil(rx1 - rx0)) + 3,
                                       static_cast<int>(std::ceil(ry1 - ry0)) + 3}
                                 .intersect(image_rect(frame));

    RgbImage out = frame;
    double rgb[3];
    for (int y = region.y0; y < region.y1(); ++y) {
        for (int x = region.x0; x < region.x1(); ++x) {
            const Point2 q = inv->apply({static_cast<double>(x), static_cast<double>(y)});
            auto* dst = out.pixel(x, y);
            if (mask_at(head_mask, q.x, q.y)) {
                sample_rgb(frame, q.x, q.y, rgb);
                for (int c = 0; c < 3; ++c) {
                    dst[c] = quantize_channel(static_cast<float>(rgb[c]));
                }
            } else if (head_mask.at(x, y) != 0) {
                const auto* bg = background.pixel(x, y);
                dst[0] = bg[0];
                dst[1] = bg[1];
                dst[2] = bg[2];
            }
        }
    }
    return out;
}

RenderContext::RenderContext(const Template& t, const MouthBank& b, const RoiConfig& c)
    : tmpl(&t), bank(&b), cfg(c) {
    cfg.validate();
    const auto mouth = t.mouth_points();
    template_mouth_box = compute_bbox(mouth, cfg.bbox_margin);
}

std::vector<BBox> plan_roi_track(const Template& tmpl, const LandmarkTrack* track, const RoiConfig& cfg,
                                 std::size_t frame_count) {
    cfg.validate();
    const double beta = cfg.bbox_smooth ? cfg.beta : 0.0;
    std::vector<BBox> boxes;
    boxes.reserve(frame_count);
    RoiState state;
    for (std::size_t k = 0; k < frame_count; ++k) {
        const auto& lm = (track && !track->empty()) ? track->at(k) : tmpl.landmarks;
        const auto raw = compute_bbox(tmpl.select(lm, tmpl.mouth_indices), cfg.bbox_margin);
        boxes.push_back(smooth_bbox(state, raw, beta));
    }
    return boxes;
}

RenderedFrame render_frame(const RenderContext& ctx, const FrameInput& input) {
    const Template& tmpl = *ctx.tmpl;
    const RoiConfig& cfg = ctx.cfg;

    RenderedFrame result;
    result.index = input.index;
    result.t = input.t;
    result.image = tmpl.image;

    const auto sel = select_mouth(input.y, input.dominant, *ctx.bank, cfg);
    if (sel.opacity > 0.0) {
        const auto warped = warp_patch(sel.patch->rgba, sel.patch->anchors, input.roi, sel.warp, cfg.bbox_margin);

        // The compositing polygon follows the ROI and the same warp.
        const BBox& ref = ctx.template_mouth_box;
        const double kx = input.roi.w / ref.w * sel.warp.scale_x;
        const double ky = input.roi.h / ref.h * sel.warp.scale_y;
        const double oy = sel.warp.offset_y * input.roi.h;
        Polygon poly;
        poly.reserve(tmpl.mouth_polygon.size());
        for (const auto& p : tmpl.mouth_polygon) {
            poly.push_back({input.roi.cx + (p.x - ref.cx) * kx, input.roi.cy + oy + (p.y - ref.cy) * ky});
        }
        const auto mask = feather_mask(poly, warped.rect, cfg.feather_px);
        composite_mouth_in_place(result.image, warped, mask, sel.opacity);
        result.composite_rect = warped.rect.intersect(image_rect(result.image));
    }

    if (cfg.head.mode != HeadMotionMode::off) {
        const auto ref_stable = tmpl.stable_points();
        std::optional<std::span<const Point2>> cur;
        std::vector<Point2> cur_points;
        if (cfg.head.mode == HeadMotionMode::tracked) {
            if (input.landmarks == nullptr) {
                throw ConfigError("tracked head motion needs a landmark track");
            }
            cur_points = tmpl.select(*input.landmarks, tmpl.stable_indices);
            cur = cur_points;
        }
        result.head = head_transform(input.t, cfg.head, ref_stable, cur);
        result.image = apply_head_motion(result.image, result.head, tmpl.head_mask, tmpl.image);
    }
    return result;
}

RenderedFrame render_frame(const RenderContext& ctx, RoiState& state, const VisemeParams& y, VisemeId dominant,
                           std::size_t k, double t, const std::vector<Point2>* landmarks) {
    const auto& lm = landmarks ? *landmarks : ctx.tmpl->landmarks;
    const auto raw = compute_bbox(ctx.tmpl->select(lm, ctx.tmpl->mouth_indices), ctx.cfg.bbox_margin);
    const BBox roi = smooth_bbox(state, raw, ctx.cfg.bbox_smooth ? ctx.cfg.beta : 0.0);
    return render_frame(ctx, FrameInput{k, t, y, dominant, roi, landmarks});
}

void render_sequence(const RenderContext& ctx, std::span<const FrameInput> inputs, unsigned threads,
                     const std::function<void(RenderedFrame&&)>& sink) {
    threads = std::max(1u, threads);
    if (threads == 1) {
        for (const auto& in : inputs) {
            const auto t0 = std::chrono::steady_clock::now();
            auto frame = render_frame(ctx, in);
            frame.render_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            sink(std::move(frame));
        }
        return;
    }
    const std::size_t chunk = static_cast<std::size_t>(threads) * 4;
    std::vector<RenderedFrame> slots;
    for (std::size_t base = 0; base < inputs.size(); base += chunk) {
        const std::size_t n = std::min(chunk, inputs.size() - base);
        slots.assign(n, RenderedFrame{});
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::atomic<bool> failed{false};
        {
            std::vector<std::jthread> workers;
            workers.reserve(threads);
            for (unsigned w = 0; w < threads; ++w) {
                workers.emplace_back([&] {
                    for (std::size_t i = next++; i < n; i = next++) {
                        try {
                            const auto t0 = std::chrono::steady_clock::now();
                            slots[i] = render_frame(ctx, inputs[base + i]);
                            slots[i].render_ms = std::chrono::duration<double, std::milli>(
                                                     std::chrono::steady_clock::now() - t0)
                                                     .count();
                        } catch (...) {
                            if (!failed.exchange(true)) {
                                failure = std::current_exception();
                            }
                        }
                    }
                });
            }
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
        for (auto& f : slots) {
            sink(std::move(f));
        }
    }
}

unsigned resolve_thread_count(unsigned requested) {
    if (const char* env = std::getenv("VEDICTHG_THREADS"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 0) {
            requested = static_cast<unsigned>(v);
        }
    }
    if (requested == 0) {
        requested = std::max(1u, std::thread::hardware_concurrency());
    }
    return requested;
}

}  // namespace vthg
