#pragma once

// 2D ROI renderer: mouth-box localisation and EMA stabilisation, mouth-bank
// patch warping, feathered alpha compositing and masked head motion.

#include "vedicthg/geometry.hpp"
#include "vedicthg/raster.hpp"
#include "vedicthg/viseme.hpp"

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace vthg {

struct Template {
    RgbImage image;
    std::vector<Point2> landmarks;
    std::vector<std::size_t> mouth_indices;   // subset driving the mouth box
    std::vector<std::size_t> stable_indices;  // eyes/nose, used for head tracking
    GrayImage head_mask;                      // nonzero = head
    Polygon mouth_polygon;                    // compositing region, template coords

    void validate() const;  // throws ValidationError
    std::vector<Point2> select(std::span<const Point2> points, std::span<const std::size_t> indices) const;
    std::vector<Point2> mouth_points() const { return select(landmarks, mouth_indices); }
    std::vector<Point2> stable_points() const { return select(landmarks, stable_indices); }
};

// JSON manifest naming the image and mask PNGs (relative to the manifest)
// plus landmarks, index subsets and the mouth polygon.
Template load_template(const std::filesystem::path& manifest_path);
void save_template(const Template& tmpl, const std::filesystem::path& dir);

// Anchor order: left corner, right corner, upper lip, lower lip.
struct MouthPatch {
    RgbaImage rgba;
    std::array<Point2, 4> anchors;
};

class MouthBank {
public:
    MouthBank() = default;
    MouthBank(VisemeInventory inventory, std::vector<MouthPatch> patches);

    const MouthPatch& at(VisemeId id) const;
    const VisemeInventory& inventory() const noexcept { return inventory_; }
    std::size_t size() const noexcept { return patches_.size(); }

private:
    VisemeInventory inventory_;
    std::vector<MouthPatch> patches_;
};

// {"patches": {"NAME": {"file": "x.png", "anchors": [[x, y] x 4]}}}
MouthBank load_mouth_bank(const std::filesystem::path& manifest_path, const VisemeInventory& inventory);
void save_mouth_bank(const MouthBank& bank, const std::filesystem::path& dir);

// Per-frame landmark positions (same layout as the template landmarks).
struct LandmarkTrack {
    std::vector<std::vector<Point2>> frames;

    bool empty() const noexcept { return frames.empty(); }
    // Frame k, holding the last frame past the end.
    const std::vector<Point2>& at(std::size_t k) const { return frames[std::min(k, frames.size() - 1)]; }
};

LandmarkTrack parse_landmark_track(std::string_view json_text);
std::string serialize_landmark_track(const LandmarkTrack& track);

enum class HeadMotionMode { off, synthesized, tracked };

HeadMotionMode parse_head_motion(std::string_view name);  // off | synth | tracked
const char* to_string(HeadMotionMode mode) noexcept;

struct HeadMotionConfig {
    HeadMotionMode mode = HeadMotionMode::off;
    double rotation_deg = 1.2;
    double translation_px = 2.0;
    double frequency_hz = 0.25;
    double phase_rad = 0.0;  // translation phase relative to rotation
};

// Maps rig controls onto the patch warp.
struct WarpCoefficients {
    double jaw_vertical = 0.5;       // scale_y = 1 + k * jaw_open
    double width_horizontal = 0.3;   // scale_x = 1 + k * (lip_width - 0.5)
    double protrusion_offset = 0.05; // offset_y = -k * protrusion, in ROI heights
};

struct RoiConfig {
    double beta = 0.85;
    double feather_px = 2.0;
    double bbox_margin = 0.15;  // box grows by this fraction of the tight extent
    HeadMotionConfig head;
    WarpCoefficients warp;
    // Feature toggles matching the component ablation.
    bool mouth_bank = true;
    bool bbox_smooth = true;
    bool jaw_warp = true;
    bool cheek_warp = true;

    void validate() const;  // throws ConfigError
};

struct RoiState {
    BBox bbox;
    bool initialized = false;
};

// Tight bounds grown to (1 + margin) times the extent, same centre.
BBox compute_bbox(std::span<const Point2> mouth_points, double margin = 0.15);

// b_k = beta b_{k-1} + (1 - beta) raw; the first call initialises.
BBox smooth_bbox(RoiState& state, const BBox& raw, double beta);

struct WarpParams {
    double scale_x = 1.0;
    double scale_y = 1.0;
    double offset_y = 0.0;  // fraction of ROI height, positive = down

    friend bool operator==(const WarpParams&, const WarpParams&) = default;
};

struct MouthSelection {
    const MouthPatch* patch = nullptr;
    WarpParams warp;
    double opacity = 1.0;  // mouth_bank_blend
};

MouthSelection select_mouth(const VisemeParams& y, VisemeId dominant, const MouthBank& bank,
                            const RoiConfig& cfg = {});

// Where the four patch anchors land for a ROI box and warp.
std::array<Point2, 4> roi_anchors(const BBox& roi, const WarpParams& warp, double margin = 0.15);

struct WarpedPatch {
    PixelRect rect;            // image placement, clipped to the warped ROI box
    RgbaFloatImage rgba;       // rect-sized, 0..255, transparent off-source
    AffineTransform patch_to_image;
};

// Affine map taking the patch anchors onto roi_anchors(dst, warp), sampled
// bilinearly. Throws ValidationError on a collinear anchor set.
WarpedPatch warp_patch(const RgbaImage& patch, const std::array<Point2, 4>& anchors, const BBox& dst,
                       const WarpParams& warp, double margin = 0.15);

// Alpha over `rect` (image coordinates, pixel centres at integer coords):
// 1 at signed distance >= feather, 0 at <= -feather, linear between.
AlphaMap feather_mask(std::span<const Point2> polygon, const PixelRect& rect, double feather_px);
AlphaMap feather_mask(std::span<const Point2> polygon, int width, int height, double feather_px);

// out = a * patch + (1 - a) * base with a = mask * patch alpha * opacity,
// inside warped.rect only. Round half to even.
RgbImage composite_mouth(const RgbImage& base, const WarpedPatch& warped, const AlphaMap& mask,
                         double opacity = 1.0);
void composite_mouth_in_place(RgbImage& frame, const WarpedPatch& warped, const AlphaMap& mask,
                              double opacity = 1.0);

// Head motion for frame k at time t. Tracked mode needs current landmarks.
AffineTransform head_transform(double t, const HeadMotionConfig& cfg, std::span<const Point2> ref_stable,
                               std::optional<std::span<const Point2>> cur_stable = std::nullopt);

// Moves head-mask pixels by T (bilinear); disoccluded head pixels take the
// background image; everything else is untouched.
RgbImage apply_head_motion(const RgbImage& frame, const AffineTransform& transform, const GrayImage& head_mask,
                           const RgbImage& background);

struct RenderContext {
    const Template* tmpl = nullptr;
    const MouthBank* bank = nullptr;
    RoiConfig cfg;
    BBox template_mouth_box;  // tight box of the template mouth landmarks

    RenderContext(const Template& t, const MouthBank& b, const RoiConfig& c);
};

struct FrameInput {
    std::size_t index = 0;
    double t = 0.0;
    VisemeParams y;
    VisemeId dominant;
    BBox roi;  // smoothed mouth box
    const std::vector<Point2>* landmarks = nullptr;  // tracked head mode only
};

struct RenderedFrame {
    std::size_t index = 0;
    double t = 0.0;
    RgbImage image;
    PixelRect composite_rect;  // the only pixels compositing may change
    AffineTransform head;
    double render_ms = 0.0;  // set by render_sequence
};

// Phase 1: sequential EMA over the per-frame mouth boxes.
std::vector<BBox> plan_roi_track(const Template& tmpl, const LandmarkTrack* track, const RoiConfig& cfg,
                                 std::size_t frame_count);

// Phase 2 body; pure in its inputs.
RenderedFrame render_frame(const RenderContext& ctx, const FrameInput& input);

// Convenience for sequential callers: smooths with `state` then renders.
RenderedFrame render_frame(const RenderContext& ctx, RoiState& state, const VisemeParams& y, VisemeId dominant,
                           std::size_t k, double t, const std::vector<Point2>* landmarks = nullptr);

// Renders frames on `threads` workers; `sink` sees them in index order.
void render_sequence(const RenderContext& ctx, std::span<const FrameInput> inputs, unsigned threads,
                     const std::function<void(RenderedFrame&&)>& sink);

// VEDICTHG_THREADS when set (0 = auto), else `requested` (0 = auto).
unsigned resolve_thread_count(unsigned requested = 0);

}  // namespace vthg
