#pragma once

// Evaluation metrics: event sync accuracy and its error CDF, ROI flicker,
// identity checks outside the mouth ROI and embedding drift.

#include "vedicthg/coarticulation.hpp"
#include "vedicthg/raster.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vthg {

struct SyncReport {
    std::vector<double> errors_ms;  // per phoneme event, input order
    double tolerance_ms = 40.0;
    double fraction_within_tol = 0.0;
    std::vector<std::pair<double, double>> cdf;  // (error_ms, cumulative fraction)
    std::size_t unmatched = 0;                   // events whose class never appeared

    double max_error_ms() const noexcept;
};

// Builds the report from raw errors. |error| == tol counts as within.
// Unmatched events carry +inf error. Throws on an empty set.
SyncReport make_sync_report(std::vector<double> errors_ms, double tol_ms);

// Realized onset of phoneme i: the first frame k with t_k > s_i whose
// dominant viseme is M(p_i), read as the frame cell's left edge
// t_k - 1/(2 fv). With plateau dominance and ties to the earlier event,
// an exact-boundary schedule gives |error| <= 1/(2 fv).
SyncReport sync_accuracy(const PhonemeStream& stream, const VisemeMap& map, const Trajectory& trajectory,
                         double tol_ms = 40.0);

// Schedule-level variant: onset is s_i when the event covering s_i already
// shows M(p_i), otherwise the start of the next event of that class.
SyncReport sync_accuracy(const PhonemeStream& stream, const VisemeMap& map, const VisemeSchedule& schedule,
                         double tol_ms = 40.0);

// Two columns "error_ms cumulative_fraction", one row per event, 6 decimals.
std::string format_cdf(const SyncReport& report);
void export_cdf(const SyncReport& report, const std::filesystem::path& path);

struct StabilityReport {
    std::vector<double> per_pair_l1;
    double mean_l1_flicker = 0.0;
};

// Mean |I_{k+1} - I_k| over ROI pixels and channels per consecutive pair,
// averaged over pairs.
StabilityReport flicker(std::span<const RgbImage> frames, const PixelRect& roi);

// Nonzero where the ROI union covers.
GrayImage rect_mask(int width, int height, std::span<const PixelRect> rects);

// Largest 8-bit difference to the template over pixels where mask == 0.
// Refuses (ConfigError) when head motion is on.
int identity_outside_roi(std::span<const RgbImage> frames, const RgbImage& tmpl, const GrayImage& roi_mask,
                         bool head_motion_on = false);

// d_k = 1 - <e_0, e_k>. Vectors must share a dimension and have unit norm
// within 1e-6.
std::vector<double> identity_drift(std::span<const std::vector<double>> embeddings);

// One vector per line, whitespace separated.
std::vector<std::vector<double>> parse_embeddings(std::string_view text);

}  // namespace vthg
