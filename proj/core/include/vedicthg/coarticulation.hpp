#pragma once

// Viseme schedule -> frame-rate mouth-control trajectory.
//
// Two blend paths are provided. The dominance path normalizes overlapping
// dominance windows over every event whose support contains t. The vedic
// path restricts the neighbourhood to the current and next event and mixes
// them with a cross-term blend
//
//     y = (1 - a) m_i + a m_j + lambda a (1 - a) (m_i * m_j)
//
// where a is the transition phase across the event boundary. With
// lambda = 0 and triangular windows both paths agree exactly.

#include "vedicthg/viseme.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vthg {

enum class WindowShape { triangular, raised_cosine };
enum class BlendMode { vedic_pairwise, dominance_weighted };

const char* to_string(WindowShape shape) noexcept;
const char* to_string(BlendMode mode) noexcept;
WindowShape parse_window_shape(std::string_view name);  // "tri"/"triangular", "cos"/"raised_cosine"
BlendMode parse_blend_mode(std::string_view name);      // "vedic"/"vedic_pairwise", "dominance"/...

struct WindowConfig {
    double delta_s = 0.040;
    WindowShape shape = WindowShape::triangular;

    void validate() const;  // throws ConfigError unless delta_s > 0 and finite
};

struct BlendConfig {
    double lambda = 0.2;
    BlendMode mode = BlendMode::vedic_pairwise;

    void validate() const;  // throws ConfigError unless lambda >= 0 and finite
};

// Dominance of an event at t: 0 outside [s - delta, e + delta], 1 on [s, e],
// ramps of width delta in between (linear or raised cosine).
double dominance_weight(const VisemeEvent& event, double t, const WindowConfig& cfg) noexcept;

// Normalized dominance blend over every event supported at t. Returns the
// NEUTRAL parameters when no event has weight at t. Not clamped.
VisemeParams blend_at(const VisemeSchedule& schedule, double t, const WindowConfig& cfg);

// Share of `next` in a two-event crossfade: the normalized dominance
// w_next / (w_prev + w_next). 0 at e_prev - delta, 0.5 on the boundary,
// 1 at e_prev + delta; monotone in t. Throws unless prev.end == next.start.
double transition_phase(const VisemeEvent& prev, const VisemeEvent& next, double t,
                        const WindowConfig& cfg);

// out = (1 - alpha) a + alpha c + lambda alpha (1 - alpha) (a * c).
// Throws ValidationError on dimension mismatch or non-finite inputs.
void vedic_blend(std::span<const double> a, std::span<const double> c, double alpha, double lambda,
                 std::span<double> out);
std::vector<double> vedic_blend(std::span<const double> a, std::span<const double> c, double alpha,
                                double lambda);

// Fixed-dimension path used on the per-frame hot loop; no checks.
inline VisemeParams vedic_blend(const VisemeParams& a, const VisemeParams& c, double alpha,
                                double lambda) noexcept {
    const double keep = 1.0 - alpha;
    const double cross = lambda * alpha * keep;
    VisemeParams y;
    for (std::size_t i = 0; i < kRigDim; ++i) {
        y[i] = keep * a[i] + alpha * c[i] + cross * (a[i] * c[i]);
    }
    return y;
}

struct TrajectorySample {
    double t = 0.0;
    VisemeParams y;
    VisemeId dominant;
};

struct Trajectory {
    double frame_rate_hz = 30.0;
    WindowConfig window;
    BlendConfig blend;
    VisemeInventory inventory;
    std::vector<TrajectorySample> samples;
    // Samples where the vedic path fell back to the dominance blend because
    // three or more events overlapped.
    std::size_t fallback_samples = 0;
    std::vector<std::string> warnings;

    std::size_t size() const noexcept { return samples.size(); }
    double duration_s() const noexcept;
};

// ceil(duration * fv), ignoring representation error below 1e-9 frames.
std::size_t frame_count(double duration_s, double frame_rate_hz);

// Samples t_k = k / fv for k = 0 .. ceil(end * fv) - 1. Components are
// clamped to the rig ranges; the dominant viseme is the argmax dominance
// (ties go to the earlier event).
Trajectory sample_trajectory(const VisemeSchedule& schedule, double frame_rate_hz,
                             const WindowConfig& window, const BlendConfig& blend);

// Upper bound on |dy/dt| (per second, any component) for the vedic path.
double vedic_lipschitz_bound(const VisemeSchedule& schedule, const WindowConfig& window,
                             const BlendConfig& blend);

// Tab-separated text: `#` header lines then rows (k, t, y0..y7, viseme).
// Numbers are written with 17 significant digits, so import is exact.
std::string export_trajectory(const Trajectory& trajectory);
Trajectory import_trajectory(std::string_view text);

}  // namespace vthg
