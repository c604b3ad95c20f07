#include "vedicthg/coarticulation.hpp"

#include "vedicthg/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace vthg {

namespace {

double ramp(double u, WindowShape shape) noexcept {
    if (shape == WindowShape::raised_cosine) {
        return 0.5 * (1.0 - std::cos(std::numbers::pi * u));
    }
    return u;
}

// Weight of every event near t, plus the argmax. Events are sorted and
// disjoint, so both start and end times are monotone and the scan stops at
// the first event whose support excludes t.
struct DominanceSum {
    VisemeParams weighted{};
    double total = 0.0;
    std::size_t supported = 0;
    std::size_t argmax = 0;
    double best = -1.0;
};

// Index of the first event with end_s >= t; the scan anchor.
std::size_t anchor_index(const std::vector<VisemeEvent>& events, double t) noexcept {
    const auto it = std::lower_bound(events.begin(), events.end(), t,
                                     [](const VisemeEvent& e, double v) { return e.end_s < v; });
    if (it == events.end()) {
        return events.size() - 1;
    }
    return static_cast<std::size_t>(it - events.begin());
}

DominanceSum dominance_sum(const VisemeSchedule& schedule, double t, const WindowConfig& cfg,
                           std::size_t anchor) noexcept {
    const auto& events = schedule.events();
    DominanceSum acc;
    acc.argmax = anchor;
    std::size_t lo = anchor;
    while (lo > 0 && events[lo - 1].end_s + cfg.delta_s > t) {
        --lo;
    }
    for (std::size_t j = lo; j < events.size() && events[j].start_s - cfg.delta_s < t; ++j) {
        const double w = dominance_weight(events[j], t, cfg);
        if (w <= 0.0) {
            continue;
        }
        const auto& m = schedule.bank().at(events[j].viseme);
        for (std::size_t c = 0; c < kRigDim; ++c) {
            acc.weighted[c] += w * m[c];
        }
        acc.total += w;
        ++acc.supported;
        // Left-to-right scan with a strict comparison: ties keep the earlier event.
        if (w > acc.best) {
            acc.best = w;
            acc.argmax = j;
        }
    }
    return acc;
}

VisemeParams normalized(const DominanceSum& acc) noexcept {
    VisemeParams y;
    for (std::size_t c = 0; c < kRigDim; ++c) {
        y[c] = acc.weighted[c] / acc.total;
    }
    return y;
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

}  // namespace

const char* to_string(WindowShape shape) noexcept {
    return shape == WindowShape::triangular ? "triangular" : "raised_cosine";
}

const char* to_string(BlendMode mode) noexcept {
    return mode == BlendMode::vedic_pairwise ? "vedic_pairwise" : "dominance_weighted";
}

WindowShape parse_window_shape(std::string_view name) {
    if (name == "tri" || name == "triangular") {
        return WindowShape::triangular;
    }
    if (name == "cos" || name == "raised_cosine") {
        return WindowShape::raised_cosine;
    }
    throw ConfigError("unknown window shape '" + std::string(name) + "'");
}

BlendMode parse_blend_mode(std::string_view name) {
    if (name == "vedic" || name == "vedic_pairwise") {
        return BlendMode::vedic_pairwise;
    }
    if (name == "dominance" || name == "dominance_weighted") {
        return BlendMode::dominance_weighted;
    }
    throw ConfigError("unknown blend mode '" + std::string(name) + "'");
}

void WindowConfig::validate() const {
    if (!std::isfinite(delta_s) || !(delta_s > 0.0)) {
        throw ConfigError("overlap margin delta must be > 0");
    }
}

void BlendConfig::validate() const {
    if (!std::isfinite(lambda) || lambda < 0.0) {
        throw ConfigError("cross-term weight lambda must be >= 0");
    }
}

double dominance_weight(const VisemeEvent& event, double t, const WindowConfig& cfg) noexcept {
    const double d = cfg.delta_s;
    if (t < event.start_s - d || t > event.end_s + d) {
        return 0.0;
    }
    if (t < event.start_s) {
        return ramp((t - (event.start_s - d)) / d, cfg.shape);
    }
    if (t <= event.end_s) {
        return 1.0;
    }
    return ramp(((event.end_s + d) - t) / d, cfg.shape);
}

VisemeParams blend_at(const VisemeSchedule& schedule, double t, const WindowConfig& cfg) {
    if (schedule.empty()) {
        throw ValidationError(ValidationError::Reason::malformed, 0, "empty viseme schedule");
    }
    const auto acc = dominance_sum(schedule, t, cfg, anchor_index(schedule.events(), t));
    if (acc.total <= 0.0) {
        return schedule.bank().at(schedule.bank().neutral());
    }
    return normalized(acc);
}

double transition_phase(const VisemeEvent& prev, const VisemeEvent& next, double t,
                        const WindowConfig& cfg) {
    if (prev.end_s != next.start_s) {
        throw ValidationError(ValidationError::Reason::malformed, 0,
                              "transition_phase needs contiguous events");
    }
    if (t <= prev.end_s - cfg.delta_s) {
        return 0.0;
    }
    if (t >= next.start_s + cfg.delta_s) {
        return 1.0;
    }
    const double w_prev = dominance_weight(prev, t, cfg);
    const double w_next = dominance_weight(next, t, cfg);
    return w_next / (w_prev + w_next);
}

void vedic_blend(std::span<const double> a, std::span<const double> c, double alpha, double lambda,
                 std::span<double> out) {
    if (a.size() != c.size() || out.size() != a.size()) {
        throw ValidationError(ValidationError::Reason::malformed, 0,
                              "vedic_blend dimension mismatch (" + std::to_string(a.size()) + " vs " +
                                  std::to_string(c.size()) + ")");
    }
    if (!std::isfinite(alpha) || !std::isfinite(lambda)) {
        throw ValidationError(ValidationError::Reason::non_finite, 0, "vedic_blend weight is not finite");
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!std::isfinite(a[i]) || !std::isfinite(c[i])) {
            throw ValidationError(ValidationError::Reason::non_finite, i,
                                  "vedic_blend input is not finite");
        }
    }
    const double keep = 1.0 - alpha;
    const double cross = lambda * alpha * keep;
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = keep * a[i] + alpha * c[i] + cross * (a[i] * c[i]);
    }
}

std::vector<double> vedic_blend(std::span<const double> a, std::span<const double> c, double alpha,
                                double lambda) {
    std::vector<double> out(a.size());
    vedic_blend(a, c, alpha, lambda, out);
    return out;
}

double Trajectory::duration_s() const noexcept {
    return static_cast<double>(samples.size()) / frame_rate_hz;
}

std::size_t frame_count(double duration_s, double frame_rate_hz) {
    if (!(frame_rate_hz > 0.0) || !std::isfinite(frame_rate_hz)) {
        throw ConfigError("frame rate must be > 0");
    }
    if (!(duration_s > 0.0)) {
        return 0;
    }
    return static_cast<std::size_t>(std::ceil(duration_s * frame_rate_hz - 1e-9));
}

Trajectory sample_trajectory(const VisemeSchedule& schedule, double frame_rate_hz,
                             const WindowConfig& window, const BlendConfig& blend) {
    window.validate();
    blend.validate();
    if (schedule.empty()) {
        throw ValidationError(ValidationError::Reason::malformed, 0, "empty viseme schedule");
    }

    Trajectory traj;
    traj.frame_rate_hz = frame_rate_hz;
    traj.window = window;
    traj.blend = blend;
    traj.inventory = schedule.inventory();

    const auto& events = schedule.events();
    const auto& bank = schedule.bank();
    const double d = window.delta_s;

    const std::size_t count = frame_count(schedule.end_s(), frame_rate_hz);
    traj.samples.resize(count);

    if (blend.mode == BlendMode::vedic_pairwise) {
        double shortest = events.front().duration_s();
        for (const auto& ev : events) {
            shortest = std::min(shortest, ev.duration_s());
        }
        if (d > 0.5 * shortest) {
            char msg[160];
            std::snprintf(msg, sizeof msg,
                          "overlap margin %.3f s exceeds half of the shortest event (%.3f s long); "
                          "three-way overlaps fall back to the dominance blend",
                          d, shortest);
            traj.warnings.emplace_back(msg);
        }
    }

    const VisemeId neutral = bank.neutral();
    std::size_t i = 0;  // anchor_index(events, t), advanced as t grows
    for (std::size_t k = 0; k < count; ++k) {
        const double t = static_cast<double>(k) / frame_rate_hz;
        auto& out = traj.samples[k];
        out.t = t;
        while (i + 1 < events.size() && events[i].end_s < t) {
            ++i;
        }

        if (blend.mode == BlendMode::vedic_pairwise) {
            // Pick the transition window t falls into, if any.
            std::size_t lhs = i;
            bool in_window = false;
            if (i + 1 < events.size() && t > events[i].end_s - d) {
                in_window = true;
            } else if (i > 0 && t < events[i].start_s + d) {
                lhs = i - 1;
                in_window = true;
            }
            if (!in_window) {
                if (t >= events[i].start_s) {
                    out.y = clamp_to_rig(bank.at(events[i].viseme));
                    out.dominant = events[i].viseme;
                    continue;
                }
                // Before the first event or inside a gap: no pair to blend.
            } else {
                const auto& a = events[lhs];
                const auto& c = events[lhs + 1];
                const bool contiguous = a.end_s == c.start_s;
                const bool left_clear = lhs == 0 || t >= events[lhs - 1].end_s + d;
                const bool right_clear = lhs + 2 >= events.size() || t <= events[lhs + 2].start_s - d;
                if (contiguous && left_clear && right_clear) {
                    const double alpha = transition_phase(a, c, t, window);
                    out.y = clamp_to_rig(vedic_blend(bank.at(a.viseme), bank.at(c.viseme), alpha, blend.lambda));
                    // Both windows equal 1 on the boundary; the earlier event keeps it.
                    out.dominant = t <= a.end_s ? a.viseme : c.viseme;
                    continue;
                }
                ++traj.fallback_samples;
            }
        }

        const auto acc = dominance_sum(schedule, t, window, i);
        if (acc.total <= 0.0) {
            out.y = clamp_to_rig(bank.at(neutral));
            out.dominant = neutral;
        } else {
            out.y = clamp_to_rig(normalized(acc));
            out.dominant = events[acc.argmax].viseme;
        }
    }
    return traj;
}

double vedic_lipschitz_bound(const VisemeSchedule& schedule, const WindowConfig& window,
                             const BlendConfig& blend) {
    window.validate();
    blend.validate();
    const auto& events = schedule.events();
    const auto& bank = schedule.bank();
    double worst = 0.0;
    for (std::size_t j = 0; j + 1 < events.size(); ++j) {
        const auto& a = bank.at(events[j].viseme);
        const auto& c = bank.at(events[j + 1].viseme);
        for (std::size_t i = 0; i < kRigDim; ++i) {
            // |dy/d alpha| <= |c - a| + lambda |a c| on alpha in [0, 1].
            worst = std::max(worst, std::abs(c[i] - a[i]) + blend.lambda * std::abs(a[i] * c[i]));
        }
    }
    // Steepest d alpha / dt of the normalized crossfade.
    const double phase_slope = window.shape == WindowShape::triangular
                                   ? 1.0 / window.delta_s
                                   : std::numbers::pi / (2.0 * window.delta_s);
    return worst * phase_slope;
}

std::string export_trajectory(const Trajectory& trajectory) {
    std::ostringstream out;
    out << "#vedicthg-trajectory 1\n";
    out << "#fv=" << format_double(trajectory.frame_rate_hz) << " d=" << kRigDim
        << " delta=" << format_double(trajectory.window.delta_s)
        << " lambda=" << format_double(trajectory.blend.lambda)
        << " shape=" << to_string(trajectory.window.shape)
        << " mode=" << to_string(trajectory.blend.mode) << '\n';
    out << "#inventory=";
    for (std::size_t i = 0; i < trajectory.inventory.size(); ++i) {
        out << (i ? "," : "") << trajectory.inventory.names()[i];
    }
    out << "\nk\tt";
    for (std::size_t c = 0; c < kRigDim; ++c) {
        out << "\ty" << c;
    }
    out << "\tviseme\n";
    for (std::size_t k = 0; k < trajectory.samples.size(); ++k) {
        const auto& s = trajectory.samples[k];
        out << k << '\t' << format_double(s.t);
        for (double v : s.y.values) {
            out << '\t' << format_double(v);
        }
        out << '\t' << trajectory.inventory.name(s.dominant) << '\n';
    }
    return out.str();
}

Trajectory import_trajectory(std::string_view text) {
    Trajectory traj;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    bool have_columns = false;

    auto parse_number = [&](std::string_view token) {
        double v = 0.0;
        const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
        if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
            throw ParseError(line_no, "bad number '" + std::string(token) + "'");
        }
        return v;
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        if (line.starts_with("#inventory=")) {
            std::vector<std::string> names;
            std::istringstream list(line.substr(11));
            std::string name;
            while (std::getline(list, name, ',')) {
                names.push_back(name);
            }
            traj.inventory = VisemeInventory(std::move(names));
            continue;
        }
        if (line.starts_with("#fv=")) {
            std::istringstream fields(line.substr(1));
            std::string kv;
            while (fields >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) {
                    throw ParseError(line_no, "bad header field '" + kv + "'");
                }
                const auto key = kv.substr(0, eq);
                const auto value = kv.substr(eq + 1);
                if (key == "fv") {
                    traj.frame_rate_hz = parse_number(value);
                } else if (key == "d") {
                    if (parse_number(value) != static_cast<double>(kRigDim)) {
                        throw ParseError(line_no, "trajectory dimension does not match the rig");
                    }
                } else if (key == "delta") {
                    traj.window.delta_s = parse_number(value);
                } else if (key == "lambda") {
                    traj.blend.lambda = parse_number(value);
                } else if (key == "shape") {
                    traj.window.shape = parse_window_shape(value);
                } else if (key == "mode") {
                    traj.blend.mode = parse_blend_mode(value);
                }
            }
            have_header = true;
            continue;
        }
        if (line.front() == '#') {
            continue;
        }
        if (!have_columns) {
            if (!line.starts_with("k\t")) {
                throw ParseError(line_no, "missing column header");
            }
            have_columns = true;
            continue;
        }
        std::vector<std::string_view> cols;
        std::string_view rest = line;
        while (true) {
            const auto tab = rest.find('\t');
            cols.push_back(rest.substr(0, tab));
            if (tab == std::string_view::npos) {
                break;
            }
            rest.remove_prefix(tab + 1);
        }
        if (cols.size() != kRigDim + 3) {
            throw ParseError(line_no, "expected " + std::to_string(kRigDim + 3) + " columns");
        }
        if (parse_number(cols[0]) != static_cast<double>(traj.samples.size())) {
            throw ParseError(line_no, "frame index out of sequence");
        }
        TrajectorySample s;
        s.t = parse_number(cols[1]);
        for (std::size_t c = 0; c < kRigDim; ++c) {
            s.y[c] = parse_number(cols[2 + c]);
        }
        const auto id = traj.inventory.find(cols.back());
        if (!id) {
            throw ParseError(line_no, "unknown viseme '" + std::string(cols.back()) + "'");
        }
        s.dominant = *id;
        traj.samples.push_back(s);
    }
    if (!have_header || !have_columns) {
        throw ParseError(0, "not a trajectory file");
    }
    return traj;
}

}  // namespace vthg
