#include "vedicthg/metrics.hpp"

#include "vedicthg/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace vthg {

namespace {

// Slack absorbing representation error when comparing against tol.
constexpr double kTolSlackMs = 1e-9;

void require_same_inventory(const VisemeMap& map, const VisemeInventory& inventory) {
    if (!(map.inventory() == inventory)) {
        throw ConfigError("viseme map and trajectory use different inventories");
    }
}

}  // namespace

double SyncReport::max_error_ms() const noexcept {
    return errors_ms.empty() ? 0.0 : *std::max_element(errors_ms.begin(), errors_ms.end());
}

SyncReport make_sync_report(std::vector<double> errors_ms, double tol_ms) {
    if (errors_ms.empty()) {
        throw ValidationError(ValidationError::Reason::malformed, 0, "sync report needs at least one event");
    }
    if (!(tol_ms >= 0.0)) {
        throw ConfigError("tolerance must be >= 0 ms");
    }
    SyncReport r;
    r.tolerance_ms = tol_ms;
    r.errors_ms = std::move(errors_ms);
    std::size_t within = 0;
    for (double e : r.errors_ms) {
        if (std::isinf(e)) {
            ++r.unmatched;
        } else if (e <= tol_ms + kTolSlackMs) {
            ++within;
        }
    }
    const double n = static_cast<double>(r.errors_ms.size());
    r.fraction_within_tol = within / n;

    std::vector<double> sorted = r.errors_ms;
    std::sort(sorted.begin(), sorted.end());
    r.cdf.reserve(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        r.cdf.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
    }
    return r;
}

SyncReport sync_accuracy(const PhonemeStream& stream, const VisemeMap& map, const Trajectory& trajectory,
                         double tol_ms) {
    require_same_inventory(map, trajectory.inventory);
    const auto& samples = trajectory.samples;
    const double half_frame = 0.5 / trajectory.frame_rate_hz;
    std::vector<double> errors;
    errors.reserve(stream.size());
    for (const auto& seg : stream.segments()) {
        const VisemeId want = map.lookup(seg.phoneme);
        auto it = std::partition_point(samples.begin(), samples.end(),
                                       [&](const TrajectorySample& s) { return s.t <= seg.start_s; });
        it = std::find_if(it, samples.end(), [&](const TrajectorySample& s) { return s.dominant == want; });
        if (it == samples.end()) {
            errors.push_back(std::numeric_limits<double>::infinity());
            continue;
        }
        errors.push_back(std::abs(seg.start_s - (it->t - half_frame)) * 1000.0);
    }
    return make_sync_report(std::move(errors), tol_ms);
}

SyncReport sync_accuracy(const PhonemeStream& stream, const VisemeMap& map, const VisemeSchedule& schedule,
                         double tol_ms) {
    require_same_inventory(map, schedule.inventory());
    const auto& events = schedule.events();
    std::vector<double> errors;
    errors.reserve(stream.size());
    for (const auto& seg : stream.segments()) {
        const VisemeId want = map.lookup(seg.phoneme);
        const auto at = schedule.event_at(seg.start_s);
        if (!at) {
            errors.push_back(std::numeric_limits<double>::infinity());
            continue;
        }
        if (events[*at].viseme == want) {
            errors.push_back(0.0);
            continue;
        }
        const auto it = std::find_if(events.begin() + static_cast<std::ptrdiff_t>(*at) + 1, events.end(),
                                     [&](const VisemeEvent& e) { return e.viseme == want; });
        errors.push_back(it == events.end() ? std::numeric_limits<double>::infinity()
                                            : std::abs(it->start_s - seg.start_s) * 1000.0);
    }
    return make_sync_report(std::move(errors), tol_ms);
}

std::string format_cdf(const SyncReport& report) {
    if (report.cdf.empty()) {
        throw ValidationError(ValidationError::Reason::malformed, 0, "empty sync report");
    }
    std::string out;
    char line[96];
    for (const auto& [err, frac] : report.cdf) {
        std::snprintf(line, sizeof line, "%.6f %.6f\n", err, frac);
        out += line;
    }
    return out;
}

void export_cdf(const SyncReport& report, const std::filesystem::path& path) {
    const auto text = format_cdf(report);
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text) || !out.flush()) {
        throw Error(ErrorKind::input, "cannot write " + path.string());
    }
}

StabilityReport flicker(std::span<const RgbImage> frames, const PixelRect& roi) {
    if (frames.size() < 2) {
        throw ValidationError(ValidationError::Reason::malformed, frames.size(), "flicker needs at least 2 frames");
    }
    const PixelRect r = roi.intersect({0, 0, frames[0].width(), frames[0].height()});
    if (r.empty()) {
        throw ValidationError(ValidationError::Reason::out_of_range, 0, "flicker ROI lies outside the frame");
    }
    StabilityReport report;
    report.per_pair_l1.reserve(frames.size() - 1);
    const double denom = static_cast<double>(r.area()) * 3.0;
    for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
        const auto& a = frames[k];
        const auto& b = frames[k + 1];
        if (!b.same_size(a.width(), a.height())) {
            throw ValidationError(ValidationError::Reason::malformed, k + 1, "frame size changes within sequence");
        }
        std::uint64_t sum = 0;
        for (int y = r.y0; y < r.y1(); ++y) {
            const auto* pa = a.pixel(r.x0, y);
            const auto* pb = b.pixel(r.x0, y);
            for (int i = 0; i < r.width * 3; ++i) {
                sum += static_cast<std::uint64_t>(std::abs(int(pa[i]) - int(pb[i])));
            }
        }
        report.per_pair_l1.push_back(static_cast<double>(sum) / denom);
    }
    report.mean_l1_flicker = std::accumulate(report.per_pair_l1.begin(), report.per_pair_l1.end(), 0.0) /
                             static_cast<double>(report.per_pair_l1.size());
    return report;
}

GrayImage rect_mask(int width, int height, std::span<const PixelRect> rects) {
    GrayImage mask(width, height, 0);
    const PixelRect frame{0, 0, width, height};
    for (const auto& rect : rects) {
        const PixelRect r = rect.intersect(frame);
        for (int y = r.y0; y < r.y1(); ++y) {
            for (int x = r.x0; x < r.x1(); ++x) {
                mask.at(x, y) = 255;
            }
        }
    }
    return mask;
}

int identity_outside_roi(std::span<const RgbImage> frames, const RgbImage& tmpl, const GrayImage& roi_mask,
                         bool head_motion_on) {
    if (head_motion_on) {
        throw ConfigError("identity check outside the ROI requires head motion off");
    }
    if (!roi_mask.same_size(tmpl.width(), tmpl.height())) {
        throw ValidationError(ValidationError::Reason::malformed, 0, "ROI mask size differs from the template");
    }
    int worst = 0;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const auto& f = frames[k];
        if (!f.same_size(tmpl.width(), tmpl.height())) {
            throw ValidationError(ValidationError::Reason::malformed, k, "frame size differs from the template");
        }
        for (int y = 0; y < f.height(); ++y) {
            for (int x = 0; x < f.width(); ++x) {
                if (roi_mask.at(x, y) != 0) {
                    continue;
                }
                const auto* a = f.pixel(x, y);
                const auto* b = tmpl.pixel(x, y);
                for (int c = 0; c < 3; ++c) {
                    worst = std::max(worst, std::abs(int(a[c]) - int(b[c])));
                }
            }
        }
    }
    return worst;
}

std::vector<double> identity_drift(std::span<const std::vector<double>> embeddings) {
    if (embeddings.empty()) {
        return {};
    }
    const std::size_t dim = embeddings[0].size();
    for (std::size_t k = 0; k < embeddings.size(); ++k) {
        const auto& e = embeddings[k];
        if (e.size() != dim || dim == 0) {
            throw ValidationError(ValidationError::Reason::malformed, k, "embedding dimension mismatch");
        }
        const double norm = std::sqrt(std::inner_product(e.begin(), e.end(), e.begin(), 0.0));
        if (!(std::abs(norm - 1.0) <= 1e-6)) {
            throw ValidationError(ValidationError::Reason::out_of_range, k, "embedding is not unit-normalized");
        }
    }
    std::vector<double> out;
    out.reserve(embeddings.size());
    const auto& e0 = embeddings[0];
    for (const auto& e : embeddings) {
        out.push_back(1.0 - std::inner_product(e0.begin(), e0.end(), e.begin(), 0.0));
    }
    return out;
}

std::vector<std::vector<double>> parse_embeddings(std::string_view text) {
    std::vector<std::vector<double>> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::istringstream fields(line);
        std::vector<double> v;
        std::string tok;
        while (fields >> tok) {
            try {
                std::size_t used = 0;
                v.push_back(std::stod(tok, &used));
                if (used != tok.size()) {
                    throw std::invalid_argument(tok);
                }
            } catch (const std::exception&) {
                throw ParseError(line_no, "bad number '" + tok + "'");
            }
        }
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace vthg
