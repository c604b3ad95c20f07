#include "vedicthg/pipeline.hpp"

#include "vedicthg/sample_assets.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace vthg {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::input, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::uint32_t le32(const unsigned char* p) {
    return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

TimingSource timing_from_text(std::string text) {
    TimingSource src;
    try {
        const auto doc = nlohmann::json::parse(text);
        if (doc.is_array() && !doc.empty() && doc[0].is_object() && doc[0].contains("word")) {
            src.kind = TimingKind::words;
        }
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(0, std::string("timing file: ") + e.what());
    }
    src.text = std::move(text);
    return src;
}

TimingSource read_timing(const std::filesystem::path& path) {
    return timing_from_text(read_text(path));
}

PhonemeStream resolve_timing(const TimingSource& source, const Lexicon* lexicon) {
    if (source.kind == TimingKind::phonemes) {
        return ingest_alignment(source.text);
    }
    if (lexicon == nullptr) {
        throw ConfigError("word timings need a lexicon (--lexicon)");
    }
    const auto words = parse_word_timings(source.text);
    return proportional_align(words, *lexicon);
}

Assets load_assets(const RunConfig& cfg) {
    const bool builtin_map = cfg.viseme_map == "builtin:jeffers" || cfg.viseme_map == "jeffers";
    VisemeMap map = builtin_map ? VisemeMap::builtin_jeffers() : VisemeMap::parse(read_text(cfg.viseme_map));
    ParamBank params;
    if (cfg.param_bank_path.empty()) {
        if (!(map.inventory() == VisemeInventory::jeffers())) {
            throw ConfigError("a custom viseme inventory needs a param bank (param_bank)");
        }
        params = ParamBank::builtin_default();
    } else {
        params = ParamBank::parse(read_text(cfg.param_bank_path), map.inventory());
    }
    Template tmpl = cfg.template_path.empty() ? make_sample_template(256) : load_template(cfg.template_path);
    MouthBank bank = cfg.bank_path.empty() ? make_sample_mouth_bank(params, tmpl.image.width())
                                           : load_mouth_bank(cfg.bank_path, map.inventory());
    Assets a{std::move(map), std::move(params), std::move(tmpl), std::move(bank), std::nullopt, std::nullopt};
    if (!cfg.lexicon_path.empty()) {
        a.lexicon = parse_lexicon(read_text(cfg.lexicon_path));
    }
    if (!cfg.landmarks_path.empty()) {
        a.track = parse_landmark_track(read_text(cfg.landmarks_path));
        if (a.track->empty()) {
            throw ValidationError(ValidationError::Reason::malformed, 0, "landmark track has no frames");
        }
        if (a.track->frames.front().size() != a.tmpl.landmarks.size()) {
            throw ValidationError(ValidationError::Reason::malformed, 0,
                                  "landmark track layout differs from the template");
        }
    }
    return a;
}

std::map<std::string, double> StageTimes::as_map() const {
    return {{"timing", timing}, {"scheduling", scheduling}, {"blending", blending},
            {"rendering", rendering}, {"io", io}};
}

Plan make_plan(const RunConfig& cfg, const Assets& assets, const PhonemeStream& stream, StageTimes* times) {
    Plan plan;
    auto t0 = Clock::now();
    plan.schedule = in_stage("scheduling", [&] {
        return map_phonemes_to_visemes(stream, assets.map, assets.params, cfg.merge_adjacent);
    });
    if (times) times->scheduling += ms_since(t0);

    t0 = Clock::now();
    plan.trajectory = in_stage("blending", [&] {
        return sample_trajectory(plan.schedule, cfg.fv, cfg.window_config(), cfg.blend_config());
    });
    if (times) times->blending += ms_since(t0);

    t0 = Clock::now();
    const LandmarkTrack* track = assets.track ? &*assets.track : nullptr;
    in_stage("rendering", [&] {
        plan.rois = plan_roi_track(assets.tmpl, track, cfg.roi_config(), plan.trajectory.size());
    });
    plan.inputs.reserve(plan.trajectory.size());
    for (std::size_t k = 0; k < plan.trajectory.size(); ++k) {
        const auto& s = plan.trajectory.samples[k];
        plan.inputs.push_back(FrameInput{k, s.t, s.y, s.dominant, plan.rois[k], track ? &track->at(k) : nullptr});
    }
    if (times) times->rendering += ms_since(t0);
    return plan;
}

std::uint64_t frame_hash(const RgbImage& image) noexcept {
    const auto bytes = image.data();
    return fnv1a64(bytes.data(), bytes.size_bytes());
}

SynthResult synthesize(const RunConfig& cfg, const Assets& assets, const PhonemeStream& stream,
                       const FrameSink& sink) {
    SynthResult r;
    r.plan = make_plan(cfg, assets, stream, &r.times);
    const RenderContext ctx(assets.tmpl, assets.bank, cfg.roi_config());
    const unsigned threads = resolve_thread_count(cfg.threads);

    double io_ms = 0.0;
    const auto t0 = Clock::now();
    in_stage("rendering", [&] {
        render_sequence(ctx, r.plan.inputs, threads, [&](RenderedFrame&& f) {
            r.frame_hashes.push_back(frame_hash(f.image));
            r.roi_union = r.roi_union.unite(f.composite_rect);
            ++r.frame_count;
            if (sink) {
                const auto t1 = Clock::now();
                in_stage("io", [&] { sink(f); });
                io_ms += ms_since(t1);
            }
        });
    });
    r.times.rendering += ms_since(t0) - io_ms;
    r.times.io += io_ms;
    return r;
}

LandmarkTrack make_jitter_track(const Template& tmpl, std::size_t frames, double sigma_px, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma_px);
    LandmarkTrack track;
    track.frames.reserve(frames);
    const double xmax = tmpl.image.width() - 1;
    const double ymax = tmpl.image.height() - 1;
    for (std::size_t k = 0; k < frames; ++k) {
        std::vector<Point2> pts = tmpl.landmarks;
        for (auto& p : pts) {
            p.x = std::clamp(p.x + noise(rng), 0.0, xmax);
            p.y = std::clamp(p.y + noise(rng), 0.0, ymax);
        }
        track.frames.push_back(std::move(pts));
    }
    return track;
}

PixelRect flicker_roi(const Template& tmpl) {
    const BBox b = compute_bbox(tmpl.mouth_points());
    const int x0 = static_cast<int>(std::floor(b.cx - b.w));
    const int y0 = static_cast<int>(std::floor(b.cy - b.h));
    const int x1 = static_cast<int>(std::ceil(b.cx + b.w));
    const int y1 = static_cast<int>(std::ceil(b.cy + b.h));
    return PixelRect{x0, y0, x1 - x0 + 1, y1 - y0 + 1}.intersect({0, 0, tmpl.image.width(), tmpl.image.height()});
}

AblationRow run_variant(const RunConfig& cfg, const Assets& assets, const PhonemeStream& stream) {
    const PixelRect roi = flicker_roi(assets.tmpl);
    RgbImage prev;
    double flicker_sum = 0.0;
    std::size_t pairs = 0;
    const auto result = synthesize(cfg, assets, stream, [&](const RenderedFrame& f) {
        if (!prev.empty()) {
            const RgbImage pair[2] = {prev, f.image};
            flicker_sum += flicker(pair, roi).mean_l1_flicker;
            ++pairs;
        }
        prev = f.image;
    });
    const auto sync = sync_accuracy(stream, assets.map, result.plan.trajectory, cfg.tol_ms);

    AblationRow row;
    row.variant = cfg.ablation;
    row.description = cfg.ablation.empty() ? "custom" : std::string(ablation_description(cfg.ablation));
    row.sync_max_error_ms = sync.max_error_ms();
    row.sync_fraction = sync.fraction_within_tol;
    row.mean_l1_flicker = pairs ? flicker_sum / static_cast<double>(pairs) : 0.0;
    row.fps = result.times.rendering > 0.0 ? 1000.0 * result.frame_count / result.times.rendering : 0.0;
    return row;
}

std::vector<AblationRow> run_ablation(const RunConfig& base, const Assets& assets, const PhonemeStream& stream) {
    std::vector<AblationRow> rows;
    for (auto v : kAblationVariants) {
        RunConfig cfg = base;
        apply_ablation(cfg, v);
        rows.push_back(run_variant(cfg, assets, stream));
    }
    return rows;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-8s %-24s %14s %10s %14s %9s\n", "variant", "modules", "sync_max_ms",
                  "sync_frac", "mean_l1_flick", "fps");
    out += line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-8s %-24s %14.3f %10.3f %14.4f %9.1f\n", r.variant.c_str(),
                      r.description.c_str(), r.sync_max_error_ms, r.sync_fraction, r.mean_l1_flicker, r.fps);
        out += line;
    }
    return out;
}

double wav_duration_s(const std::filesystem::path& path) {
    const std::string data = read_text(path);
    const auto* p = reinterpret_cast<const unsigned char*>(data.data());
    if (data.size() < 12 || data.compare(0, 4, "RIFF") != 0 || data.compare(8, 4, "WAVE") != 0) {
        throw Error(ErrorKind::input, path.string() + " is not a RIFF/WAVE file");
    }
    std::uint32_t byte_rate = 0;
    std::size_t pos = 12;
    while (pos + 8 <= data.size()) {
        const std::uint32_t size = le32(p + pos + 4);
        if (data.compare(pos, 4, "fmt ") == 0 && size >= 16 && pos + 8 + 16 <= data.size()) {
            byte_rate = le32(p + pos + 8 + 8);
        } else if (data.compare(pos, 4, "data") == 0) {
            if (byte_rate == 0) {
                throw Error(ErrorKind::input, path.string() + ": data chunk before a valid fmt chunk");
            }
            return static_cast<double>(size) / byte_rate;
        }
        pos += 8 + size + (size & 1u);
    }
    throw Error(ErrorKind::input, path.string() + ": no data chunk");
}

}  // namespace vthg
