#pragma once

// End-to-end wiring: timing -> schedule -> trajectory -> frames.

#include "vedicthg/config.hpp"
#include "vedicthg/error.hpp"
#include "vedicthg/metrics.hpp"
#include "vedicthg/phonetics.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>

namespace vthg {

// An error tagged with the stage it came from; keeps the original kind.
class StageError : public Error {
public:
    StageError(const std::string& stage, const Error& cause)
        : Error(cause.kind(), stage + ": " + cause.what()), stage_(stage) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

template <typename F>
decltype(auto) in_stage(const char* stage, F&& f) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(stage, e);
    } catch (const std::exception& e) {
        throw StageError(stage, Error(ErrorKind::pipeline, e.what()));
    }
}

enum class TimingKind { phonemes, words };

struct TimingSource {
    std::string text;
    TimingKind kind = TimingKind::phonemes;
};

// JSON list of {"phoneme", ...} or {"word", ...} objects; the kind is
// detected from the first entry.
TimingSource read_timing(const std::filesystem::path& path);
TimingSource timing_from_text(std::string text);
PhonemeStream resolve_timing(const TimingSource& source, const Lexicon* lexicon);

struct Assets {
    VisemeMap map;
    ParamBank params;
    Template tmpl;
    MouthBank bank;
    std::optional<Lexicon> lexicon;
    std::optional<LandmarkTrack> track;
};

// Falls back to the procedural template/bank when paths are empty.
Assets load_assets(const RunConfig& cfg);

struct StageTimes {
    double timing = 0.0;
    double scheduling = 0.0;
    double blending = 0.0;
    double rendering = 0.0;
    double io = 0.0;

    double total() const noexcept { return timing + scheduling + blending + rendering + io; }
    std::map<std::string, double> as_map() const;
};

struct Plan {
    VisemeSchedule schedule;
    Trajectory trajectory;
    std::vector<BBox> rois;
    std::vector<FrameInput> inputs;
};

// Schedule, trajectory, EMA scan and per-frame inputs; fills the
// scheduling/blending/rendering (EMA) timers when given.
Plan make_plan(const RunConfig& cfg, const Assets& assets, const PhonemeStream& stream,
               StageTimes* times = nullptr);

struct SynthResult {
    Plan plan;
    std::size_t frame_count = 0;
    PixelRect roi_union;
    std::vector<std::uint64_t> frame_hashes;  // fnv1a64 of the RGB bytes
    StageTimes times;
};

using FrameSink = std::function<void(const RenderedFrame&)>;

// Renders every frame and hands them to `sink` in index order. Time spent
// in the sink is booked as io.
SynthResult synthesize(const RunConfig& cfg, const Assets& assets, const PhonemeStream& stream,
                       const FrameSink& sink = {});

std::uint64_t frame_hash(const RgbImage& image) noexcept;

// Template landmarks plus i.i.d. Gaussian jitter per point and frame.
LandmarkTrack make_jitter_track(const Template& tmpl, std::size_t frames, double sigma_px, std::uint64_t seed);

// Fixed region for flicker comparisons: the template mouth box doubled.
PixelRect flicker_roi(const Template& tmpl);

struct AblationRow {
    std::string variant;
    std::string description;
    double sync_max_error_ms = 0.0;
    double sync_fraction = 0.0;
    double mean_l1_flicker = 0.0;
    double fps = 0.0;
};

AblationRow run_variant(const RunConfig& cfg, const Assets& assets, const PhonemeStream& stream);
std::vector<AblationRow> run_ablation(const RunConfig& base, const Assets& assets, const PhonemeStream& stream);
std::string format_ablation_table(const std::vector<AblationRow>& rows);

// Duration of a RIFF/WAVE file from its header.
double wav_duration_s(const std::filesystem::path& path);

}  // namespace vthg
