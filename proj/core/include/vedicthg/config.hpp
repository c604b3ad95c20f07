#pragma once

// Run configuration, ablation presets and the reproducibility manifest.

#include "vedicthg/coarticulation.hpp"
#include "vedicthg/renderer.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace vthg {

enum class OutputFormat { png, y4m };

OutputFormat parse_output_format(std::string_view name);
const char* to_string(OutputFormat format) noexcept;

struct RunConfig {
    double fv = 30.0;
    double delta_s = 0.040;
    double lambda = 0.2;
    double beta = 0.85;
    WindowShape window = WindowShape::triangular;
    BlendMode mode = BlendMode::vedic_pairwise;
    std::string ablation;  // empty or A0..A4

    bool mouth_bank = true;
    bool bbox_smooth = true;
    bool jaw_warp = true;
    bool cheek_warp = true;
    HeadMotionMode head_motion = HeadMotionMode::off;
    double head_rotation_deg = 1.2;
    double head_translation_px = 2.0;
    double head_frequency_hz = 0.25;
    double feather_px = 2.0;

    bool merge_adjacent = false;
    unsigned threads = 0;  // 0 = auto
    OutputFormat format = OutputFormat::png;
    double tol_ms = 40.0;

    // Empty template/bank paths select the built-in procedural assets; an
    // empty param bank selects the built-in defaults.
    std::filesystem::path template_path;
    std::filesystem::path bank_path;
    std::filesystem::path lexicon_path;
    std::string viseme_map = "builtin:jeffers";
    std::filesystem::path param_bank_path;
    std::filesystem::path timing_path;
    std::filesystem::path landmarks_path;
    std::filesystem::path audio_path;
    std::filesystem::path out_dir = "out";

    // Throws ConfigError on bad values or unresolvable paths.
    void validate(bool need_timing = true) const;

    WindowConfig window_config() const { return {delta_s, window}; }
    BlendConfig blend_config() const { return {lambda, mode}; }
    RoiConfig roi_config() const;
};

// Overlays the keys present in a JSON object onto `base`. Relative paths
// resolve against `base_dir`. Unknown keys are rejected.
RunConfig merge_config_json(const RunConfig& base, std::string_view json_text,
                            const std::filesystem::path& base_dir = {});
RunConfig load_config_file(const RunConfig& base, const std::filesystem::path& path);

// A0 static mouth, A1 + jaw warp, A2 + cheek warp, A3 + bbox EMA,
// A4 + synthesized head motion.
void apply_ablation(RunConfig& cfg, std::string_view variant);
inline constexpr std::string_view kAblationVariants[] = {"A0", "A1", "A2", "A3", "A4"};
std::string_view ablation_description(std::string_view variant);

// Resolved configuration as JSON (stable key order).
std::string config_to_json(const RunConfig& cfg);

const char* library_version() noexcept;

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t value);

struct RunManifest {
    std::string tool_version;
    RunConfig config;
    std::map<std::string, std::pair<std::string, std::string>> inputs;  // role -> (path, hash)
    std::size_t frame_count = 0;
    int width = 0;
    int height = 0;
    PixelRect roi_union;
    std::vector<std::string> frame_hashes;
    std::map<std::string, double> stage_ms;  // wall clock; excluded from reproducibility
    std::vector<std::string> warnings;

    std::string to_json() const;
};

// Reads the fields `metrics` needs back from a manifest.
struct ManifestView {
    std::size_t frame_count = 0;
    PixelRect roi_union;
    bool head_motion_on = false;
    std::string format;
    double fv = 30.0;
};
ManifestView read_manifest(const std::filesystem::path& path);

}  // namespace vthg
