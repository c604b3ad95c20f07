#include "vedicthg/config.hpp"

#include "vedicthg/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#ifndef VEDICTHG_VERSION
#define VEDICTHG_VERSION "0.0.0"
#endif

namespace vthg {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void require_file(const std::filesystem::path& p, const char* what) {
    if (!p.empty() && !std::filesystem::is_regular_file(p)) {
        throw ConfigError(std::string(what) + " not found: " + p.string());
    }
}

template <typename T>
T get_as(const json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

}  // namespace

OutputFormat parse_output_format(std::string_view name) {
    if (name == "png") {
        return OutputFormat::png;
    }
    if (name == "y4m") {
        return OutputFormat::y4m;
    }
    throw ConfigError("unknown output format '" + std::string(name) + "'");
}

const char* to_string(OutputFormat format) noexcept {
    return format == OutputFormat::png ? "png" : "y4m";
}

void RunConfig::validate(bool need_timing) const {
    if (!(fv > 0.0) || !std::isfinite(fv)) {
        throw ConfigError("fv must be > 0");
    }
    window_config().validate();
    blend_config().validate();
    roi_config().validate();
    if (!(tol_ms >= 0.0)) {
        throw ConfigError("tol_ms must be >= 0");
    }
    if (!ablation.empty()) {
        ablation_description(ablation);
    }
    if (need_timing && timing_path.empty()) {
        throw ConfigError("a timing file is required (--timing)");
    }
    require_file(timing_path, "timing file");
    require_file(template_path, "template manifest");
    require_file(bank_path, "mouth bank manifest");
    require_file(lexicon_path, "lexicon");
    require_file(param_bank_path, "param bank");
    require_file(landmarks_path, "landmark track");
    require_file(audio_path, "audio file");
    if (viseme_map != "builtin:jeffers" && viseme_map != "jeffers") {
        require_file(viseme_map, "viseme map");
    }
    if (head_motion == HeadMotionMode::tracked && landmarks_path.empty()) {
        throw ConfigError("tracked head motion needs a landmark track");
    }
}

RoiConfig RunConfig::roi_config() const {
    RoiConfig r;
    r.beta = beta;
    r.feather_px = feather_px;
    r.head.mode = head_motion;
    r.head.rotation_deg = head_rotation_deg;
    r.head.translation_px = head_translation_px;
    r.head.frequency_hz = head_frequency_hz;
    r.mouth_bank = mouth_bank;
    r.bbox_smooth = bbox_smooth;
    r.jaw_warp = jaw_warp;
    r.cheek_warp = cheek_warp;
    return r;
}

RunConfig merge_config_json(const RunConfig& base, std::string_view json_text,
                            const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text.begin(), json_text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    RunConfig cfg = base;
    auto path_of = [&](const json& v, const std::string& key) {
        std::filesystem::path p = get_as<std::string>(v, key);
        return (p.empty() || p.is_absolute() || base_dir.empty()) ? p : base_dir / p;
    };
    for (const auto& [key, v] : doc.items()) {
        if (key == "fv") cfg.fv = get_as<double>(v, key);
        else if (key == "delta_s") cfg.delta_s = get_as<double>(v, key);
        else if (key == "lambda") cfg.lambda = get_as<double>(v, key);
        else if (key == "beta") cfg.beta = get_as<double>(v, key);
        else if (key == "window") cfg.window = parse_window_shape(get_as<std::string>(v, key));
        else if (key == "mode") cfg.mode = parse_blend_mode(get_as<std::string>(v, key));
        else if (key == "ablation") cfg.ablation = get_as<std::string>(v, key);
        else if (key == "mouth_bank") cfg.mouth_bank = get_as<bool>(v, key);
        else if (key == "bbox_smooth") cfg.bbox_smooth = get_as<bool>(v, key);
        else if (key == "jaw_warp") cfg.jaw_warp = get_as<bool>(v, key);
        else if (key == "cheek_warp") cfg.cheek_warp = get_as<bool>(v, key);
        else if (key == "head_motion") cfg.head_motion = parse_head_motion(get_as<std::string>(v, key));
        else if (key == "head_rotation_deg") cfg.head_rotation_deg = get_as<double>(v, key);
        else if (key == "head_translation_px") cfg.head_translation_px = get_as<double>(v, key);
        else if (key == "head_frequency_hz") cfg.head_frequency_hz = get_as<double>(v, key);
        else if (key == "feather_px") cfg.feather_px = get_as<double>(v, key);
        else if (key == "merge_adjacent") cfg.merge_adjacent = get_as<bool>(v, key);
        else if (key == "threads") cfg.threads = get_as<unsigned>(v, key);
        else if (key == "format") cfg.format = parse_output_format(get_as<std::string>(v, key));
        else if (key == "tol_ms") cfg.tol_ms = get_as<double>(v, key);
        else if (key == "template") cfg.template_path = path_of(v, key);
        else if (key == "bank") cfg.bank_path = path_of(v, key);
        else if (key == "lexicon") cfg.lexicon_path = path_of(v, key);
        else if (key == "viseme_map") {
            const auto s = get_as<std::string>(v, key);
            cfg.viseme_map = (s == "builtin:jeffers" || s == "jeffers") ? s : path_of(v, key).string();
        }
        else if (key == "param_bank") cfg.param_bank_path = path_of(v, key);
        else if (key == "timing") cfg.timing_path = path_of(v, key);
        else if (key == "landmarks") cfg.landmarks_path = path_of(v, key);
        else if (key == "audio") cfg.audio_path = path_of(v, key);
        else if (key == "out_dir") cfg.out_dir = path_of(v, key);
        else throw ConfigError("unknown config key '" + key + "'");
    }
    return cfg;
}

RunConfig load_config_file(const RunConfig& base, const std::filesystem::path& path) {
    return merge_config_json(base, read_text(path), path.parent_path());
}

void apply_ablation(RunConfig& cfg, std::string_view variant) {
    ablation_description(variant);  // rejects unknown names
    const int level = variant[1] - '0';
    cfg.ablation = std::string(variant);
    cfg.mouth_bank = true;
    cfg.jaw_warp = level >= 1;
    cfg.cheek_warp = level >= 2;
    cfg.bbox_smooth = level >= 3;
    cfg.head_motion = level >= 4 ? HeadMotionMode::synthesized : HeadMotionMode::off;
}

std::string_view ablation_description(std::string_view variant) {
    if (variant == "A0") return "static mouth";
    if (variant == "A1") return "+ jaw warp";
    if (variant == "A2") return "+ cheek warp";
    if (variant == "A3") return "+ bbox smoothing (EMA)";
    if (variant == "A4") return "+ head-only motion";
    throw ConfigError("unknown ablation variant '" + std::string(variant) + "' (expected A0..A4)");
}

std::string config_to_json(const RunConfig& cfg) {
    ordered_json j;
    j["fv"] = cfg.fv;
    j["delta_s"] = cfg.delta_s;
    j["lambda"] = cfg.lambda;
    j["beta"] = cfg.beta;
    j["window"] = to_string(cfg.window);
    j["mode"] = to_string(cfg.mode);
    j["ablation"] = cfg.ablation;
    j["mouth_bank"] = cfg.mouth_bank;
    j["bbox_smooth"] = cfg.bbox_smooth;
    j["jaw_warp"] = cfg.jaw_warp;
    j["cheek_warp"] = cfg.cheek_warp;
    j["head_motion"] = to_string(cfg.head_motion);
    j["head_rotation_deg"] = cfg.head_rotation_deg;
    j["head_translation_px"] = cfg.head_translation_px;
    j["head_frequency_hz"] = cfg.head_frequency_hz;
    j["feather_px"] = cfg.feather_px;
    j["merge_adjacent"] = cfg.merge_adjacent;
    j["threads"] = cfg.threads;
    j["format"] = to_string(cfg.format);
    j["tol_ms"] = cfg.tol_ms;
    j["template"] = cfg.template_path.string();
    j["bank"] = cfg.bank_path.string();
    j["lexicon"] = cfg.lexicon_path.string();
    j["viseme_map"] = cfg.viseme_map;
    j["param_bank"] = cfg.param_bank_path.string();
    j["timing"] = cfg.timing_path.string();
    j["landmarks"] = cfg.landmarks_path.string();
    j["audio"] = cfg.audio_path.string();
    j["out_dir"] = cfg.out_dir.string();
    return j.dump(2);
}

const char* library_version() noexcept {
    return VEDICTHG_VERSION;
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) noexcept {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::input, "cannot open " + path.string());
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string RunManifest::to_json() const {
    ordered_json j;
    j["tool"] = "vedicthg";
    j["version"] = tool_version;
    j["config"] = ordered_json::parse(config_to_json(config));
    ordered_json in = ordered_json::object();
    for (const auto& [role, ph] : inputs) {
        in[role] = {{"path", ph.first}, {"fnv1a64", ph.second}};
    }
    j["inputs"] = in;
    j["frames"] = frame_count;
    j["width"] = width;
    j["height"] = height;
    j["roi_union"] = {roi_union.x0, roi_union.y0, roi_union.width, roi_union.height};
    j["frame_hashes"] = frame_hashes;
    j["warnings"] = warnings;
    ordered_json st = ordered_json::object();
    for (const auto& [k, v] : stage_ms) {
        st[k] = v;
    }
    j["stage_ms"] = st;
    return j.dump(2) + "\n";
}

ManifestView read_manifest(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_text(path));
        ManifestView v;
        v.frame_count = doc.at("frames").get<std::size_t>();
        const auto r = doc.at("roi_union").get<std::vector<int>>();
        if (r.size() != 4) {
            throw ConfigError("manifest roi_union needs 4 numbers");
        }
        v.roi_union = {r[0], r[1], r[2], r[3]};
        v.head_motion_on = doc.at("config").at("head_motion").get<std::string>() != "off";
        v.format = doc.at("config").at("format").get<std::string>();
        v.fv = doc.at("config").at("fv").get<double>();
        return v;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::input, "bad manifest " + path.string() + ": " + e.what());
    }
}

}  // namespace vthg
