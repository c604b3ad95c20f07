// vedicthg: phoneme timing -> viseme trajectory -> 2D talking-head frames.

#include "vedicthg/image_io.hpp"
#include "vedicthg/pipeline.hpp"
#include "vedicthg/runtime_bench.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace vthg;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kInput = 3, kPipeline = 4 };

struct Flags {
    std::optional<std::string> config;
    std::optional<double> fv, delta_ms, lambda, beta, feather, tol_ms;
    std::optional<std::string> window, blend, ablation, head, format;
    std::optional<std::string> timing, lexicon, tmpl, bank, viseme_map, param_bank, landmarks, audio, out;
    std::optional<unsigned> threads;
    bool no_vedic = false;
    bool merge = false;
};

void add_run_flags(CLI::App* app, Flags& f, bool mode_is_blend) {
    app->add_option("--config", f.config, "JSON config file (flags override it)");
    app->add_option("--fv", f.fv, "output frame rate (default 30)");
    app->add_option("--delta-ms", f.delta_ms, "dominance ramp width in ms (default 40)");
    app->add_option("--lambda", f.lambda, "cross-term strength (default 0.2)");
    app->add_option("--beta", f.beta, "ROI EMA coefficient (default 0.85)");
    app->add_option("--window", f.window, "dominance ramp shape")->check(CLI::IsMember({"tri", "cos"}));
    if (mode_is_blend) {
        app->add_option("--mode,--blend", f.blend, "blend path")->check(CLI::IsMember({"vedic", "dominance"}));
    } else {
        app->add_option("--blend", f.blend, "blend path")->check(CLI::IsMember({"vedic", "dominance"}));
    }
    app->add_flag("--no-vedic", f.no_vedic, "use the full dominance blend");
    app->add_option("--ablation", f.ablation, "feature preset")->check(CLI::IsMember({"A0", "A1", "A2", "A3", "A4"}));
    app->add_option("--head", f.head, "head motion")->check(CLI::IsMember({"off", "synth", "tracked"}));
    app->add_option("--feather", f.feather, "mask feather radius in px (default 2)");
    app->add_option("--out", f.out, "output directory");
    app->add_option("--format", f.format, "frame output")->check(CLI::IsMember({"png", "y4m"}));
    app->add_option("--timing", f.timing, "phoneme alignment or word timing JSON");
    app->add_option("--lexicon", f.lexicon, "CMUdict-format lexicon (for word timings)");
    app->add_option("--template", f.tmpl, "template manifest (default: built-in face)");
    app->add_option("--bank", f.bank, "mouth bank manifest (default: built-in patches)");
    app->add_option("--viseme-map", f.viseme_map, "phoneme->viseme table (default: builtin:jeffers)");
    app->add_option("--param-bank", f.param_bank, "viseme rig parameters JSON");
    app->add_option("--landmarks", f.landmarks, "per-frame landmark track JSON");
    app->add_option("--audio", f.audio, "WAV file, used only to cross-check duration");
    app->add_flag("--merge", f.merge, "coalesce adjacent identical visemes");
    app->add_option("--threads", f.threads, "renderer threads (0 = auto)");
    app->add_option("--tol-ms", f.tol_ms, "sync tolerance in ms (default 40)");
}

RunConfig resolve_config(const Flags& f) {
    RunConfig cfg;
    if (f.config) {
        cfg = load_config_file(cfg, *f.config);
    }
    if (f.fv) cfg.fv = *f.fv;
    if (f.delta_ms) cfg.delta_s = *f.delta_ms / 1000.0;
    if (f.lambda) cfg.lambda = *f.lambda;
    if (f.beta) cfg.beta = *f.beta;
    if (f.feather) cfg.feather_px = *f.feather;
    if (f.tol_ms) cfg.tol_ms = *f.tol_ms;
    if (f.window) cfg.window = parse_window_shape(*f.window);
    if (f.blend) cfg.mode = parse_blend_mode(*f.blend);
    if (f.no_vedic) cfg.mode = BlendMode::dominance_weighted;
    if (f.format) cfg.format = parse_output_format(*f.format);
    if (f.threads) cfg.threads = *f.threads;
    if (f.merge) cfg.merge_adjacent = true;
    if (f.timing) cfg.timing_path = *f.timing;
    if (f.lexicon) cfg.lexicon_path = *f.lexicon;
    if (f.tmpl) cfg.template_path = *f.tmpl;
    if (f.bank) cfg.bank_path = *f.bank;
    if (f.viseme_map) cfg.viseme_map = *f.viseme_map;
    if (f.param_bank) cfg.param_bank_path = *f.param_bank;
    if (f.landmarks) cfg.landmarks_path = *f.landmarks;
    if (f.audio) cfg.audio_path = *f.audio;
    if (f.out) cfg.out_dir = *f.out;
    if (f.ablation) cfg.ablation = *f.ablation;
    // A preset fixes the feature toggles; an explicit --head still wins.
    if (!cfg.ablation.empty()) apply_ablation(cfg, cfg.ablation);
    if (f.head) cfg.head_motion = parse_head_motion(*f.head);
    return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text) || !out.flush()) {
        throw Error(ErrorKind::input, "cannot write " + path.string());
    }
}

std::string frame_name(std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%06zu.png", k);
    return buf;
}

PhonemeStream load_stream(const RunConfig& cfg, const Assets& assets, double* ms = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    auto stream = in_stage("timing", [&] {
        const auto src = read_timing(cfg.timing_path);
        return resolve_timing(src, assets.lexicon ? &*assets.lexicon : nullptr);
    });
    if (ms) *ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return stream;
}

void hash_input(RunManifest& m, const char* role, const fs::path& p) {
    if (p.empty()) {
        m.inputs[role] = {"builtin", "builtin"};
    } else {
        m.inputs[role] = {p.string(), hex64(fnv1a64_file(p))};
    }
}

int cmd_synth(const RunConfig& cfg) {
    cfg.validate();
    const Assets assets = in_stage("assets", [&] { return load_assets(cfg); });
    double timing_ms = 0.0;
    const PhonemeStream stream = load_stream(cfg, assets, &timing_ms);

    RunManifest manifest;
    if (!cfg.audio_path.empty()) {
        const double audio_s = in_stage("audio", [&] { return wav_duration_s(cfg.audio_path); });
        if (std::abs(audio_s - stream.total_duration_s()) > 0.050) {
            char msg[160];
            std::snprintf(msg, sizeof msg, "audio lasts %.3f s but the timing covers %.3f s", audio_s,
                          stream.total_duration_s());
            std::cerr << "warning: " << msg << '\n';
            manifest.warnings.push_back(msg);
        }
    }

    fs::create_directories(cfg.out_dir);
    const fs::path frames_dir = cfg.out_dir / "frames";
    std::ofstream y4m_file;
    std::optional<Y4mWriter> y4m;
    if (cfg.format == OutputFormat::png) {
        fs::create_directories(frames_dir);
    } else {
        y4m_file.open(cfg.out_dir / "video.y4m", std::ios::binary);
        if (!y4m_file) {
            throw Error(ErrorKind::input, "cannot write " + (cfg.out_dir / "video.y4m").string());
        }
        y4m.emplace(y4m_file, assets.tmpl.image.width(), assets.tmpl.image.height(), cfg.fv);
    }

    auto result = synthesize(cfg, assets, stream, [&](const RenderedFrame& f) {
        if (y4m) {
            y4m->write_frame(f.image);
        } else {
            write_png(frames_dir / frame_name(f.index), f.image);
        }
    });
    if (y4m) {
        y4m_file.flush();
        if (!y4m_file) {
            throw StageError("io", Error(ErrorKind::input, "failed writing video.y4m"));
        }
    }
    result.times.timing = timing_ms;

    write_file(cfg.out_dir / "trajectory.tsv", export_trajectory(result.plan.trajectory));
    write_file(cfg.out_dir / "alignment.json", serialize_alignment(stream));

    manifest.tool_version = library_version();
    manifest.config = cfg;
    hash_input(manifest, "timing", cfg.timing_path);
    hash_input(manifest, "lexicon", cfg.lexicon_path);
    hash_input(manifest, "template", cfg.template_path);
    hash_input(manifest, "bank", cfg.bank_path);
    hash_input(manifest, "param_bank", cfg.param_bank_path);
    hash_input(manifest, "landmarks", cfg.landmarks_path);
    const bool builtin_map = cfg.viseme_map == "builtin:jeffers" || cfg.viseme_map == "jeffers";
    hash_input(manifest, "viseme_map", builtin_map ? fs::path{} : fs::path{cfg.viseme_map});
    manifest.frame_count = result.frame_count;
    manifest.width = assets.tmpl.image.width();
    manifest.height = assets.tmpl.image.height();
    manifest.roi_union = result.roi_union;
    for (auto h : result.frame_hashes) {
        manifest.frame_hashes.push_back(hex64(h));
    }
    manifest.stage_ms = result.times.as_map();
    for (const auto& w : result.plan.trajectory.warnings) {
        std::cerr << "warning: " << w << '\n';
        manifest.warnings.push_back(w);
    }
    write_file(cfg.out_dir / "manifest.json", manifest.to_json());

    std::printf("synth: %zu phonemes, %zu frames at %g fps (%dx%d) -> %s\n", stream.size(), result.frame_count,
                cfg.fv, manifest.width, manifest.height, cfg.out_dir.string().c_str());
    for (const auto& [k, v] : manifest.stage_ms) {
        std::printf("  %-10s %9.2f ms\n", k.c_str(), v);
    }
    return kOk;
}

int cmd_bench(const RunConfig& cfg, const std::string& mode, int repeats, int warmups) {
    cfg.validate();
    const Assets assets = in_stage("assets", [&] { return load_assets(cfg); });
    const TimingSource timing = in_stage("timing", [&] { return read_timing(cfg.timing_path); });
    BenchOptions opts;
    opts.mode = parse_bench_mode(mode);
    opts.repeats = repeats;
    opts.warmups = warmups;
    const auto report = runtime_bench(cfg, assets, timing, opts);

    fs::create_directories(cfg.out_dir);
    const std::string name = std::string("bench_") + (opts.mode == BenchMode::render_only ? "render_only" : "end_to_end") +
                             "_" + to_string(cfg.mode) + ".json";
    write_file(cfg.out_dir / name, report.to_json());
    std::fputs(report.summary().c_str(), stdout);
    if (opts.mode == BenchMode::render_only) {
        std::puts("reference (render-only): 26.67 ms/frame, 37.5 FPS, 29.25% peak CPU");
    } else {
        std::puts("reference (end-to-end): 63.51 ms/frame full system, 71.84 ms/frame without cross term");
    }
    std::printf("report: %s\n", (cfg.out_dir / name).string().c_str());
    return kOk;
}

nlohmann::ordered_json sync_json(const SyncReport& r) {
    nlohmann::ordered_json j;
    j["tolerance_ms"] = r.tolerance_ms;
    j["events"] = r.errors_ms.size();
    j["fraction_within_tol"] = r.fraction_within_tol;
    j["max_error_ms"] = r.max_error_ms();
    j["unmatched"] = r.unmatched;
    nlohmann::ordered_json errs = nlohmann::ordered_json::array();
    for (double e : r.errors_ms) {
        errs.push_back(std::isinf(e) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(e));
    }
    j["errors_ms"] = errs;
    return j;
}

int cmd_metrics(const Flags& flags, const fs::path& run_dir, const std::optional<std::string>& embeddings) {
    const fs::path manifest_path = run_dir / "manifest.json";
    if (!fs::is_regular_file(manifest_path)) {
        throw ConfigError("no manifest.json in " + run_dir.string() + " (run synth first)");
    }
    const ManifestView view = read_manifest(manifest_path);

    // The synth run's resolved config, then any flags given here.
    std::ifstream min(manifest_path);
    const auto doc = nlohmann::json::parse(min);
    Flags f = flags;
    RunConfig cfg = merge_config_json(RunConfig{}, doc.at("config").dump());
    cfg.ablation.clear();
    if (f.config) {
        cfg = load_config_file(cfg, *f.config);
        f.config.reset();
    }
    {
        // Reuse the flag overlay without re-reading defaults.
        RunConfig overlay = resolve_config(f);
        if (f.tol_ms) cfg.tol_ms = overlay.tol_ms;
        if (f.timing) cfg.timing_path = overlay.timing_path;
        if (f.lexicon) cfg.lexicon_path = overlay.lexicon_path;
    }
    const fs::path out_dir = f.out ? fs::path(*f.out) : run_dir;
    cfg.validate();

    const Assets assets = in_stage("assets", [&] { return load_assets(cfg); });
    const PhonemeStream stream = load_stream(cfg, assets);
    const Plan plan = make_plan(cfg, assets, stream);

    const auto sync = sync_accuracy(stream, assets.map, plan.trajectory, cfg.tol_ms);
    const auto sync_sched = sync_accuracy(stream, assets.map, plan.schedule, cfg.tol_ms);
    fs::create_directories(out_dir);
    export_cdf(sync, out_dir / "cdf.txt");
    nlohmann::ordered_json sj;
    sj["trajectory"] = sync_json(sync);
    sj["schedule"] = sync_json(sync_sched);
    write_file(out_dir / "sync_report.json", sj.dump(2) + "\n");

    if (view.format != "png") {
        throw ConfigError("frame metrics need a PNG frame sequence (synth --format png)");
    }
    std::vector<RgbImage> frames;
    frames.reserve(view.frame_count);
    in_stage("io", [&] {
        for (std::size_t k = 0; k < view.frame_count; ++k) {
            frames.push_back(read_png_rgb(run_dir / "frames" / frame_name(k)));
        }
    });

    nlohmann::ordered_json stab;
    const PixelRect roi = flicker_roi(assets.tmpl);
    stab["flicker_roi"] = {roi.x0, roi.y0, roi.width, roi.height};
    if (frames.size() >= 2) {
        const auto fl = flicker(frames, roi);
        stab["mean_l1_flicker"] = fl.mean_l1_flicker;
        stab["per_pair_l1"] = fl.per_pair_l1;
    }
    if (view.head_motion_on) {
        stab["identity_outside_roi"] = "skipped: head motion on";
    } else {
        const PixelRect rects[1] = {view.roi_union};
        const auto mask = rect_mask(assets.tmpl.image.width(), assets.tmpl.image.height(), rects);
        stab["identity_outside_roi"] = identity_outside_roi(frames, assets.tmpl.image, mask);
    }
    if (embeddings) {
        std::ifstream ein(*embeddings);
        if (!ein) {
            throw Error(ErrorKind::input, "cannot open " + *embeddings);
        }
        std::stringstream ss;
        ss << ein.rdbuf();
        const auto vecs = parse_embeddings(ss.str());
        stab["identity_drift"] = identity_drift(vecs);
    }
    write_file(out_dir / "stability_report.json", stab.dump(2) + "\n");

    std::printf("sync (frames):   %zu events, max |err| %.3f ms, within +-%g ms: %.4f\n", sync.errors_ms.size(),
                sync.max_error_ms(), cfg.tol_ms, sync.fraction_within_tol);
    std::printf("sync (schedule): max |err| %.3f ms, within: %.4f\n", sync_sched.max_error_ms(),
                sync_sched.fraction_within_tol);
    if (stab.contains("mean_l1_flicker")) {
        std::printf("mean_l1_flicker: %.4f\n", stab["mean_l1_flicker"].get<double>());
    }
    std::printf("identity_outside_roi: %s\n", stab["identity_outside_roi"].dump().c_str());
    std::printf("reports: %s\n", out_dir.string().c_str());
    return kOk;
}

int cmd_ablate(const RunConfig& base, double jitter, std::uint64_t seed) {
    base.validate();
    Assets assets = in_stage("assets", [&] { return load_assets(base); });
    const PhonemeStream stream = load_stream(base, assets);
    if (jitter > 0.0 && !assets.track) {
        const std::size_t n = frame_count(stream.total_duration_s(), base.fv);
        assets.track = make_jitter_track(assets.tmpl, n, jitter, seed);
    }
    const auto rows = run_ablation(base, assets, stream);
    const auto table = format_ablation_table(rows);
    fs::create_directories(base.out_dir);
    write_file(base.out_dir / "ablation.txt", table);
    std::fputs(table.c_str(), stdout);
    return kOk;
}

int cmd_validate(const RunConfig& cfg) {
    cfg.validate(false);
    const Assets assets = in_stage("assets", [&] { return load_assets(cfg); });
    std::printf("config ok; template %dx%d, %zu landmarks, %zu visemes\n", assets.tmpl.image.width(),
                assets.tmpl.image.height(), assets.tmpl.landmarks.size(), assets.map.inventory().size());
    if (!cfg.timing_path.empty()) {
        const auto stream = load_stream(cfg, assets);
        const auto schedule = in_stage("scheduling", [&] {
            return map_phonemes_to_visemes(stream, assets.map, assets.params, cfg.merge_adjacent,
                                           UnknownPhoneme::reject);
        });
        std::printf("timing ok; %zu phonemes, %zu viseme events, %.3f s\n", stream.size(), schedule.events().size(),
                    stream.total_duration_s());
    }
    return kOk;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return kConfig;
        case ErrorKind::input: return kInput;
        case ErrorKind::pipeline: return kPipeline;
    }
    return kPipeline;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vedicthg: lightweight 2D talking-head synthesis from phoneme timings"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(library_version()));

    Flags synth_f, bench_f, metrics_f, ablate_f, validate_f;
    auto* synth = app.add_subcommand("synth", "render frames, trajectory and manifest");
    add_run_flags(synth, synth_f, true);

    auto* bench = app.add_subcommand("bench", "latency / FPS / CPU benchmark");
    add_run_flags(bench, bench_f, false);
    std::string bench_mode = "render-only";
    int repeats = 3;
    int warmups = 1;
    bench->add_option("--mode", bench_mode, "what to time")->check(CLI::IsMember({"render-only", "end-to-end"}));
    bench->add_option("--repeats", repeats, "measured repeats (averaged)");
    bench->add_option("--warmups", warmups, "unmeasured warm-up runs");

    auto* metrics = app.add_subcommand("metrics", "sync, CDF, flicker and identity reports for a synth run");
    add_run_flags(metrics, metrics_f, true);
    std::string run_dir;
    std::optional<std::string> embeddings;
    metrics->add_option("--frames", run_dir, "synth output directory")->required();
    metrics->add_option("--embeddings", embeddings, "externally computed face embeddings, one per line");

    auto* ablate = app.add_subcommand("ablate", "run variants A0..A4 and tabulate");
    add_run_flags(ablate, ablate_f, true);
    double jitter = 0.0;
    std::uint64_t seed = 7;
    ablate->add_option("--jitter", jitter, "Gaussian landmark jitter sigma in px (0 = none)");
    ablate->add_option("--seed", seed, "jitter RNG seed");

    auto* validate = app.add_subcommand("validate", "check config and assets");
    add_run_flags(validate, validate_f, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*synth) return cmd_synth(resolve_config(synth_f));
        if (*bench) return cmd_bench(resolve_config(bench_f), bench_mode, repeats, warmups);
        if (*metrics) return cmd_metrics(metrics_f, run_dir, embeddings);
        if (*ablate) return cmd_ablate(resolve_config(ablate_f), jitter, seed);
        if (*validate) return cmd_validate(resolve_config(validate_f));
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kPipeline;
    }
    return kOk;
}
