#include "vedicthg/runtime_bench.hpp"

#include "vedicthg/image_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <ctime>
#include <mutex>
#include <thread>

namespace vthg {

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

void check_duration(const PhonemeStream& stream) {
    if (!(stream.total_duration_s() >= 1.0)) {
        throw ValidationError(ValidationError::Reason::out_of_range, 0,
                              "benchmark input must cover at least 1 s");
    }
}

RepeatStats finish(double wall_ms, std::size_t frames, std::vector<double> frame_ms, double cpu,
                   const StageTimes& st) {
    RepeatStats r;
    const double n = static_cast<double>(frames);
    r.latency_mean_ms = wall_ms / n;
    r.latency_p95_ms = percentile(std::move(frame_ms), 0.95);
    r.fps = 1000.0 * n / wall_ms;
    r.peak_cpu_percent = cpu;
    for (const auto& [k, v] : st.as_map()) {
        r.stage_ms_per_frame[k] = v / n;
    }
    return r;
}

RepeatStats run_render_only(const RunConfig& cfg, const Assets& assets, const Plan& plan, unsigned threads,
                            double sample_hz) {
    const RenderContext ctx(assets.tmpl, assets.bank, cfg.roi_config());
    std::vector<double> frame_ms;
    frame_ms.reserve(plan.inputs.size());
    CpuSampler sampler(sample_hz);
    const auto t0 = Clock::now();
    render_sequence(ctx, plan.inputs, threads, [&](RenderedFrame&& f) { frame_ms.push_back(f.render_ms); });
    const double wall = ms_between(t0, Clock::now());
    const double cpu = sampler.stop();
    StageTimes st;
    st.rendering = wall;
    return finish(wall, plan.inputs.size(), std::move(frame_ms), cpu, st);
}

RepeatStats run_end_to_end(const RunConfig& cfg, const Assets& assets, const TimingSource& timing,
                           unsigned threads, double sample_hz) {
    StageTimes st;
    const Lexicon* lexicon = assets.lexicon ? &*assets.lexicon : nullptr;
    std::vector<double> frame_ms;
    CpuSampler sampler(sample_hz);
    const auto t0 = Clock::now();

    const PhonemeStream stream = in_stage("timing", [&] { return resolve_timing(timing, lexicon); });
    st.timing = ms_between(t0, Clock::now());
    const Plan plan = make_plan(cfg, assets, stream, &st);
    const RenderContext ctx(assets.tmpl, assets.bank, cfg.roi_config());

    // Per-frame latency: interval between consecutive frame deliveries, the
    // first one carrying the up-front stages.
    frame_ms.reserve(plan.inputs.size());
    auto last = t0;
    double io = 0.0;
    std::size_t encoded_bytes = 0;
    const auto r0 = Clock::now();
    render_sequence(ctx, plan.inputs, threads, [&](RenderedFrame&& f) {
        const auto e0 = Clock::now();
        encoded_bytes += encode_png(f.image).size();
        const auto e1 = Clock::now();
        io += ms_between(e0, e1);
        frame_ms.push_back(ms_between(last, e1));
        last = e1;
    });
    const auto end = Clock::now();
    st.rendering += ms_between(r0, end) - io;
    st.io = io;
    const double cpu = sampler.stop();
    if (encoded_bytes == 0) {
        throw PipelineError("io", "no frames were encoded");
    }
    return finish(ms_between(t0, end), plan.inputs.size(), std::move(frame_ms), cpu, st);
}

}  // namespace

BenchMode parse_bench_mode(std::string_view name) {
    if (name == "render-only" || name == "render_only") {
        return BenchMode::render_only;
    }
    if (name == "end-to-end" || name == "end_to_end") {
        return BenchMode::end_to_end;
    }
    throw ConfigError("unknown bench mode '" + std::string(name) + "'");
}

const char* to_string(BenchMode mode) noexcept {
    return mode == BenchMode::render_only ? "render-only" : "end-to-end";
}

double process_cpu_seconds() noexcept {
    timespec ts{};
    clock_gettime(CLOCK_PROCESS_CPUTIME_ID, &ts);
    return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

struct CpuSampler::Impl {
    std::mutex m;
    std::condition_variable cv;
    bool stopping = false;
    double peak = 0.0;
    double cpu0 = 0.0;
    Clock::time_point wall0;
    std::thread worker;
};

CpuSampler::CpuSampler(double hz) : impl_(new Impl) {
    const auto period = std::chrono::duration<double>(1.0 / std::max(hz, 1.0));
    impl_->cpu0 = process_cpu_seconds();
    impl_->wall0 = Clock::now();
    impl_->worker = std::thread([this, period] {
        double cpu_prev = impl_->cpu0;
        auto wall_prev = impl_->wall0;
        std::unique_lock lock(impl_->m);
        while (!impl_->cv.wait_for(lock, period, [this] { return impl_->stopping; })) {
            const double cpu = process_cpu_seconds();
            const auto wall = Clock::now();
            const double dt = std::chrono::duration<double>(wall - wall_prev).count();
            if (dt > 0.0) {
                impl_->peak = std::max(impl_->peak, 100.0 * (cpu - cpu_prev) / dt);
            }
            cpu_prev = cpu;
            wall_prev = wall;
        }
    });
}

CpuSampler::~CpuSampler() {
    stop();
    delete impl_;
}

double CpuSampler::stop() {
    {
        std::lock_guard lock(impl_->m);
        impl_->stopping = true;
    }
    impl_->cv.notify_all();
    if (impl_->worker.joinable()) {
        impl_->worker.join();
        const double dt = std::chrono::duration<double>(Clock::now() - impl_->wall0).count();
        if (impl_->peak == 0.0 && dt > 0.0) {
            impl_->peak = 100.0 * (process_cpu_seconds() - impl_->cpu0) / dt;
        }
    }
    return impl_->peak;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) {
        return 0.0;
    }
    std::sort(values.begin(), values.end());
    // Nearest-rank.
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
    return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

RuntimeReport runtime_bench(const RunConfig& cfg, const Assets& assets, const TimingSource& timing,
                            const BenchOptions& opts) {
    if (opts.repeats < 1 || opts.warmups < 0) {
        throw ConfigError("bench needs repeats >= 1 and warmups >= 0");
    }
    const Lexicon* lexicon = assets.lexicon ? &*assets.lexicon : nullptr;
    const PhonemeStream stream = in_stage("timing", [&] { return resolve_timing(timing, lexicon); });
    check_duration(stream);

    RuntimeReport report;
    report.mode = opts.mode;
    report.width = assets.tmpl.image.width();
    report.height = assets.tmpl.image.height();
    report.threads = resolve_thread_count(cfg.threads);
    report.blend_mode = to_string(cfg.mode);

    const Plan plan = make_plan(cfg, assets, stream);
    report.frames = plan.inputs.size();

    auto once = [&] {
        return opts.mode == BenchMode::render_only
                   ? run_render_only(cfg, assets, plan, report.threads, opts.sample_hz)
                   : run_end_to_end(cfg, assets, timing, report.threads, opts.sample_hz);
    };
    for (int i = 0; i < opts.warmups; ++i) {
        once();
    }
    for (int i = 0; i < opts.repeats; ++i) {
        report.repeats.push_back(once());
    }

    const double n = static_cast<double>(report.repeats.size());
    for (const auto& r : report.repeats) {
        report.mean.latency_mean_ms += r.latency_mean_ms / n;
        report.mean.latency_p95_ms += r.latency_p95_ms / n;
        report.mean.peak_cpu_percent += r.peak_cpu_percent / n;
        for (const auto& [k, v] : r.stage_ms_per_frame) {
            report.mean.stage_ms_per_frame[k] += v / n;
        }
    }
    report.mean.fps = 1000.0 / report.mean.latency_mean_ms;
    return report;
}

std::string RuntimeReport::to_json() const {
    using ordered_json = nlohmann::ordered_json;
    auto stats = [](const RepeatStats& r) {
        ordered_json j;
        j["latency_ms_per_frame"] = {{"mean", r.latency_mean_ms}, {"p95", r.latency_p95_ms}};
        j["fps"] = r.fps;
        j["peak_cpu_percent"] = r.peak_cpu_percent;
        ordered_json st = ordered_json::object();
        for (const auto& [k, v] : r.stage_ms_per_frame) {
            st[k] = v;
        }
        j["stage_ms_per_frame"] = st;
        return j;
    };
    ordered_json j;
    j["mode"] = to_string(mode);
    j["resolution"] = {width, height};
    j["frames"] = frames;
    j["threads"] = threads;
    j["blend_mode"] = blend_mode;
    j["mean"] = stats(mean);
    ordered_json reps = ordered_json::array();
    for (const auto& r : repeats) {
        reps.push_back(stats(r));
    }
    j["repeats"] = reps;
    return j.dump(2) + "\n";
}

std::string RuntimeReport::summary() const {
    std::string out;
    char line[200];
    std::snprintf(line, sizeof line, "mode %s  %dx%d  frames %zu  threads %u  blend %s  repeats %zu\n",
                  to_string(mode), width, height, frames, threads, blend_mode.c_str(), repeats.size());
    out += line;
    std::snprintf(line, sizeof line, "%-12s %10s %10s %9s %9s\n", "", "mean_ms", "p95_ms", "fps", "cpu_%");
    out += line;
    for (std::size_t i = 0; i < repeats.size(); ++i) {
        const auto& r = repeats[i];
        std::snprintf(line, sizeof line, "repeat %-5zu %10.3f %10.3f %9.2f %9.2f\n", i + 1, r.latency_mean_ms,
                      r.latency_p95_ms, r.fps, r.peak_cpu_percent);
        out += line;
    }
    std::snprintf(line, sizeof line, "%-12s %10.3f %10.3f %9.2f %9.2f\n", "mean", mean.latency_mean_ms,
                  mean.latency_p95_ms, mean.fps, mean.peak_cpu_percent);
    out += line;
    out += "stage ms/frame:";
    for (const auto& [k, v] : mean.stage_ms_per_frame) {
        std::snprintf(line, sizeof line, " %s=%.4f", k.c_str(), v);
        out += line;
    }
    out += "\n";
    return out;
}

}  // namespace vthg
