#include "vedicthg/coarticulation.hpp"
#include "vedicthg/pipeline.hpp"
#include "vedicthg/renderer.hpp"
#include "vedicthg/sample_assets.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace vthg;

namespace {

VisemeSchedule random_schedule(double seconds) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> len(0.04, 0.4);
    const auto map = VisemeMap::builtin_jeffers();
    const auto bank = ParamBank::builtin_default();
    std::uniform_int_distribution<std::uint16_t> pick(1, static_cast<std::uint16_t>(bank.inventory().size() - 1));
    std::vector<VisemeEvent> events;
    for (double t = 0.0; t < seconds;) {
        const double e = t + len(rng);
        events.push_back({VisemeId{pick(rng)}, t, e});
        t = e;
    }
    return VisemeSchedule::create(std::move(events), bank);
}

void BM_Blend(benchmark::State& state) {
    const auto s = random_schedule(60.0);
    const BlendConfig blend{0.2, state.range(0) == 0 ? BlendMode::vedic_pairwise : BlendMode::dominance_weighted};
    std::size_t frames = 0;
    for (auto _ : state) {
        auto traj = sample_trajectory(s, 30.0, WindowConfig{}, blend);
        frames += traj.size();
        benchmark::DoNotOptimize(traj.samples.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(frames));
    state.SetLabel(state.range(0) == 0 ? "vedic" : "dominance");
}
BENCHMARK(BM_Blend)->Arg(0)->Arg(1);

void BM_VedicKernel(benchmark::State& state) {
    VisemeParams a, c;
    for (std::size_t i = 0; i < kRigDim; ++i) {
        a[i] = 0.1 * i;
        c[i] = 0.9 - 0.1 * i;
    }
    double alpha = 0.0;
    for (auto _ : state) {
        alpha = alpha > 1.0 ? 0.0 : alpha + 1e-3;
        benchmark::DoNotOptimize(vedic_blend(a, c, alpha, 0.2));
    }
}
BENCHMARK(BM_VedicKernel);

void BM_RenderFrame(benchmark::State& state) {
    const auto params = ParamBank::builtin_default();
    const auto tmpl = make_sample_template(static_cast<int>(state.range(0)));
    const auto bank = make_sample_mouth_bank(params, static_cast<int>(state.range(0)));
    const RenderContext ctx(tmpl, bank, RoiConfig{});
    const auto id = params.inventory().id("OPEN_VOWEL");
    const FrameInput in{0, 0.0, params.at(id), id, ctx.template_mouth_box};
    for (auto _ : state) {
        auto f = render_frame(ctx, in);
        benchmark::DoNotOptimize(f.image.data().data());
    }
}
BENCHMARK(BM_RenderFrame)->Arg(256)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
