#include "test_support.hpp"
#include "vedicthg/coarticulation.hpp"
#include "vedicthg/error.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace vthg;

namespace {

// Independent evaluation of the dominance window and the normalized blend.
double oracle_weight(double s, double e, double t, double d, WindowShape shape) {
    double u;
    if (t <= s - d || t >= e + d) return 0.0;
    if (t < s) u = (t - (s - d)) / d;
    else if (t > e) u = ((e + d) - t) / d;
    else return 1.0;
    return shape == WindowShape::triangular ? u : 0.5 * (1.0 - std::cos(std::numbers::pi * u));
}

VisemeParams oracle_blend(const VisemeSchedule& s, double t, double d, WindowShape shape) {
    double wsum = 0.0;
    std::array<double, kRigDim> acc{};
    for (const auto& ev : s.events()) {
        const double w = oracle_weight(ev.start_s, ev.end_s, t, d, shape);
        wsum += w;
        const auto& m = s.bank().at(ev.viseme);
        for (std::size_t i = 0; i < kRigDim; ++i) acc[i] += w * m[i];
    }
    VisemeParams y;
    for (std::size_t i = 0; i < kRigDim; ++i) y[i] = acc[i] / wsum;
    return y;
}

double max_abs_diff(const VisemeParams& a, const VisemeParams& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < kRigDim; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

ParamBank two_class_bank() {
    VisemeInventory inv({"NEUTRAL", "A", "C"});
    VisemeParams a, c;
    for (std::size_t i = 0; i < kRigDim; ++i) {
        a[i] = 0.2;
        c[i] = 0.8;
    }
    return ParamBank(inv, {VisemeParams{}, a, c});
}

}  // namespace

TEST_CASE("dominance weight") {
    const VisemeEvent ev{VisemeId{1}, 1.0, 2.0};
    const WindowConfig tri{0.04, WindowShape::triangular};
    const WindowConfig cos{0.04, WindowShape::raised_cosine};
    CHECK(dominance_weight(ev, 1.0, tri) == 1.0);
    CHECK(dominance_weight(ev, 1.5, tri) == 1.0);
    CHECK(dominance_weight(ev, 2.0, tri) == 1.0);
    CHECK(dominance_weight(ev, 1.0 - 0.04, tri) == 0.0);
    CHECK(dominance_weight(ev, 2.0 + 0.04, tri) == 0.0);
    CHECK(dominance_weight(ev, 0.5, tri) == 0.0);
    CHECK(dominance_weight(ev, 1.0 - 0.02, tri) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(dominance_weight(ev, 1.0 - 0.02, cos) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(dominance_weight(ev, 2.0 + 0.01, cos) == doctest::Approx(oracle_weight(1, 2, 2.01, 0.04, WindowShape::raised_cosine)));
    CHECK_THROWS_AS((WindowConfig{0.0}).validate(), ConfigError);
    CHECK_THROWS_AS((BlendConfig{-0.1}).validate(), ConfigError);
}

TEST_CASE("dominance blend") {
    const WindowConfig tri{0.04, WindowShape::triangular};
    SUBCASE("single event interior") {
        const auto s = test::make_schedule({{"OPEN_VOWEL", 0.0, 1.0}});
        CHECK(blend_at(s, 0.5, tri) == s.bank().at(s.events()[0].viseme));
    }
    SUBCASE("symmetric average") {
        const auto s = test::make_schedule({{"A", 0.0, 0.5}, {"C", 0.5, 1.0}}, two_class_bank());
        // Both weights are 1 on the shared boundary.
        const auto y = blend_at(s, 0.5, tri);
        for (std::size_t i = 0; i < kRigDim; ++i) CHECK(y[i] == doctest::Approx(0.5));
    }
    SUBCASE("three overlapping events match the oracle") {
        const auto s = test::make_schedule({{"BILABIAL", 0.0, 0.05}, {"OPEN_VOWEL", 0.05, 0.08}, {"ROUNDED", 0.08, 0.2}});
        for (double t : {0.03, 0.06, 0.07, 0.081, 0.1}) {
            CHECK(max_abs_diff(blend_at(s, t, tri), oracle_blend(s, t, 0.04, WindowShape::triangular)) < 1e-12);
        }
        const WindowConfig cos{0.04, WindowShape::raised_cosine};
        CHECK(max_abs_diff(blend_at(s, 0.07, cos), oracle_blend(s, 0.07, 0.04, WindowShape::raised_cosine)) < 1e-12);
    }
    SUBCASE("outside all supports gives NEUTRAL") {
        const auto s = test::make_schedule({{"OPEN_VOWEL", 1.0, 2.0}});
        CHECK(blend_at(s, 0.1, tri) == VisemeParams{});
    }
}

TEST_CASE("transition phase") {
    const VisemeEvent a{VisemeId{1}, 0.0, 0.5};
    const VisemeEvent c{VisemeId{2}, 0.5, 1.0};
    for (auto shape : {WindowShape::triangular, WindowShape::raised_cosine}) {
        const WindowConfig w{0.04, shape};
        CHECK(transition_phase(a, c, 0.5 - 0.04, w) == 0.0);
        CHECK(transition_phase(a, c, 0.3, w) == 0.0);
        CHECK(transition_phase(a, c, 0.5, w) == 0.5);
        CHECK(transition_phase(a, c, 0.5 + 0.04, w) == 1.0);
        CHECK(transition_phase(a, c, 0.9, w) == 1.0);
        double prev = 0.0;
        for (int i = 0; i <= 1000; ++i) {
            const double t = 0.45 + 0.1 * i / 1000.0;
            const double alpha = transition_phase(a, c, t, w);
            CHECK(alpha >= prev);
            CHECK(alpha >= 0.0);
            CHECK(alpha <= 1.0);
            prev = alpha;
        }
    }
    const VisemeEvent far{VisemeId{2}, 0.6, 1.0};
    CHECK_THROWS(transition_phase(a, far, 0.5, WindowConfig{}));
}

TEST_CASE("vedic blend") {
    const std::vector<double> a{2.0}, c{4.0};
    CHECK(vedic_blend(a, c, 0.5, 0.2)[0] == doctest::Approx(3.4).epsilon(1e-15));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> x(8), y(8);
        for (auto& v : x) v = u(rng);
        for (auto& v : y) v = u(rng);
        const double lambda = std::abs(u(rng));
        CHECK(vedic_blend(x, y, 0.0, lambda) == x);
        CHECK(vedic_blend(x, y, 1.0, lambda) == y);
        const double alpha = (u(rng) + 3.0) / 6.0;
        const auto lin = vedic_blend(x, y, alpha, 0.0);
        for (std::size_t k = 0; k < 8; ++k) CHECK(lin[k] == (1.0 - alpha) * x[k] + alpha * y[k]);
    }
    const std::vector<double> two{1.0, 2.0};
    CHECK_THROWS_AS(vedic_blend(a, two, 0.5, 0.2), ValidationError);
    const std::vector<double> nan{std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_AS(vedic_blend(nan, c, 0.5, 0.2), ValidationError);
}

TEST_CASE("sampling") {
    const WindowConfig w{0.04, WindowShape::triangular};
    const BlendConfig b{0.2, BlendMode::vedic_pairwise};
    SUBCASE("frame count") {
        CHECK(frame_count(1.0, 30.0) == 30);
        CHECK(frame_count(1.01, 30.0) == 31);
        CHECK(frame_count(0.1 * 3, 10.0) == 3);
    }
    SUBCASE("constant schedule") {
        const auto s = test::make_schedule({{"NEUTRAL", 0.0, 1.0}});
        const auto traj = sample_trajectory(s, 30.0, w, b);
        REQUIRE(traj.size() == 30);
        for (std::size_t k = 0; k < traj.size(); ++k) {
            CHECK(traj.samples[k].t == static_cast<double>(k) / 30.0);
            CHECK(traj.samples[k].y == VisemeParams{});
        }
    }
    SUBCASE("boundary sample equals the alpha = 0.5 blend") {
        const auto s = test::make_schedule({{"BILABIAL", 0.0, 0.5}, {"OPEN_VOWEL", 0.5, 1.0}});
        const auto traj = sample_trajectory(s, 30.0, w, b);
        const auto& ma = s.bank().at(s.events()[0].viseme);
        const auto& mc = s.bank().at(s.events()[1].viseme);
        VisemeParams hand;
        for (std::size_t i = 0; i < kRigDim; ++i) hand[i] = 0.5 * ma[i] + 0.5 * mc[i] + 0.2 * 0.25 * ma[i] * mc[i];
        CHECK(traj.samples[15].t == 0.5);
        CHECK(max_abs_diff(traj.samples[15].y, clamp_to_rig(hand)) < 1e-15);
        CHECK(traj.samples[15].dominant == s.events()[0].viseme);
        CHECK(traj.samples[16].dominant == s.events()[1].viseme);
    }
    SUBCASE("lambda = 0 is the two-term linear blend") {
        std::mt19937_64 rng(9);
        const auto map = VisemeMap::builtin_jeffers();
        const auto st = test::random_stream(rng, 6.0, 0.09, 0.4);
        const auto s = map_phonemes_to_visemes(st, map, ParamBank::builtin_default(), false);
        const auto traj = sample_trajectory(s, 30.0, w, BlendConfig{0.0, BlendMode::vedic_pairwise});
        CHECK(traj.fallback_samples == 0);
        const auto& ev = s.events();
        for (const auto& smp : traj.samples) {
            const auto i = *s.event_at(smp.t);
            VisemeParams lin = s.bank().at(ev[i].viseme);
            // The active transition (if any) is with the previous or next event.
            if (i > 0 && smp.t <= ev[i].start_s + w.delta_s) {
                const double alpha = transition_phase(ev[i - 1], ev[i], smp.t, w);
                const auto& a = s.bank().at(ev[i - 1].viseme);
                for (std::size_t k = 0; k < kRigDim; ++k) lin[k] = (1 - alpha) * a[k] + alpha * lin[k];
            } else if (i + 1 < ev.size() && smp.t >= ev[i].end_s - w.delta_s) {
                const double alpha = transition_phase(ev[i], ev[i + 1], smp.t, w);
                const auto& c = s.bank().at(ev[i + 1].viseme);
                for (std::size_t k = 0; k < kRigDim; ++k) lin[k] = (1 - alpha) * lin[k] + alpha * c[k];
            }
            CHECK(max_abs_diff(smp.y, clamp_to_rig(lin)) <= 4 * std::numeric_limits<double>::epsilon());
        }
    }
    SUBCASE("fallback on short events") {
        const auto s = test::make_schedule({{"BILABIAL", 0.0, 0.05}, {"OPEN_VOWEL", 0.05, 0.1}, {"ROUNDED", 0.1, 0.15}, {"NEUTRAL", 0.15, 0.3}});
        const auto traj = sample_trajectory(s, 200.0, WindowConfig{0.04}, b);
        CHECK(traj.fallback_samples > 0);
        CHECK_FALSE(traj.warnings.empty());
        const auto dom = sample_trajectory(s, 200.0, WindowConfig{0.04}, BlendConfig{0.2, BlendMode::dominance_weighted});
        CHECK(dom.warnings.empty());
    }
}

TEST_CASE("Lipschitz continuity of the vedic path") {
    std::mt19937_64 rng(21);
    const auto map = VisemeMap::builtin_jeffers();
    for (auto shape : {WindowShape::triangular, WindowShape::raised_cosine}) {
        for (int trial = 0; trial < 10; ++trial) {
            const auto st = test::random_stream(rng, 3.0, 0.085, 0.4);
            const auto s = map_phonemes_to_visemes(st, map, ParamBank::builtin_default(), false);
            const WindowConfig w{0.04, shape};
            const BlendConfig b{0.2, BlendMode::vedic_pairwise};
            const double fv = 1000.0;
            const auto traj = sample_trajectory(s, fv, w, b);
            const double bound = vedic_lipschitz_bound(s, w, b) / fv;
            double worst = 0.0;
            for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
                worst = std::max(worst, max_abs_diff(traj.samples[k + 1].y, traj.samples[k].y));
            }
            CHECK(worst <= bound + 1e-12);
        }
    }
}

TEST_CASE("clamping, determinism and export") {
    VisemeInventory inv({"NEUTRAL", "HI"});
    VisemeParams hi;
    hi.values = {1, 1, 1, 1, 1, 1, 1, 1};
    ParamBank bank(inv, {VisemeParams{}, hi});
    const auto s = VisemeSchedule::create({{VisemeId{1}, 0.0, 0.5}, {VisemeId{1}, 0.5, 1.0}}, bank);
    const auto traj = sample_trajectory(s, 30.0, WindowConfig{}, BlendConfig{5.0});
    for (const auto& smp : traj.samples) {
        for (std::size_t i = 0; i < kRigDim; ++i) {
            CHECK(smp.y[i] <= rig_ranges()[i].hi);
            CHECK(smp.y[i] >= rig_ranges()[i].lo);
        }
    }

    std::mt19937_64 rng(4);
    const auto st = test::random_stream(rng, 4.0);
    const auto sched = map_phonemes_to_visemes(st, VisemeMap::builtin_jeffers(), ParamBank::builtin_default(), false);
    for (auto mode : {BlendMode::vedic_pairwise, BlendMode::dominance_weighted}) {
        const auto t1 = sample_trajectory(sched, 30.0, WindowConfig{}, BlendConfig{0.2, mode});
        const auto t2 = sample_trajectory(sched, 30.0, WindowConfig{}, BlendConfig{0.2, mode});
        REQUIRE(t1.size() == t2.size());
        const auto text = export_trajectory(t1);
        const auto back = import_trajectory(text);
        REQUIRE(back.size() == t1.size());
        for (std::size_t k = 0; k < t1.size(); ++k) {
            CHECK(t1.samples[k].y == t2.samples[k].y);
            CHECK(back.samples[k].y == t1.samples[k].y);
            CHECK(back.samples[k].t == t1.samples[k].t);
            CHECK(back.samples[k].dominant == t1.samples[k].dominant);
        }
        CHECK(export_trajectory(back) == text);
        CHECK(back.window.delta_s == 0.04);
        CHECK(back.blend.lambda == 0.2);
        CHECK(back.blend.mode == mode);
    }
    CHECK_THROWS(import_trajectory("garbage\n"));
}
