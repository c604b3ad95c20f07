#include "test_support.hpp"
#include "vedicthg/geometry.hpp"
#include "vedicthg/image_io.hpp"
#include "vedicthg/raster.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace vthg;

TEST_CASE("pixel rects") {
    const PixelRect a{0, 0, 10, 10};
    const PixelRect b{5, 5, 10, 10};
    CHECK(a.intersect(b) == PixelRect{5, 5, 5, 5});
    CHECK(a.unite(b) == PixelRect{0, 0, 15, 15});
    CHECK(a.intersect(PixelRect{20, 20, 2, 2}).empty());
    CHECK(PixelRect{}.unite(b) == b);
    CHECK(b.unite(PixelRect{}) == b);
    CHECK(a.area() == 100);
    CHECK(a.contains(9, 9));
    CHECK_FALSE(a.contains(10, 0));
}

TEST_CASE("quantize") {
    CHECK(quantize_channel(0.5f) == 0);
    CHECK(quantize_channel(1.5f) == 2);
    CHECK(quantize_channel(2.5f) == 2);
    CHECK(quantize_channel(254.6f) == 255);
    CHECK(quantize_channel(300.0f) == 255);
    CHECK(quantize_channel(-4.0f) == 0);
}

TEST_CASE("affine transforms") {
    const auto r = AffineTransform::rotation_about({10, 20}, std::numbers::pi / 2, 1.0, 0.0);
    const auto p = r.apply({11, 20});
    CHECK(p.x == doctest::Approx(11.0));
    CHECK(p.y == doctest::Approx(21.0));
    const auto inv = r.inverse();
    REQUIRE(inv);
    CHECK(inv->compose(r).max_abs_diff(AffineTransform::identity()) < 1e-12);
    CHECK(AffineTransform::identity().is_identity());
    CHECK_FALSE(AffineTransform::translation(0.5, 0).is_identity());
    AffineTransform singular{1, 2, 0, 2, 4, 0};
    CHECK_FALSE(singular.inverse());
}

TEST_CASE("affine and similarity fits recover known maps") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-50, 50);
    const AffineTransform truth{1.1, 0.2, 3.0, -0.1, 0.9, -4.0};
    std::vector<Point2> src, dst;
    for (int i = 0; i < 12; ++i) {
        src.push_back({u(rng), u(rng)});
        dst.push_back(truth.apply(src.back()));
    }
    const auto fit = fit_affine(src, dst);
    REQUIRE(fit);
    CHECK(fit->max_abs_diff(truth) < 1e-9);

    const auto sim_truth = AffineTransform::rotation_about({0, 0}, 0.05, 2.0, -1.0);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = sim_truth.apply(src[i]);
    const auto sim = fit_similarity(src, dst);
    REQUIRE(sim);
    CHECK(sim->max_abs_diff(sim_truth) < 1e-9);

    const std::vector<Point2> collinear{{0, 0}, {1, 1}, {2, 2}};
    CHECK_FALSE(fit_affine(collinear, collinear));
}

TEST_CASE("polygons") {
    const Polygon square{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
    CHECK(is_simple_polygon(square));
    const Polygon bowtie{{0, 0}, {10, 10}, {10, 0}, {0, 10}};
    CHECK_FALSE(is_simple_polygon(bowtie));
    CHECK(point_in_polygon(square, {5, 5}));
    CHECK_FALSE(point_in_polygon(square, {15, 5}));
    CHECK(signed_distance(square, {5, 3}) == doctest::Approx(3.0));
    CHECK(signed_distance(square, {13, 5}) == doctest::Approx(-3.0));
    CHECK(distance_to_boundary(square, {5, 5}) == doctest::Approx(5.0));
    const auto c = centroid(square);
    CHECK(c.x == 5.0);
    CHECK(c.y == 5.0);
}

TEST_CASE("png round trip") {
    RgbImage img(17, 9);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 17; ++x)
            for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = static_cast<std::uint8_t>((x * 13 + y * 7 + ch * 50) & 0xff);
    const auto path = std::filesystem::temp_directory_path() / "vedicthg_rt.png";
    write_png(path, img);
    CHECK(read_png_rgb(path) == img);
    const auto rgba = read_png_rgba(path);
    CHECK(rgba.at(3, 4, 3) == 255);
    CHECK(rgba.at(3, 4, 1) == img.at(3, 4, 1));
    std::filesystem::remove(path);
    CHECK_THROWS(read_png_rgb(std::filesystem::temp_directory_path() / "vedicthg_missing.png"));
}

TEST_CASE("y4m stream layout") {
    RgbImage img(4, 2, 128);
    std::ostringstream out;
    Y4mWriter w(out, 4, 2, 30.0);
    w.write_frame(img);
    w.write_frame(img);
    const auto s = out.str();
    CHECK(s.rfind("YUV4MPEG2 W4 H2 F30:1", 0) == 0);
    const auto header = s.find('\n') + 1;
    CHECK(s.size() == header + 2 * (6 + 4 * 2 * 3));
    CHECK(w.frames_written() == 2);
    CHECK(y4m_frame_rate(30000.0 / 1001.0) == std::pair<long, long>{30000, 1001});
    CHECK(y4m_frame_rate(29.97) == std::pair<long, long>{29970, 1000});
    CHECK_THROWS(w.write_frame(RgbImage(2, 2)));
}
