#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace vthg {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

// Axis-aligned box by centre and size, in pixels.
struct BBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;

    double left() const noexcept { return cx - 0.5 * w; }
    double top() const noexcept { return cy - 0.5 * h; }
    double right() const noexcept { return cx + 0.5 * w; }
    double bottom() const noexcept { return cy + 0.5 * h; }

    friend bool operator==(const BBox&, const BBox&) = default;
};

// x' = a x + b y + tx,  y' = c x + d y + ty.
struct AffineTransform {
    double a = 1.0, b = 0.0, tx = 0.0;
    double c = 0.0, d = 1.0, ty = 0.0;

    static AffineTransform identity() noexcept { return {}; }
    static AffineTransform translation(double dx, double dy) noexcept;
    // Rotation by angle_rad about a pivot, then translation.
    static AffineTransform rotation_about(Point2 pivot, double angle_rad, double dx = 0.0,
                                          double dy = 0.0) noexcept;

    Point2 apply(Point2 p) const noexcept { return {a * p.x + b * p.y + tx, c * p.x + d * p.y + ty}; }
    double determinant() const noexcept { return a * d - b * c; }
    bool is_identity() const noexcept;
    std::optional<AffineTransform> inverse() const noexcept;
    // (this * other)(p) == this->apply(other.apply(p))
    AffineTransform compose(const AffineTransform& other) const noexcept;
    double max_abs_diff(const AffineTransform& o) const noexcept;

    friend bool operator==(const AffineTransform&, const AffineTransform&) = default;
};

// Least-squares affine map src -> dst (>= 3 non-collinear pairs).
std::optional<AffineTransform> fit_affine(std::span<const Point2> src, std::span<const Point2> dst);

// Least-squares similarity (rotation, uniform scale, translation) src -> dst.
std::optional<AffineTransform> fit_similarity(std::span<const Point2> src, std::span<const Point2> dst);

using Polygon = std::vector<Point2>;

bool is_simple_polygon(std::span<const Point2> polygon);
bool point_in_polygon(std::span<const Point2> polygon, Point2 p) noexcept;  // even-odd
double distance_to_boundary(std::span<const Point2> polygon, Point2 p) noexcept;
// Positive inside, negative outside.
double signed_distance(std::span<const Point2> polygon, Point2 p) noexcept;
Point2 centroid(std::span<const Point2> points) noexcept;

}  // namespace vthg
