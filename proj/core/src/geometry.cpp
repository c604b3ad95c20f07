#include "vedicthg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vthg {

namespace {

double cross(Point2 o, Point2 a, Point2 b) noexcept {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(Point2 p, Point2 q, Point2 r) noexcept {
    return std::min(p.x, r.x) <= q.x && q.x <= std::max(p.x, r.x) && std::min(p.y, r.y) <= q.y &&
           q.y <= std::max(p.y, r.y);
}

int orientation(Point2 p, Point2 q, Point2 r) noexcept {
    const double v = cross(p, q, r);
    if (v == 0.0) {
        return 0;
    }
    return v > 0.0 ? 1 : 2;
}

bool segments_intersect(Point2 p1, Point2 q1, Point2 p2, Point2 q2) noexcept {
    const int o1 = orientation(p1, q1, p2);
    const int o2 = orientation(p1, q1, q2);
    const int o3 = orientation(p2, q2, p1);
    const int o4 = orientation(p2, q2, q1);
    if (o1 != o2 && o3 != o4) {
        return true;
    }
    return (o1 == 0 && on_segment(p1, p2, q1)) || (o2 == 0 && on_segment(p1, q2, q1)) ||
           (o3 == 0 && on_segment(p2, p1, q2)) || (o4 == 0 && on_segment(p2, q1, q2));
}

double segment_distance(Point2 p, Point2 a, Point2 b) noexcept {
    const double vx = b.x - a.x;
    const double vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double u = 0.0;
    if (len2 > 0.0) {
        u = std::clamp(((p.x - a.x) * vx + (p.y - a.y) * vy) / len2, 0.0, 1.0);
    }
    const double dx = a.x + u * vx - p.x;
    const double dy = a.y + u * vy - p.y;
    return std::sqrt(dx * dx + dy * dy);
}

// Solves the 3x3 system m * x = r by Cramer's rule.
std::optional<std::array<double, 3>> solve3(const std::array<std::array<double, 3>, 3>& m,
                                            const std::array<double, 3>& r) {
    auto det3 = [](const std::array<std::array<double, 3>, 3>& a) {
        return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
               a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
               a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    };
    const double det = det3(m);
    double scale = 0.0;
    for (const auto& row : m) {
        for (double v : row) {
            scale = std::max(scale, std::abs(v));
        }
    }
    if (scale == 0.0 || std::abs(det) <= 1e-12 * scale * scale * scale) {
        return std::nullopt;
    }
    std::array<double, 3> x{};
    for (int col = 0; col < 3; ++col) {
        auto mc = m;
        for (int row = 0; row < 3; ++row) {
            mc[row][col] = r[row];
        }
        x[col] = det3(mc) / det;
    }
    return x;
}

}  // namespace

AffineTransform AffineTransform::translation(double dx, double dy) noexcept {
    AffineTransform t;
    t.tx = dx;
    t.ty = dy;
    return t;
}

AffineTransform AffineTransform::rotation_about(Point2 pivot, double angle_rad, double dx,
                                                double dy) noexcept {
    const double cs = std::cos(angle_rad);
    const double sn = std::sin(angle_rad);
    AffineTransform t;
    t.a = cs;
    t.b = -sn;
    t.c = sn;
    t.d = cs;
    t.tx = pivot.x - cs * pivot.x + sn * pivot.y + dx;
    t.ty = pivot.y - sn * pivot.x - cs * pivot.y + dy;
    return t;
}

bool AffineTransform::is_identity() const noexcept {
    return *this == AffineTransform{};
}

std::optional<AffineTransform> AffineTransform::inverse() const noexcept {
    const double det = determinant();
    if (!std::isfinite(det) || std::abs(det) < 1e-12) {
        return std::nullopt;
    }
    if (is_identity()) {
        return AffineTransform{};
    }
    AffineTransform inv;
    inv.a = d / det;
    inv.b = -b / det;
    inv.c = -c / det;
    inv.d = a / det;
    inv.tx = -(inv.a * tx + inv.b * ty);
    inv.ty = -(inv.c * tx + inv.d * ty);
    return inv;
}

AffineTransform AffineTransform::compose(const AffineTransform& o) const noexcept {
    AffineTransform r;
    r.a = a * o.a + b * o.c;
    r.b = a * o.b + b * o.d;
    r.tx = a * o.tx + b * o.ty + tx;
    r.c = c * o.a + d * o.c;
    r.d = c * o.b + d * o.d;
    r.ty = c * o.tx + d * o.ty + ty;
    return r;
}

double AffineTransform::max_abs_diff(const AffineTransform& o) const noexcept {
    return std::max({std::abs(a - o.a), std::abs(b - o.b), std::abs(tx - o.tx), std::abs(c - o.c),
                     std::abs(d - o.d), std::abs(ty - o.ty)});
}

std::optional<AffineTransform> fit_affine(std::span<const Point2> src, std::span<const Point2> dst) {
    if (src.size() != dst.size() || src.size() < 3) {
        return std::nullopt;
    }
    // Normal equations on centred coordinates for conditioning.
    const Point2 cs = centroid(src);
    const Point2 cd = centroid(dst);
    std::array<std::array<double, 3>, 3> m{};
    std::array<double, 3> rx{};
    std::array<double, 3> ry{};
    for (std::size_t i = 0; i < src.size(); ++i) {
        const std::array<double, 3> row{src[i].x - cs.x, src[i].y - cs.y, 1.0};
        const double ux = dst[i].x - cd.x;
        const double uy = dst[i].y - cd.y;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                m[r][c] += row[r] * row[c];
            }
            rx[r] += row[r] * ux;
            ry[r] += row[r] * uy;
        }
    }
    const auto sx = solve3(m, rx);
    const auto sy = solve3(m, ry);
    if (!sx || !sy) {
        return std::nullopt;
    }
    AffineTransform t;
    t.a = (*sx)[0];
    t.b = (*sx)[1];
    t.c = (*sy)[0];
    t.d = (*sy)[1];
    t.tx = cd.x + (*sx)[2] - (t.a * cs.x + t.b * cs.y);
    t.ty = cd.y + (*sy)[2] - (t.c * cs.x + t.d * cs.y);
    return t;
}

std::optional<AffineTransform> fit_similarity(std::span<const Point2> src, std::span<const Point2> dst) {
    if (src.size() != dst.size() || src.size() < 2) {
        return std::nullopt;
    }
    const Point2 cs = centroid(src);
    const Point2 cd = centroid(dst);
    double sxx = 0.0;  // sum <s, d>
    double sxy = 0.0;  // sum s x d
    double norm = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double px = src[i].x - cs.x;
        const double py = src[i].y - cs.y;
        const double qx = dst[i].x - cd.x;
        const double qy = dst[i].y - cd.y;
        sxx += px * qx + py * qy;
        sxy += px * qy - py * qx;
        norm += px * px + py * py;
    }
    if (norm <= 0.0) {
        return std::nullopt;
    }
    const double a = sxx / norm;  // s cos(theta)
    const double b = sxy / norm;  // s sin(theta)
    AffineTransform t;
    t.a = a;
    t.b = -b;
    t.c = b;
    t.d = a;
    t.tx = cd.x - (a * cs.x - b * cs.y);
    t.ty = cd.y - (b * cs.x + a * cs.y);
    return t;
}

bool is_simple_polygon(std::span<const Point2> polygon) {
    const std::size_t n = polygon.size();
    if (n < 3) {
        return false;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a1 = polygon[i];
        const Point2 a2 = polygon[(i + 1) % n];
        if (a1 == a2) {
            return false;
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            // Adjacent edges share exactly one vertex.
            if (j == i + 1 || (i == 0 && j == n - 1)) {
                continue;
            }
            if (segments_intersect(a1, a2, polygon[j], polygon[(j + 1) % n])) {
                return false;
            }
        }
    }
    return true;
}

bool point_in_polygon(std::span<const Point2> polygon, Point2 p) noexcept {
    bool inside = false;
    const std::size_t n = polygon.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2 a = polygon[i];
        const Point2 b = polygon[j];
        if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) {
            inside = !inside;
        }
    }
    return inside;
}

double distance_to_boundary(std::span<const Point2> polygon, Point2 p) noexcept {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = polygon.size();
    for (std::size_t i = 0; i < n; ++i) {
        best = std::min(best, segment_distance(p, polygon[i], polygon[(i + 1) % n]));
    }
    return best;
}

double signed_distance(std::span<const Point2> polygon, Point2 p) noexcept {
    const double d = distance_to_boundary(polygon, p);
    return point_in_polygon(polygon, p) ? d : -d;
}

Point2 centroid(std::span<const Point2> points) noexcept {
    Point2 c;
    if (points.empty()) {
        return c;
    }
    for (const auto& p : points) {
        c.x += p.x;
        c.y += p.y;
    }
    c.x /= static_cast<double>(points.size());
    c.y /= static_cast<double>(points.size());
    return c;
}

}  // namespace vthg
