#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

namespace coopsim {

inline constexpr double kPi = std::numbers::pi;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Vec2&) const = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline Vec2 rotate(Vec2 v, double ang) {
    const double c = std::cos(ang), s = std::sin(ang);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Normalize to (-pi, pi].
inline double normalize_angle(double a) {
    double r = std::remainder(a, 2.0 * kPi);
    if (r <= -kPi) r += 2.0 * kPi;
    return r;
}

// Signed smallest rotation from b to a, in (-pi, pi].
inline double angle_diff(double a, double b) { return normalize_angle(a - b); }

struct Pose2D {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;  // radians, kept in (-pi, pi]

    Vec2 position() const { return {x, y}; }
    bool operator==(const Pose2D&) const = default;
};

// Compose: apply local offset in the frame of `base`.
inline Pose2D compose(const Pose2D& base, const Pose2D& offset) {
    const Vec2 p = rotate({offset.x, offset.y}, base.yaw);
    return {base.x + p.x, base.y + p.y, normalize_angle(base.yaw + offset.yaw)};
}

// Oriented rectangle: center, half extents along local x/y, yaw.
// Doubles as the detection bounding-box type.
struct OrientedBox {
    Vec2 center{};
    Vec2 half{};  // half.x along heading, half.y across
    double yaw = 0.0;

    bool operator==(const OrientedBox&) const = default;

    std::array<Vec2, 4> corners() const {
        const double c = std::cos(yaw), s = std::sin(yaw);
        const Vec2 ex{c * half.x, s * half.x};
        const Vec2 ey{-s * half.y, c * half.y};
        // counter-clockwise
        return {center + ex + ey, center - ex + ey, center - ex - ey, center + ex - ey};
    }

    double area() const { return 4.0 * half.x * half.y; }

    // Strict interior test.
    bool contains_strict(Vec2 p) const {
        const Vec2 d = rotate(p - center, -yaw);
        return std::abs(d.x) < half.x && std::abs(d.y) < half.y;
    }

    // Closed containment.
    bool contains(Vec2 p) const {
        const Vec2 d = rotate(p - center, -yaw);
        return std::abs(d.x) <= half.x && std::abs(d.y) <= half.y;
    }
};

namespace detail {

inline std::pair<double, double> project_onto(const std::array<Vec2, 4>& pts, Vec2 axis) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Vec2& p : pts) {
        const double v = dot(p, axis);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo, hi};
}

}  // namespace detail

// Separating-axis test. Touching boundaries count as intersecting, which is
// what both the spawn overlap rule and the collision rule want.
inline bool boxes_intersect(const OrientedBox& a, const OrientedBox& b) {
    const auto ca = a.corners();
    const auto cb = b.corners();
    const std::array<Vec2, 4> axes = {
        Vec2{std::cos(a.yaw), std::sin(a.yaw)},
        Vec2{-std::sin(a.yaw), std::cos(a.yaw)},
        Vec2{std::cos(b.yaw), std::sin(b.yaw)},
        Vec2{-std::sin(b.yaw), std::cos(b.yaw)},
    };
    for (const Vec2& ax : axes) {
        const auto [alo, ahi] = detail::project_onto(ca, ax);
        const auto [blo, bhi] = detail::project_onto(cb, ax);
        if (ahi < blo || bhi < alo) return false;
    }
    return true;
}

// Does the open segment (p0, p1) pass through the open interior of the box?
// Endpoint contact and boundary grazing (corner or edge-collinear) do not
// count: sightlines are blocked only by crossing solid interior.
inline bool segment_crosses_interior(Vec2 p0, Vec2 p1, const OrientedBox& box) {
    // Work in box frame, where the box is axis-aligned at the origin.
    const Vec2 a = rotate(p0 - box.center, -box.yaw);
    const Vec2 b = rotate(p1 - box.center, -box.yaw);
    const Vec2 d = b - a;

    // Liang-Barsky clip of the closed segment against the closed box.
    double tmin = 0.0, tmax = 1.0;
    const double lo[2] = {-box.half.x, -box.half.y};
    const double hi[2] = {box.half.x, box.half.y};
    const double pos[2] = {a.x, a.y};
    const double dir[2] = {d.x, d.y};
    for (int i = 0; i < 2; ++i) {
        if (dir[i] == 0.0) {
            if (pos[i] < lo[i] || pos[i] > hi[i]) return false;
        } else {
            double t0 = (lo[i] - pos[i]) / dir[i];
            double t1 = (hi[i] - pos[i]) / dir[i];
            if (t0 > t1) std::swap(t0, t1);
            tmin = std::max(tmin, t0);
            tmax = std::min(tmax, t1);
            if (tmin > tmax) return false;
        }
    }
    if (!(tmax > tmin)) return false;  // single-point graze
    // Positive-length overlap with the closed box. Decide interior vs
    // boundary-only (edge-collinear runs) at the midpoint, exactly.
    const double tm = 0.5 * (tmin + tmax);
    const Vec2 m{a.x + tm * d.x, a.y + tm * d.y};
    return std::abs(m.x) < box.half.x && std::abs(m.y) < box.half.y;
}

// --- convex polygon helpers (intersection area, distances) ---

using Polygon = std::vector<Vec2>;  // counter-clockwise

inline double polygon_area(const Polygon& poly) {
    if (poly.size() < 3) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % poly.size()];
        s += cross(p, q);
    }
    return 0.5 * std::abs(s);
}

// Sutherland-Hodgman: clip `subject` by the half-plane left of (e0 -> e1).
inline Polygon clip_halfplane(const Polygon& subject, Vec2 e0, Vec2 e1) {
    Polygon out;
    const std::size_t n = subject.size();
    if (n == 0) return out;
    out.reserve(n + 1);
    const Vec2 edge = e1 - e0;
    auto side = [&](Vec2 p) { return cross(edge, p - e0); };  // >= 0 is inside
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 cur = subject[i];
        const Vec2 nxt = subject[(i + 1) % n];
        const double sc = side(cur);
        const double sn = side(nxt);
        if (sc >= 0.0) {
            out.push_back(cur);
            if (sn < 0.0) {
                const double t = sc / (sc - sn);
                out.push_back(cur + (nxt - cur) * t);
            }
        } else if (sn >= 0.0) {
            const double t = sc / (sc - sn);
            out.push_back(cur + (nxt - cur) * t);
        }
    }
    return out;
}

inline double intersection_area(const OrientedBox& a, const OrientedBox& b) {
    const auto ca = a.corners();
    const auto cb = b.corners();
    Polygon poly(ca.begin(), ca.end());
    for (int i = 0; i < 4 && !poly.empty(); ++i) {
        poly = clip_halfplane(poly, cb[i], cb[(i + 1) % 4]);
    }
    return polygon_area(poly);
}

// Intersection over union of two oriented boxes. Identical boxes give exactly
// 1.0: every vertex sits on the clip boundary and survives unchanged, and the
// union below measures the inputs with the same shoelace as the intersection,
// so the ratio collapses to area/area with no rounding in between.
inline double oriented_iou(const OrientedBox& a, const OrientedBox& b) {
    const double inter = intersection_area(a, b);
    if (inter <= 0.0) return 0.0;
    const auto ca = a.corners();
    const auto cb = b.corners();
    const double area_a = polygon_area(Polygon(ca.begin(), ca.end()));
    const double area_b = polygon_area(Polygon(cb.begin(), cb.end()));
    const double uni = area_a + (area_b - inter);
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) return distance(p, a);
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return distance(p, a + ab * t);
}

// Minimum distance between two box boundaries; 0 if the boxes touch or
// overlap. For disjoint convex shapes the minimum is attained at a vertex of
// one against an edge of the other.
inline double box_gap(const OrientedBox& a, const OrientedBox& b) {
    if (boxes_intersect(a, b)) return 0.0;
    const auto ca = a.corners();
    const auto cb = b.corners();
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            const Vec2 e0 = cb[j], e1 = cb[(j + 1) % 4];
            best = std::min(best, point_segment_distance(ca[i], e0, e1));
            const Vec2 f0 = ca[j], f1 = ca[(j + 1) % 4];
            best = std::min(best, point_segment_distance(cb[i], f0, f1));
        }
    }
    return best;
}

// Axis-aligned rectangle, used for spawn regions and trigger zones.
struct Aabb {
    Vec2 min{};
    Vec2 max{};

    bool operator==(const Aabb&) const = default;
    bool contains(Vec2 p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
    }
    Vec2 center() const { return {(min.x + max.x) / 2.0, (min.y + max.y) / 2.0}; }
};

// Nearest point on a polyline plus the arc length at that point.
struct PolylineProjection {
    Vec2 point{};
    double arc = 0.0;       // arc length from polyline start
    double lateral = 0.0;   // signed offset, left of travel direction positive
    double heading = 0.0;   // tangent heading at the projection
    std::size_t segment = 0;
};

inline PolylineProjection project_onto_polyline(const std::vector<Vec2>& pts, Vec2 p) {
    PolylineProjection best;
    double best_d = std::numeric_limits<double>::infinity();
    double arc_before = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const Vec2 a = pts[i], b = pts[i + 1];
        const Vec2 ab = b - a;
        const double len = norm(ab);
        if (len == 0.0) continue;
        const double t = std::clamp(dot(p - a, ab) / (len * len), 0.0, 1.0);
        const Vec2 q = a + ab * t;
        const double d = distance(p, q);
        if (d < best_d) {
            best_d = d;
            best.point = q;
            best.arc = arc_before + t * len;
            best.heading = std::atan2(ab.y, ab.x);
            best.lateral = cross(ab * (1.0 / len), p - q) >= 0.0 ? d : -d;
            best.segment = i;
        }
        arc_before += len;
    }
    return best;
}

inline double polyline_length(const std::vector<Vec2>& pts) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) s += distance(pts[i], pts[i + 1]);
    return s;
}

// Point at arc length s, clamped to the polyline ends.
inline Vec2 polyline_point(const std::vector<Vec2>& pts, double s, double* heading_out = nullptr) {
    if (pts.empty()) return {};
    if (pts.size() == 1 || s <= 0.0) {
        if (heading_out && pts.size() > 1) {
            const Vec2 d = pts[1] - pts[0];
            *heading_out = std::atan2(d.y, d.x);
        }
        return pts.front();
    }
    double remaining = s;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const Vec2 a = pts[i], b = pts[i + 1];
        const double len = distance(a, b);
        if (remaining <= len || i + 2 == pts.size()) {
            const double t = len > 0.0 ? std::min(remaining / len, 1.0) : 0.0;
            if (heading_out) {
                const Vec2 d = b - a;
                *heading_out = std::atan2(d.y, d.x);
            }
            return a + (b - a) * t;
        }
        remaining -= len;
    }
    return pts.back();
}

}  // namespace coopsim
