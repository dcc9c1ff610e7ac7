#include "xwalk/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace xwalk {

namespace {

using Mat3 = std::array<double, 9>;

Mat3 multiply(const Mat3& a, const Mat3& b)
{
    Mat3 c{};
    for (int r = 0; r < 3; ++r)
        for (int k = 0; k < 3; ++k)
            for (int col = 0; col < 3; ++col) c[3 * r + col] += a[3 * r + k] * b[3 * k + col];
    return c;
}

double det3(const Mat3& m)
{
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Mat3 adjugate(const Mat3& m)
{
    return {m[4] * m[8] - m[5] * m[7], m[2] * m[7] - m[1] * m[8], m[1] * m[5] - m[2] * m[4],
            m[5] * m[6] - m[3] * m[8], m[0] * m[8] - m[2] * m[6], m[2] * m[3] - m[0] * m[5],
            m[3] * m[7] - m[4] * m[6], m[1] * m[6] - m[0] * m[7], m[0] * m[4] - m[1] * m[3]};
}

// Similarity taking the points' centroid to the origin and their mean distance to sqrt(2).
template <typename Pt>
Mat3 normalizing_transform(const std::array<Pt, 4>& pts)
{
    double cx = 0.0, cy = 0.0;
    for (const auto& p : pts) {
        cx += p.x;
        cy += p.y;
    }
    cx /= 4.0;
    cy /= 4.0;
    double mean = 0.0;
    for (const auto& p : pts) mean += std::hypot(p.x - cx, p.y - cy);
    mean /= 4.0;
    const double s = std::sqrt(2.0) / mean;
    return {s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1};
}

template <typename Pt>
Pt transform_point(const Mat3& t, const Pt& p)
{
    const double w = t[6] * p.x + t[7] * p.y + t[8];
    return {(t[0] * p.x + t[1] * p.y + t[2]) / w, (t[3] * p.x + t[4] * p.y + t[5]) / w};
}

double cross(double ax, double ay, double bx, double by, double cx, double cy)
{
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
}

template <typename Pt>
void check_points(const std::array<Pt, 4>& pts, const char* which)
{
    double scale = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j) scale = std::max(scale, std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y));
    const double eps = 1e-9 * std::max(scale, 1.0);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j)
            if (std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y) <= eps)
                throw GeometryError(GeometryError::Kind::degenerate_anchors,
                                    fmt::format("anchors[{}] and anchors[{}] coincide ({} points)", i, j, which));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j)
            for (std::size_t k = j + 1; k < 4; ++k) {
                const double c = cross(pts[i].x, pts[i].y, pts[j].x, pts[j].y, pts[k].x, pts[k].y);
                if (std::abs(c) <= eps * std::max(scale, 1.0))
                    throw GeometryError(GeometryError::Kind::degenerate_anchors,
                                        fmt::format("anchors[{}], anchors[{}] and anchors[{}] are collinear ({} points)",
                                                    i, j, k, which));
            }
}

} // namespace

Homography Homography::from_matrix(const std::array<double, 9>& m)
{
    Mat3 n = m;
    if (n[8] != 0.0) {
        const double s = n[8];
        for (double& v : n) v /= s;
    }
    if (!(std::abs(det3(n)) > 1e-12))
        throw GeometryError(GeometryError::Kind::singular_system,
                            fmt::format("homography is singular (det = {:.3g})", det3(n)));
    return Homography(n);
}

double Homography::determinant() const { return det3(m_); }

Homography Homography::inverse() const { return from_matrix(adjugate(m_)); }

void check_general_position(std::span<const AnchorPair, 4> anchors)
{
    std::array<ImagePoint, 4> src;
    std::array<OverheadPoint, 4> dst;
    for (std::size_t i = 0; i < 4; ++i) {
        src[i] = anchors[i].image;
        dst[i] = anchors[i].overhead;
    }
    check_points(src, "image");
    check_points(dst, "overhead");
}

Homography estimate_homography(std::span<const AnchorPair, 4> anchors)
{
    check_general_position(anchors);

    std::array<ImagePoint, 4> src;
    std::array<OverheadPoint, 4> dst;
    for (std::size_t i = 0; i < 4; ++i) {
        src[i] = anchors[i].image;
        dst[i] = anchors[i].overhead;
    }
    const Mat3 t_src = normalizing_transform(src);
    const Mat3 t_dst = normalizing_transform(dst);

    // Rows: h11 x + h12 y + h13 - u h31 x - u h32 y = u, and likewise for v.
    double a[8][9] = {};
    for (std::size_t i = 0; i < 4; ++i) {
        const ImagePoint p = transform_point(t_src, src[i]);
        const OverheadPoint q = transform_point(t_dst, dst[i]);
        double* ru = a[2 * i];
        double* rv = a[2 * i + 1];
        ru[0] = p.x; ru[1] = p.y; ru[2] = 1; ru[6] = -q.x * p.x; ru[7] = -q.x * p.y; ru[8] = q.x;
        rv[3] = p.x; rv[4] = p.y; rv[5] = 1; rv[6] = -q.y * p.x; rv[7] = -q.y * p.y; rv[8] = q.y;
    }

    double max_pivot = 0.0;
    double min_pivot = std::numeric_limits<double>::infinity();
    for (int col = 0; col < 8; ++col) {
        int best = col;
        for (int r = col + 1; r < 8; ++r)
            if (std::abs(a[r][col]) > std::abs(a[best][col])) best = r;
        if (best != col)
            for (int c = 0; c < 9; ++c) std::swap(a[col][c], a[best][c]);
        const double pivot = a[col][col];
        max_pivot = std::max(max_pivot, std::abs(pivot));
        min_pivot = std::min(min_pivot, std::abs(pivot));
        if (std::abs(pivot) < 1e-12) {
            throw GeometryError(GeometryError::Kind::singular_system,
                                fmt::format("anchor system is singular at column {} (pivot {:.3g}, "
                                            "pivot ratio {:.3g})", col, pivot,
                                            max_pivot / std::max(std::abs(pivot), 1e-300)));
        }
        for (int r = col + 1; r < 8; ++r) {
            const double f = a[r][col] / pivot;
            if (f == 0.0) continue;
            for (int c = col; c < 9; ++c) a[r][c] -= f * a[col][c];
        }
    }
    double h[8];
    for (int r = 7; r >= 0; --r) {
        double s = a[r][8];
        for (int c = r + 1; c < 8; ++c) s -= a[r][c] * h[c];
        h[r] = s / a[r][r];
    }

    const Mat3 hn = {h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0};
    const Homography result = Homography::from_matrix(multiply(adjugate(t_dst), multiply(hn, t_src)));

    const double residual = max_anchor_residual(result, anchors);
    if (!(residual <= kAnchorTolerancePx)) {
        throw GeometryError(GeometryError::Kind::singular_system,
                            fmt::format("anchor residual {:.3g} px exceeds tolerance (pivot ratio {:.3g})",
                                        residual, max_pivot / min_pivot));
    }
    return result;
}

OverheadPoint project(const Homography& h, const ImagePoint& p)
{
    const double w = h(2, 0) * p.x + h(2, 1) * p.y + h(2, 2);
    if (std::abs(w) < 1e-12)
        throw GeometryError(GeometryError::Kind::point_at_infinity,
                            fmt::format("({}, {}) maps to infinity", p.x, p.y));
    return {(h(0, 0) * p.x + h(0, 1) * p.y + h(0, 2)) / w, (h(1, 0) * p.x + h(1, 1) * p.y + h(1, 2)) / w};
}

ImagePoint project_inverse(const Homography& h_inv, const OverheadPoint& p)
{
    const OverheadPoint q = project(h_inv, ImagePoint{p.x, p.y});
    return {q.x, q.y};
}

double max_anchor_residual(const Homography& h, std::span<const AnchorPair, 4> anchors)
{
    double worst = 0.0;
    for (const auto& a : anchors) worst = std::max(worst, distance(project(h, a.image), a.overhead));
    return worst;
}

// ---- contact points --------------------------------------------------------

namespace {

// Lowest (max y) vertex, smallest x on ties.
bool lower(const ImagePoint& a, const ImagePoint& b)
{
    return a.y > b.y || (a.y == b.y && a.x < b.x);
}

} // namespace

ContactPoint pedestrian_contact_point(const Detection& d)
{
    if (d.mask.empty()) return {d.bbox.bottom_center(), true};

    const double cx = d.bbox.center_x();
    const ImagePoint* left = nullptr;
    const ImagePoint* right = nullptr;
    for (const auto& v : d.mask) {
        const ImagePoint*& slot = v.x < cx ? left : right;
        if (!slot || lower(v, *slot)) slot = &v;
    }
    if (left && right) return {{0.5 * (left->x + right->x), 0.5 * (left->y + right->y)}, false};
    return {left ? *left : *right, false};
}

ContactPoint vehicle_contact_point(const Detection& d, const LaneAxis& axis, double leading_fraction)
{
    const double len = distance(axis.from, axis.to);
    const double dx = (axis.to.x - axis.from.x) / len;
    const double dy = (axis.to.y - axis.from.y) / len;

    if (d.mask.empty()) {
        // Leave the bbox centre along the travel direction.
        const double cx = d.bbox.center_x();
        const double cy = 0.5 * (d.bbox.y_min + d.bbox.y_max);
        double t = std::numeric_limits<double>::infinity();
        if (dx != 0.0) t = std::min(t, 0.5 * (d.bbox.x_max - d.bbox.x_min) / std::abs(dx));
        if (dy != 0.0) t = std::min(t, 0.5 * (d.bbox.y_max - d.bbox.y_min) / std::abs(dy));
        return {{cx + t * dx, cy + t * dy}, true};
    }

    auto along = [&](const ImagePoint& p) { return p.x * dx + p.y * dy; };
    double s_min = std::numeric_limits<double>::infinity();
    double s_max = -s_min;
    for (const ImagePoint corner : {ImagePoint{d.bbox.x_min, d.bbox.y_min}, ImagePoint{d.bbox.x_max, d.bbox.y_min},
                                    ImagePoint{d.bbox.x_max, d.bbox.y_max}, ImagePoint{d.bbox.x_min, d.bbox.y_max}}) {
        s_min = std::min(s_min, along(corner));
        s_max = std::max(s_max, along(corner));
    }
    const double window = s_max - leading_fraction * (s_max - s_min);

    // Mask vertices inside the leading window; if none reach it, the most leading vertices.
    std::vector<ImagePoint> candidates;
    for (const auto& v : d.mask)
        if (along(v) >= window) candidates.push_back(v);
    if (candidates.empty()) {
        double lead = -std::numeric_limits<double>::infinity();
        for (const auto& v : d.mask) lead = std::max(lead, along(v));
        for (const auto& v : d.mask)
            if (along(v) == lead) candidates.push_back(v);
    }

    auto off_axis = [&](const ImagePoint& p) {
        return std::abs((p.x - axis.from.x) * dy - (p.y - axis.from.y) * dx);
    };
    const ImagePoint* best = &candidates.front();
    for (const auto& v : candidates) {
        const double dv = off_axis(v), db = off_axis(*best);
        if (dv < db || (dv == db && (v.x < best->x || (v.x == best->x && v.y < best->y)))) best = &v;
    }
    const double t = (best->x - axis.from.x) * dx + (best->y - axis.from.y) * dy;
    return {{axis.from.x + t * dx, axis.from.y + t * dy}, false};
}

ResolvedContact resolve_contact_point(const Detection& d, const SceneConfig& cfg)
{
    if (d.contact) return {{*d.contact, false}, false};
    if (d.cls == ObjectClass::pedestrian) return {pedestrian_contact_point(d), false};
    if (cfg.lane_axes.empty()) return {{d.bbox.bottom_center(), true}, true};

    const ImagePoint ref = d.bbox.bottom_center();
    const LaneAxis* nearest = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& ax : cfg.lane_axes) {
        const double len = distance(ax.from, ax.to);
        const double off = std::abs((ref.x - ax.from.x) * (ax.to.y - ax.from.y) -
                                    (ref.y - ax.from.y) * (ax.to.x - ax.from.x)) / len;
        if (off < best) {
            best = off;
            nearest = &ax;
        }
    }
    return {vehicle_contact_point(d, *nearest, cfg.leading_fraction), false};
}

} // namespace xwalk
