#pragma once

#include <array>
#include <span>

#include "xwalk/ingest.hpp"
#include "xwalk/types.hpp"

namespace xwalk {

// 3x3 projective map from the image plane to the overhead plane, row-major.
// Stored normalized so that m(2,2) == 1 whenever it is nonzero.
class Homography {
public:
    Homography() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

    // Throws GeometryError(singular_system) when |det| <= 1e-12 after normalization.
    static Homography from_matrix(const std::array<double, 9>& m);

    double operator()(int r, int c) const { return m_[static_cast<std::size_t>(3 * r + c)]; }
    const std::array<double, 9>& matrix() const { return m_; }
    double determinant() const;
    Homography inverse() const;

private:
    explicit Homography(const std::array<double, 9>& m) : m_(m) {}
    std::array<double, 9> m_;
};

inline constexpr double kAnchorTolerancePx = 1e-6;

// Exact interpolation of four image -> overhead pairs by solving the 8x8 direct
// linear system with h33 fixed to 1.
Homography estimate_homography(std::span<const AnchorPair, 4> anchors);

// Throws GeometryError(degenerate_anchors) naming the anchors when three
// source (or destination) points are collinear or two coincide.
void check_general_position(std::span<const AnchorPair, 4> anchors);

// Throws GeometryError(point_at_infinity) when |w| < 1e-12.
OverheadPoint project(const Homography& h, const ImagePoint& p);
ImagePoint project_inverse(const Homography& h_inv, const OverheadPoint& p);

// Largest distance between a projected anchor and its overhead partner.
double max_anchor_residual(const Homography& h, std::span<const AnchorPair, 4> anchors);

struct ContactPoint {
    ImagePoint point;
    bool fallback = false;   // derived from the bbox rather than mask/contact
};

// Midpoint of the lowest mask vertex in each half of the bbox.
ContactPoint pedestrian_contact_point(const Detection& d);

// Mask vertex nearest the lane axis inside the leading `leading_fraction` of the
// bbox (along travel direction), projected onto the axis.
ContactPoint vehicle_contact_point(const Detection& d, const LaneAxis& axis,
                                   double leading_fraction = 0.25);

// Picks the contact rule for the detection's class. A precomputed contact wins;
// vehicles use the lane axis nearest their bbox bottom-center, or the bbox
// bottom-center when no axis is configured (`missing_axis` is set).
struct ResolvedContact {
    ContactPoint contact;
    bool missing_axis = false;
};
ResolvedContact resolve_contact_point(const Detection& d, const SceneConfig& cfg);

} // namespace xwalk
