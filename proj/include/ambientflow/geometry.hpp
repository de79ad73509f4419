#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ambientflow/vec2.hpp"

namespace ambientflow {

/// Ordered periodic vertex list of an embedded, counterclockwise planar curve.
///
/// `from_vertices` validates (N >= 8, finite, no coincident neighbours, simple)
/// and reverses clockwise input. `trusted` skips the O(N) simplicity sweep and
/// the orientation fix-up; the flow uses it between embeddedness checks.
class ClosedCurve {
public:
    static constexpr std::size_t kMinVertices = 8;

    static ClosedCurve from_vertices(std::vector<Point2> vertices);
    static ClosedCurve trusted(std::vector<Point2> vertices);

    std::span<const Point2> vertices() const { return vertices_; }
    std::size_t size() const { return vertices_.size(); }
    const Point2& operator[](std::size_t i) const { return vertices_[i]; }

    double min_edge_length() const;
    double max_edge_length() const;
    double max_radius() const;   ///< max |γ| over vertices
    double diameter() const;     ///< max pairwise vertex distance
    Point2 centroid() const;     ///< area centroid of the polygon

    ClosedCurve translated(const Vec2& offset) const;
    ClosedCurve rotated(double angle) const;  ///< about the origin
    ClosedCurve scaled(double factor) const;  ///< about the origin

private:
    explicit ClosedCurve(std::vector<Point2> v) : vertices_(std::move(v)) {}
    std::vector<Point2> vertices_;
};

/// Signed shoelace area; positive for counterclockwise vertex order.
double signed_area(std::span<const Point2> vertices);

/// True when no two non-adjacent edges intersect. Uses a uniform-grid sweep.
bool is_simple(std::span<const Point2> vertices);

/// Per-vertex discrete frame and curvature, plus global scalars.
struct CurveGeometry {
    std::vector<Vec2> tangent;    ///< unit bisector of adjacent edge directions
    std::vector<Vec2> normal;     ///< rot90(tangent), inward for CCW curves
    std::vector<double> curvature;
    std::vector<double> ds;       ///< mean of adjacent edge lengths
    std::vector<double> turning;  ///< signed exterior angle at each vertex
    double length = 0.0;
    double area = 0.0;
    double turning_number = 0.0;

    std::size_t size() const { return curvature.size(); }
    double min_curvature() const;
    double max_curvature() const;
    double total_curvature() const;  ///< Σ k ds
};

CurveGeometry compute_geometry(const ClosedCurve& curve);

/// Area from the boundary integral -½∮⟨γ,ν⟩ds on the discrete frame.
/// Agrees with the shoelace area to O(h²).
double boundary_integral_area(const ClosedCurve& curve, const CurveGeometry& geom);

/// Resample to `n` vertices with equal consecutive edge lengths, placed on a
/// periodic cubic spline through the input (chord-length knots).
ClosedCurve resample_arclength(const ClosedCurve& curve, std::size_t n);

/// k sampled on a uniform periodic grid of tangent angles θ_j = 2πj/m.
struct AngleProfile {
    std::vector<double> k;

    std::size_t size() const { return k.size(); }
    double step() const { return kTwoPi / static_cast<double>(k.size()); }
    double theta(std::size_t j) const { return step() * static_cast<double>(j); }
};

/// Tangent angle (unwrapped, increasing) at each vertex of a convex geometry.
std::vector<double> vertex_tangent_angles(const CurveGeometry& geom);

/// Sample a per-vertex quantity at m uniform tangent angles by periodic linear
/// interpolation in θ. Requires strictly positive curvature.
std::vector<double> sample_on_angle_grid(const CurveGeometry& geom, std::span<const double> values,
                                         std::size_t m);

AngleProfile to_angle_param(const CurveGeometry& geom, std::size_t m);

/// Rebuild a curve from its curvature profile via γ(θ) = ∫(cos θ, sin θ)/k dθ,
/// starting at the origin. The returned gap is |γ(2π) - γ(0)|.
struct Reconstruction {
    std::vector<Point2> vertices;
    double closure_gap = 0.0;
};
Reconstruction reconstruct_from_profile(const AngleProfile& profile);

/// k* = max over closed windows of ⌈m/2⌉ consecutive samples of the window minimum.
double median_curvature(const AngleProfile& profile);

/// ∫₀^{2π} log k dθ by the periodic trapezoid rule.
double entropy(const AngleProfile& profile);

/// Symmetric Hausdorff distance between the two polygons (vertex-to-segment).
double hausdorff_distance(const ClosedCurve& a, const ClosedCurve& b);

// --- constructors for standard test curves ---------------------------------

ClosedCurve make_circle(double radius, std::size_t n, Point2 center = {0.0, 0.0});
/// Ellipse with semi-axes a (x) and b (y), vertices equispaced in arc length.
ClosedCurve make_ellipse(double a, double b, std::size_t n, Point2 center = {0.0, 0.0});

/// Strictly convex closed curve whose bottom arc is exactly the graph u = εx² on |x| <= δ.
///
/// Built from its radius of curvature as a function of tangent angle: the
/// parabola's own profile on |θ| <= atan(2εδ), a quintic blend over the next
/// atan(2εδ) radians, and a(1 - ½cos θ) on the rest, with `a` fixed by closure.
/// The vertex at index 0 is the origin.
struct ParabolaClosure {
    ClosedCurve curve;
    double epsilon = 0.0;
    double delta = 0.0;
    double blend_end_angle = 0.0;  ///< tangent angle where the closing profile takes over
    double closing_scale = 0.0;    ///< a
};
ParabolaClosure build_parabola_closure(double epsilon, double delta, std::size_t n);

}  // namespace ambientflow
