#pragma once

#include <span>
#include <vector>

#include "ambientflow/vec2.hpp"

namespace ambientflow::detail {

/// Solve a cyclic tridiagonal system
///   lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]   (indices mod n)
/// with the Sherman-Morrison correction of the Thomas algorithm.
std::vector<double> solve_cyclic_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                             std::span<const double> upper, std::span<const double> rhs);

/// Periodic C² cubic spline through (knots[i], values[i]); period = knots.back() + last gap.
class PeriodicSpline {
public:
    PeriodicSpline() = default;
    /// `knots` strictly increasing starting anywhere; `period` > knots.back() - knots.front().
    PeriodicSpline(std::vector<double> knots, std::vector<double> values, double period);

    double operator()(double t) const;
    double derivative(double t) const;
    double period() const { return period_; }

    /// Segment index and local offset for parameter t (wrapped into the period).
    void locate(double t, std::size_t& seg, double& u) const;
    double eval_local(std::size_t seg, double u) const;
    double derivative_local(std::size_t seg, double u) const;
    double gap(std::size_t seg) const { return gaps_[seg]; }
    std::size_t segments() const { return knots_.size(); }
    double knot(std::size_t i) const { return knots_[i]; }

private:
    std::vector<double> knots_, values_, gaps_, second_;
    double period_ = 0.0;
};

/// Planar periodic spline curve with chord-length parametrization.
class SplineCurve {
public:
    explicit SplineCurve(std::span<const Point2> vertices);

    Point2 point(std::size_t seg, double u) const { return {x_.eval_local(seg, u), y_.eval_local(seg, u)}; }
    Vec2 velocity(std::size_t seg, double u) const {
        return {x_.derivative_local(seg, u), y_.derivative_local(seg, u)};
    }
    std::size_t segments() const { return x_.segments(); }
    double gap(std::size_t seg) const { return x_.gap(seg); }

    /// Arc length of segment `seg` from its start to local parameter u.
    double arc_length(std::size_t seg, double u) const;
    double segment_length(std::size_t seg) const { return seg_len_[seg]; }
    double total_length() const { return total_; }

    /// Point at chord-length parameter t (wrapped into [0, period)).
    Point2 at_parameter(double t) const {
        std::size_t seg;
        double u;
        x_.locate(t, seg, u);
        return point(seg, u);
    }
    double period() const { return x_.period(); }

    /// Point at arc length s from vertex 0 (wrapped into [0, total)).
    Point2 at_arc_length(double s) const;

private:
    PeriodicSpline x_, y_;
    std::vector<double> seg_len_;
    std::vector<double> cumulative_;  // arc length at start of each segment
    double total_ = 0.0;
};

/// 8-point Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre8 {
    static constexpr double nodes[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                        -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                        0.7966664774136267,  0.9602898564975363};
    static constexpr double weights[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                          0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                          0.2223810344533745, 0.1012285362903763};

    template <class F>
    static double integrate(F&& f, double a, double b) {
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double acc = 0.0;
        for (int i = 0; i < 8; ++i) acc += weights[i] * f(mid + half * nodes[i]);
        return acc * half;
    }
};

}  // namespace ambientflow::detail
