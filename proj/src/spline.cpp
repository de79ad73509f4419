#include "spline.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace ambientflow::detail {

namespace {

std::vector<double> solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                      std::span<const double> upper, std::span<const double> rhs) {
    const std::size_t n = diag.size();
    std::vector<double> c(n), x(n);
    double denom = diag[0];
    c[0] = upper[0] / denom;
    x[0] = rhs[0] / denom;
    for (std::size_t i = 1; i < n; ++i) {
        denom = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / denom;
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
    return x;
}

}  // namespace

std::vector<double> solve_cyclic_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                             std::span<const double> upper, std::span<const double> rhs) {
    const std::size_t n = diag.size();
    assert(n >= 3);
    const double alpha = upper[n - 1];
    const double beta = lower[0];
    const double gamma = -diag[0];

    std::vector<double> bb(diag.begin(), diag.end());
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - alpha * beta / gamma;

    std::vector<double> x = solve_tridiagonal(lower, bb, upper, rhs);
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = alpha;
    std::vector<double> z = solve_tridiagonal(lower, bb, upper, u);

    const double fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    for (std::size_t i = 0; i < n; ++i) x[i] -= fact * z[i];
    return x;
}

PeriodicSpline::PeriodicSpline(std::vector<double> knots, std::vector<double> values, double period)
    : knots_(std::move(knots)), values_(std::move(values)), period_(period) {
    const std::size_t n = knots_.size();
    gaps_.resize(n);
    for (std::size_t i = 0; i + 1 < n; ++i) gaps_[i] = knots_[i + 1] - knots_[i];
    gaps_[n - 1] = period_ - (knots_[n - 1] - knots_[0]);

    std::vector<double> lower(n), diag(n), upper(n), rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t prev = (i + n - 1) % n;
        const std::size_t next = (i + 1) % n;
        const double hp = gaps_[prev], hn = gaps_[i];
        lower[i] = hp;
        diag[i] = 2.0 * (hp + hn);
        upper[i] = hn;
        rhs[i] = 6.0 * ((values_[next] - values_[i]) / hn - (values_[i] - values_[prev]) / hp);
    }
    second_ = solve_cyclic_tridiagonal(lower, diag, upper, rhs);
}

void PeriodicSpline::locate(double t, std::size_t& seg, double& u) const {
    const double t0 = knots_.front();
    double w = std::fmod(t - t0, period_);
    if (w < 0.0) w += period_;
    const double tw = t0 + w;
    auto it = std::upper_bound(knots_.begin(), knots_.end(), tw);
    seg = static_cast<std::size_t>(std::distance(knots_.begin(), it)) - 1;
    u = tw - knots_[seg];
}

double PeriodicSpline::eval_local(std::size_t seg, double u) const {
    const std::size_t next = (seg + 1) % knots_.size();
    const double h = gaps_[seg];
    const double m0 = second_[seg], m1 = second_[next];
    const double b = (values_[next] - values_[seg]) / h - h * (2.0 * m0 + m1) / 6.0;
    return values_[seg] + u * (b + u * (0.5 * m0 + u * (m1 - m0) / (6.0 * h)));
}

double PeriodicSpline::derivative_local(std::size_t seg, double u) const {
    const std::size_t next = (seg + 1) % knots_.size();
    const double h = gaps_[seg];
    const double m0 = second_[seg], m1 = second_[next];
    const double b = (values_[next] - values_[seg]) / h - h * (2.0 * m0 + m1) / 6.0;
    return b + u * (m0 + u * (m1 - m0) / (2.0 * h));
}

double PeriodicSpline::operator()(double t) const {
    std::size_t seg;
    double u;
    locate(t, seg, u);
    return eval_local(seg, u);
}

double PeriodicSpline::derivative(double t) const {
    std::size_t seg;
    double u;
    locate(t, seg, u);
    return derivative_local(seg, u);
}

SplineCurve::SplineCurve(std::span<const Point2> vertices) {
    const std::size_t n = vertices.size();
    std::vector<double> knots(n), xs(n), ys(n);
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        knots[i] = t;
        xs[i] = vertices[i].x;
        ys[i] = vertices[i].y;
        t += norm(vertices[(i + 1) % n] - vertices[i]);
    }
    x_ = PeriodicSpline(knots, std::move(xs), t);
    y_ = PeriodicSpline(std::move(knots), std::move(ys), t);

    seg_len_.resize(n);
    cumulative_.resize(n);
    total_ = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cumulative_[i] = total_;
        seg_len_[i] = arc_length(i, gap(i));
        total_ += seg_len_[i];
    }
}

double SplineCurve::arc_length(std::size_t seg, double u) const {
    if (u <= 0.0) return 0.0;
    auto speed = [&](double v) { return norm(velocity(seg, v)); };
    // two panels keep the quadrature error far below the spline's own error
    const double mid = 0.5 * u;
    return GaussLegendre8::integrate(speed, 0.0, mid) + GaussLegendre8::integrate(speed, mid, u);
}

Point2 SplineCurve::at_arc_length(double s) const {
    double w = std::fmod(s, total_);
    if (w < 0.0) w += total_;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), w);
    std::size_t seg = static_cast<std::size_t>(std::distance(cumulative_.begin(), it)) - 1;
    const double target = w - cumulative_[seg];
    const double h = gap(seg);

    double lo = 0.0, hi = h;
    double u = h * target / seg_len_[seg];
    for (int iter = 0; iter < 30; ++iter) {
        const double f = arc_length(seg, u) - target;
        if (std::abs(f) <= 1e-15 * std::max(1.0, total_)) break;
        if (f > 0.0) hi = u; else lo = u;
        double next = u - f / norm(velocity(seg, u));
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        u = next;
    }
    return point(seg, u);
}

}  // namespace ambientflow::detail
