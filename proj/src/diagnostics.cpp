#include "ambientflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ambientflow/error.hpp"

namespace ambientflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Derivative at x1 of the parabola through (x0,y0), (x1,y1), (x2,y2).
double three_point_slope(double x0, double y0, double x1, double y1, double x2, double y2) {
    const double h1 = x1 - x0, h2 = x2 - x1;
    return -h2 / (h1 * (h1 + h2)) * y0 + (h2 - h1) / (h1 * h2) * y1 + h1 / (h2 * (h1 + h2)) * y2;
}

bool is_convex(const CurveGeometry& g) { return g.min_curvature() > 0.0; }

}  // namespace

IdentityResidualReport identity_residuals(const Trajectory& traj) {
    const auto& s = traj.series;
    if (s.size() < 3) throw Error(ErrorKind::InsufficientData, "identity residuals need at least 3 states");
    const double s1 = traj.params.sigma1, s2 = traj.params.sigma2;
    IdentityResidualReport r;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        const double dL = three_point_slope(s.t[i - 1], s.L[i - 1], s.t[i], s.L[i], s.t[i + 1], s.L[i + 1]);
        const double dA = three_point_slope(s.t[i - 1], s.A[i - 1], s.t[i], s.A[i], s.t[i + 1], s.A[i + 1]);
        const double dK = kTwoPi * three_point_slope(s.t[i - 1], s.W[i - 1], s.t[i], s.W[i], s.t[i + 1], s.W[i + 1]);
        const double rhsL = -s1 * s.int_k2[i] - kTwoPi * s2 - s.int_kVn[i];
        const double rhsA = -kTwoPi * s1 - s2 * s.L[i] - s.int_Vn[i];
        r.t.push_back(s.t[i]);
        r.L.push_back(dL - rhsL);
        r.A.push_back(dA - rhsA);
        r.K.push_back(dK);
        r.max_L_rel = std::max(r.max_L_rel, std::abs(dL - rhsL) / (s1 * s.int_k2[i]));
        r.max_A_rel = std::max(r.max_A_rel, std::abs(dA - rhsA) / (kTwoPi * s1));
        r.max_K = std::max(r.max_K, std::abs(dK));
    }
    return r;
}

IdentityConvergence identity_convergence(const std::vector<IdentityResidualReport>& levels) {
    IdentityConvergence c;
    for (const auto& l : levels) {
        c.max_L_rel.push_back(l.max_L_rel);
        c.max_A_rel.push_back(l.max_A_rel);
    }
    for (std::size_t i = 1; i < levels.size(); ++i) {
        c.ratio_L.push_back(c.max_L_rel[i - 1] / c.max_L_rel[i]);
        c.ratio_A.push_back(c.max_A_rel[i - 1] / c.max_A_rel[i]);
    }
    return c;
}

// --- speed bounds ------------------------------------------------------------

namespace {

struct AngleSpeed {
    std::vector<double> F, F_theta;
    double dtheta = 0.0;
};

AngleSpeed speed_on_angle_grid(const ClosedCurve& curve, const CurveGeometry& g, const AmbientField& field,
                               const FlowParams& params, std::size_t m) {
    const auto F = normal_speed(curve, g, field, params);
    AngleSpeed a;
    a.F = sample_on_angle_grid(g, F, m);
    a.dtheta = kTwoPi / static_cast<double>(m);
    a.F_theta.resize(m);
    for (std::size_t j = 0; j < m; ++j)
        a.F_theta[j] = (a.F[(j + 1) % m] - a.F[(j + m - 1) % m]) / (2.0 * a.dtheta);
    return a;
}

}  // namespace

SpeedMonitor speed_monitor(const Trajectory& traj, const FieldBounds& bounds, double K, std::size_t m) {
    if (traj.snapshots.empty()) throw Error(ErrorKind::InsufficientData, "no snapshots");
    if (K < 0.0) throw Error(ErrorKind::Domain, "K must be non-negative");
    SpeedMonitor mon;
    mon.C0 = bounds.C0;
    mon.C1 = bounds.C1;
    mon.K = K;
    const double s2 = traj.params.sigma2;
    // with K = 0 the correction C₁/K is taken as 0 (then C₁ = 0 as well)
    const double shift = K > 0.0 ? bounds.C1 / K : 0.0;

    {
        const auto& c0 = traj.snapshots.front().curve;
        const auto g0 = compute_geometry(c0);
        if (!is_convex(g0)) throw Error(ErrorKind::ConvexityRequired, "initial snapshot is not convex");
        const auto a = speed_on_angle_grid(c0, g0, traj.field, traj.params, m ? m : c0.size());
        double m2 = std::pow(shift + std::abs(s2) + bounds.C0, 2);
        for (std::size_t j = 0; j < a.F.size(); ++j) {
            const double ft = a.F[j] - shift;
            m2 = std::max(m2, ft * ft + a.F_theta[j] * a.F_theta[j]);
        }
        mon.M = std::sqrt(m2);
        mon.M1 = std::max(kTwoPi * mon.M, kTwoPi + 1.0 / kTwoPi);
    }

    for (const auto& snap : traj.snapshots) {
        SpeedSample s;
        s.t = snap.t;
        const auto g = compute_geometry(snap.curve);
        if (!is_convex(g)) {
            s.convex = false;
            ++mon.skipped;
            mon.samples.push_back(s);
            continue;
        }
        const std::size_t mm = m ? m : snap.curve.size();
        const auto a = speed_on_angle_grid(snap.curve, g, traj.field, traj.params, mm);
        std::size_t jmax = 0;
        for (std::size_t j = 0; j < mm; ++j) {
            if (a.F[j] > a.F[jmax]) jmax = j;
            s.sup_F_theta = std::max(s.sup_F_theta, std::abs(a.F_theta[j]));
            s.int_abs_F += std::abs(a.F[j]) * a.dtheta;
        }
        s.F_max = a.F[jmax];
        s.F_min = *std::min_element(a.F.begin(), a.F.end());
        s.margin_gradient = mon.M + s.int_abs_F - s.sup_F_theta;
        s.margin_max = mon.M1 * (1.0 + s.int_abs_F) - s.F_max;
        // grid points within 1/(4π) of the maximiser
        const auto reach = static_cast<std::ptrdiff_t>(std::floor(1.0 / (4.0 * kPi) / a.dtheta));
        s.margin_local = std::numeric_limits<double>::infinity();
        for (std::ptrdiff_t d = -reach; d <= reach; ++d) {
            const auto j = static_cast<std::size_t>((static_cast<std::ptrdiff_t>(jmax) + d +
                                                     static_cast<std::ptrdiff_t>(mm)) % static_cast<std::ptrdiff_t>(mm));
            s.margin_local = std::min(s.margin_local, 2.0 * a.F[j] + mon.M / kTwoPi - s.F_max);
        }
        auto flag = [&](double margin, const char* what) {
            if (margin < 0.0)
                mon.violations.push_back(std::string(what) + " at t=" + std::to_string(s.t) +
                                         " (margin " + std::to_string(margin) + ")");
        };
        flag(s.margin_gradient, "gradient estimate");
        flag(s.margin_max, "maximum estimate");
        flag(s.margin_local, "local maximum estimate");
        mon.samples.push_back(s);
    }
    return mon;
}

// --- geometric estimate --------------------------------------------------------

std::vector<GeometricEstimateSample> geometric_estimate(const Trajectory& traj, std::size_t m) {
    std::vector<GeometricEstimateSample> out;
    for (const auto& snap : traj.snapshots) {
        GeometricEstimateSample s;
        s.t = snap.t;
        const auto g = compute_geometry(snap.curve);
        s.L_over_A = g.length / g.area;
        if (!is_convex(g)) {
            s.convex = false;
            out.push_back(s);
            continue;
        }
        s.k_star = median_curvature(to_angle_param(g, m));
        s.verdict = s.k_star < s.L_over_A;
        out.push_back(s);
    }
    return out;
}

// --- rescaled monitors ---------------------------------------------------------

GaussianSample gaussian_sample(const ClosedCurve& curve, double t_hat, const RescaledTrajectory& ctx) {
    const double s1 = ctx.params.sigma1, s2 = ctx.params.sigma2;
    const double decay = std::sqrt(2.0 * ctx.T) * std::exp(-t_hat);  // 1/φ
    const auto g = compute_geometry(curve);
    const bool zero = ctx.field.is_zero();

    GaussianSample s;
    s.t_hat = t_hat;
    double rho_sum = 0.0, vterm = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const Point2 p = curve[i];
        const double rho = std::exp(-norm2(p) / (2.0 * s1));
        const double gn = dot(p, g.normal[i]);
        const double a = gn + s1 * g.curvature[i];
        const double Q = a / std::sqrt(s1) + decay * s2 / (2.0 * std::sqrt(s1));
        rho_sum += rho * g.ds[i];
        s.dissipation += Q * Q * rho * g.ds[i];
        s.max_abs_Q = std::max(s.max_abs_Q, std::abs(Q));
        if (!zero) {
            const Point2 original = ctx.O + decay * p;
            vterm += a * dot(ctx.field.value(original), g.normal[i]) * rho * g.ds[i];
        }
    }
    s.R = rho_sum;
    s.forcing = decay * decay * s2 * s2 / (4.0 * s1) * rho_sum;
    s.field_term = decay / s1 * vterm;
    s.rhs = -s.dissipation + s.forcing - s.field_term;
    s.fd_slope = kNaN;
    s.residual = kNaN;
    return s;
}

GaussianMonitor gaussian_monitor(const RescaledTrajectory& rescaled) {
    GaussianMonitor mon;
    for (const auto& snap : rescaled.snapshots) mon.samples.push_back(gaussian_sample(snap.curve, snap.t_hat, rescaled));
    auto& v = mon.samples;
    for (std::size_t j = 1; j + 1 < v.size(); ++j) {
        v[j].fd_slope = three_point_slope(v[j - 1].t_hat, v[j - 1].R, v[j].t_hat, v[j].R, v[j + 1].t_hat, v[j + 1].R);
        v[j].residual = std::abs(v[j].fd_slope - v[j].rhs);
        mon.max_rel_residual = std::max(mon.max_rel_residual, v[j].residual / v[j].R);
    }
    for (std::size_t j = 0; j + 1 < v.size(); ++j)
        mon.max_rel_increase = std::max(mon.max_rel_increase, (v[j + 1].R - v[j].R) / v[j].R);
    return mon;
}

double rescaled_f(const ClosedCurve& curve, double t_hat, double T, const FlowParams& params, std::size_t m) {
    const auto g = compute_geometry(curve);
    const auto k = to_angle_param(g, m ? m : curve.size()).k;
    const std::size_t n = k.size();
    const double h = kTwoPi / static_cast<double>(n);
    const double forcing = 2.0 * std::sqrt(2.0 * T) * params.sigma2 * std::exp(-t_hat);
    double f = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double ktt = (k[(j + 1) % n] - 2.0 * k[j] + k[(j + n - 1) % n]) / (h * h);
        f += (-1.0 + params.sigma1 * k[j] * (ktt + k[j]) - forcing * k[j]) * h;
    }
    return f;
}

std::vector<RoundnessSample> rescaled_roundness(const RescaledTrajectory& rescaled, std::size_t m) {
    std::vector<RoundnessSample> out;
    for (const auto& snap : rescaled.snapshots) {
        RoundnessSample s;
        s.t_hat = snap.t_hat;
        const auto g = compute_geometry(snap.curve);
        s.A = g.area;
        s.L = g.length;
        s.kmin = g.min_curvature();
        s.kmax = g.max_curvature();
        s.ratio = s.kmax / s.kmin;
        s.slack = 2.0 * s.kmax * s.A - s.L;
        s.convex = is_convex(g);
        s.f = s.convex ? rescaled_f(snap.curve, snap.t_hat, rescaled.T, rescaled.params, m) : kNaN;
        if (!s.convex) s.ratio = kNaN;
        out.push_back(s);
    }
    return out;
}

DerivativeReport derivative_boundedness(const Trajectory& traj) {
    DerivativeReport r;
    for (const auto& snap : traj.snapshots) {
        const auto g = compute_geometry(snap.curve);
        const std::size_t n = g.size();
        const double h = g.length / static_cast<double>(n);
        DerivativeSample s;
        s.t = snap.t;
        for (std::size_t i = 0; i < n; ++i) {
            const double kp = g.curvature[(i + 1) % n], km = g.curvature[(i + n - 1) % n];
            s.max_ks = std::max(s.max_ks, std::abs(kp - km) / (2.0 * h));
            s.max_kss = std::max(s.max_kss, std::abs(kp - 2.0 * g.curvature[i] + km) / (h * h));
        }
        if (!std::isfinite(s.max_ks) || !std::isfinite(s.max_kss)) r.bounded = false;
        r.samples.push_back(s);
    }
    return r;
}

}  // namespace ambientflow
