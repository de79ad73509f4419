#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ambientflow/constants.hpp"
#include "ambientflow/diagnostics.hpp"
#include "ambientflow/error.hpp"

using namespace ambientflow;

namespace {


// r = 1 + a·cos 3θ: not convex for a > 0.1
ClosedCurve trefoil_bump(double a, std::size_t n) {
    std::vector<Point2> v;
    for (std::size_t i = 0; i < n; ++i) {
        const double th = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
        const double r = 1.0 + a * std::cos(3.0 * th);
        v.push_back({r * std::cos(th), r * std::sin(th)});
    }
    return ClosedCurve::from_vertices(v);
}

Trajectory single_snapshot(const ClosedCurve& c, const AmbientField& f, FlowParams p) {
    Trajectory tr;
    tr.params = p;
    tr.field = f;
    tr.snapshots.push_back({0.0, c});
    return tr;
}

RescaledTrajectory context(double T, FlowParams p, const AmbientField& f = AmbientField::zero()) {
    RescaledTrajectory r;
    r.T = T;
    r.params = p;
    r.field = f;
    return r;
}

// Edge-midpoint quadrature of the Gaussian weight, independent of the curve frame.
double rho_quadrature(const ClosedCurve& c, double sigma1) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const Point2 a = c[i], b = c[(i + 1) % c.size()];
        const double ra = std::exp(-norm2(a) / (2.0 * sigma1)), rb = std::exp(-norm2(b) / (2.0 * sigma1));
        s += 0.5 * (ra + rb) * norm(b - a);
    }
    return s;
}

Trajectory ellipse_run(double b, std::size_t n, double dth, FlowParams p, const AmbientField& f) {
    StepControl c;
    c.snapshot_area_ratio = std::exp(-2.0 * dth);
    return evolve(make_ellipse(1.0, b, n), f, p, c);
}

}  // namespace

// --- identity residuals ---------------------------------------------------------

TEST(IdentityResiduals, ShrinkingCircle) {
    StepControl c;
    c.max_time = 0.2;
    const auto tr = evolve(make_circle(1.0, 256), AmbientField::zero(), {1.0, 0.0}, c);
    const auto r = identity_residuals(tr);
    EXPECT_LE(r.max_A_rel, 1e-3);
    EXPECT_LE(r.max_L_rel, 1e-3);
    EXPECT_LE(r.max_K, 1e-6);
    // L' = -2πσ₁/r on the circle
    for (std::size_t i = 1; i + 1 < tr.series.size(); i += 97) {
        const double r_t = tr.series.L[i] / (2.0 * kPi);
        const double dL = (tr.series.L[i + 1] - tr.series.L[i - 1]) / (tr.series.t[i + 1] - tr.series.t[i - 1]);
        EXPECT_NEAR(dL, -2.0 * kPi / r_t, 1e-3 * 2.0 * kPi / r_t);
    }
}

TEST(IdentityResiduals, NeedsThreeStates) {
    Trajectory tr;
    tr.series.t = {0.0, 0.1};
    tr.series.L = tr.series.A = tr.series.W = tr.series.int_k2 = tr.series.int_kVn = tr.series.int_Vn = {1.0, 1.0};
    try {
        identity_residuals(tr);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
    }
}

TEST(IdentityResiduals, FirstOrderUnderRefinement) {
    // CFL dt ∝ h², so N growing by √2 halves dt
    std::vector<IdentityResidualReport> levels;
    for (std::size_t n : {128, 181, 256}) {
        StepControl c;
        c.max_time = 0.02;
        levels.push_back(identity_residuals(evolve(make_ellipse(1.0, 0.6, n), AmbientField::saddle(), {1.0, 0.5}, c)));
    }
    const auto conv = identity_convergence(levels);
    ASSERT_EQ(conv.ratio_L.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_GE(conv.ratio_L[i], 1.5);
        EXPECT_LE(conv.ratio_L[i], 3.0);
        EXPECT_GE(conv.ratio_A[i], 1.5);
        EXPECT_LE(conv.ratio_A[i], 3.0);
    }
    EXPECT_LE(levels.back().max_L_rel, 1e-3);
    EXPECT_LE(levels.back().max_A_rel, 1e-3);
    for (const auto& l : levels) EXPECT_LE(l.max_K, 1e-6);
}

// --- speed monitor -----------------------------------------------------------------

TEST(SpeedMonitor, CircleHasNoViolations) {
    StepControl c;
    c.snapshot_area_ratio = 0.5;
    const auto tr = evolve(make_circle(1.0, 256), AmbientField::zero(), {1.0, 0.0}, c);
    const auto fb = estimate_bounds(AmbientField::zero(), 1.0);
    const auto mon = speed_monitor(tr, fb, 0.0);
    EXPECT_TRUE(mon.violations.empty());
    EXPECT_EQ(mon.skipped, 0u);
    for (const auto& s : mon.samples) EXPECT_LT(s.sup_F_theta, 1e-6 * s.F_max);
    EXPECT_NEAR(mon.M1, 2.0 * kPi + 1.0 / (2.0 * kPi), 1e-12);
    // both sides of the maximum estimate grow like k near extinction
    const auto& last = mon.samples.back();
    EXPECT_GT(last.F_max, 10.0);
    EXPECT_GT(last.margin_max, 0.0);
}

TEST(SpeedMonitor, MDominatesInitialData) {
    const auto tr = single_snapshot(make_ellipse(1.0, 0.5, 256), AmbientField::zero(), {1.0, 0.0});
    const auto fb = estimate_bounds(AmbientField::zero(), 1.0);
    const auto mon = speed_monitor(tr, fb, 0.0);
    ASSERT_EQ(mon.samples.size(), 1u);
    EXPECT_GE(mon.M, mon.samples[0].sup_F_theta);
    EXPECT_GE(mon.samples[0].margin_gradient, 0.0);
    EXPECT_GE(mon.M1, 2.0 * kPi * mon.M);
}

TEST(SpeedMonitor, MLowerBound) {
    const auto V = AmbientField::saddle();
    const auto fb = estimate_bounds(V, 0.5);
    const FlowParams p{1.0, -0.2};
    const auto K = curvature_threshold_K(p.sigma1, p.sigma2, fb.C1, fb.C2).K;
    const auto mon = speed_monitor(single_snapshot(make_circle(0.3, 128), V, p), fb, K);
    EXPECT_GE(mon.M, fb.C1 / K + std::abs(p.sigma2) + fb.C0 - 1e-12);
}

TEST(SpeedMonitor, NonConvexInitialSnapshotRejected) {
    const auto tr = single_snapshot(trefoil_bump(0.3, 256), AmbientField::zero(), {1.0, 0.0});
    try {
        speed_monitor(tr, estimate_bounds(AmbientField::zero(), 2.0), 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ConvexityRequired);
    }
}

TEST(SpeedMonitor, NonConvexLaterSnapshotSkipped) {
    auto tr = single_snapshot(make_circle(1.0, 256), AmbientField::zero(), {1.0, 0.0});
    tr.snapshots.push_back({0.1, trefoil_bump(0.3, 256)});
    const auto mon = speed_monitor(tr, estimate_bounds(AmbientField::zero(), 2.0), 0.0);
    EXPECT_EQ(mon.skipped, 1u);
    EXPECT_FALSE(mon.samples[1].convex);
}

// --- geometric estimate ----------------------------------------------------------

TEST(GeometricEstimate, Circle) {
    const double r = 0.7;
    const auto ge = geometric_estimate(single_snapshot(make_circle(r, 1024), AmbientField::zero(), {}));
    ASSERT_EQ(ge.size(), 1u);
    EXPECT_NEAR(ge[0].k_star, 1.0 / r, 1e-4);
    EXPECT_NEAR(ge[0].L_over_A, 2.0 / r, 1e-4);
    EXPECT_TRUE(ge[0].verdict);
}

TEST(GeometricEstimate, EllipseMatchesBruteForce) {
    const auto c = make_ellipse(2.0, 1.0, 1024);
    const auto ge = geometric_estimate(single_snapshot(c, AmbientField::zero(), {}), 720);
    ASSERT_EQ(ge.size(), 1u);
    EXPECT_TRUE(ge[0].verdict);

    // brute force over closed π-windows of the analytic profile
    // k(φ) = (a²cos²φ + b²sin²φ)^{3/2}/(a²b²), φ the normal angle
    const double a = 2.0, b = 1.0;
    auto k = [&](double phi) {
        return std::pow(a * a * std::cos(phi) * std::cos(phi) + b * b * std::sin(phi) * std::sin(phi), 1.5) /
               (a * a * b * b);
    };
    double best = 0.0;
    const int m = 2000;
    for (int s = 0; s < m; ++s) {
        double lo = 1e300;
        for (int j = 0; j <= m / 2; ++j) lo = std::min(lo, k(2.0 * kPi * (s + j) / m));
        best = std::max(best, lo);
    }
    EXPECT_NEAR(ge[0].k_star, best, 1e-3);
    const auto g = compute_geometry(c);
    EXPECT_NEAR(ge[0].L_over_A, g.length / g.area, 1e-15);
}

TEST(GeometricEstimate, NearExtinction) {
    StepControl c;
    c.snapshot_area_ratio = 0.3;
    const auto tr = evolve(make_ellipse(1.0, 0.5, 128), AmbientField::zero(), {1.0, 0.0}, c);
    const auto ge = geometric_estimate(tr, 256);
    ASSERT_GT(ge.size(), 4u);
    for (const auto& s : ge) {
        EXPECT_TRUE(s.convex);
        EXPECT_TRUE(s.verdict) << "t=" << s.t;
    }
}

// --- Gaussian monitor --------------------------------------------------------------

TEST(GaussianMonitor, SelfShrinker) {
    for (double s1 : {1.0, 2.0}) {
        const auto ctx = context(0.5, {s1, 0.0});
        const auto c = make_circle(std::sqrt(s1), 1024);
        const auto s = gaussian_sample(c, 0.3, ctx);
        EXPECT_LE(s.max_abs_Q, 1e-3);
        EXPECT_NEAR(s.R, 2.0 * kPi * std::sqrt(s1) * std::exp(-0.5), 1e-4);
        EXPECT_GE(s.dissipation, 0.0);

        auto rs = ctx;
        for (int j = 0; j < 5; ++j) rs.snapshots.push_back({0.0, 0.1 * j, 1.0, c});
        const auto mon = gaussian_monitor(rs);
        EXPECT_LE(mon.max_rel_residual, 1e-3);
        EXPECT_LE(mon.max_rel_increase, 1e-12);
    }
}

TEST(GaussianMonitor, InitialSnapshotIsDirectQuadrature) {
    const auto tr = ellipse_run(0.6, 128, 0.2, {1.0, 0.0}, AmbientField::zero());
    const auto ex = estimate_extinction(tr);
    const auto rs = rescale_trajectory(tr, ex.T, ex.O);
    const auto mon = gaussian_monitor(rs);
    ASSERT_FALSE(mon.samples.empty());
    const auto& c0 = rs.snapshots.front().curve;
    EXPECT_NEAR(mon.samples.front().R, rho_quadrature(c0, 1.0), 1e-4 * mon.samples.front().R);
    EXPECT_TRUE(std::isnan(mon.samples.front().residual));
    for (const auto& s : mon.samples) EXPECT_GT(s.R, 0.0);
}

TEST(GaussianMonitor, ResidualFirstOrderInStep) {
    std::vector<double> res;
    for (double dth : {0.1, 0.05}) {
        const auto tr = ellipse_run(0.8, 128, dth, {1.0, 0.0}, AmbientField::zero());
        const auto ex = estimate_extinction(tr);
        const auto mon = gaussian_monitor(rescale_trajectory(tr, ex.T, ex.O));
        EXPECT_LE(mon.max_rel_increase, 1e-3);
        res.push_back(mon.max_rel_residual);
    }
    EXPECT_GE(std::log2(res[0] / res[1]), 0.9);
    EXPECT_LE(res[1], 1e-3);
}

TEST(GaussianMonitor, FullIdentityWithField) {
    // the V term is kept; the residual must still shrink with the step
    std::vector<double> res;
    for (double dth : {0.1, 0.05}) {
        const auto tr = ellipse_run(0.8, 128, dth, {1.0, 0.0}, AmbientField::killing(0.5, 0.2, -0.1));
        const auto ex = estimate_extinction(tr);
        const auto mon = gaussian_monitor(rescale_trajectory(tr, ex.T, ex.O));
        res.push_back(mon.max_rel_residual);
        EXPECT_NE(mon.samples[mon.samples.size() / 2].field_term, 0.0);
    }
    EXPECT_GE(std::log2(res[0] / res[1]), 0.9);
    EXPECT_LE(res[1], 1e-3);
}

TEST(GaussianMonitor, FullIdentityWithForcing) {
    // with σ₂ > 0 the residual is already at the spatial floor (~1e-5) at these steps
    for (double dth : {0.1, 0.05}) {
        const auto tr = ellipse_run(0.8, 128, dth, {1.0, 0.5}, AmbientField::zero());
        const auto ex = estimate_extinction(tr);
        const auto mon = gaussian_monitor(rescale_trajectory(tr, ex.T, ex.O));
        EXPECT_LE(mon.max_rel_residual, 1e-3);
        const auto& mid = mon.samples[mon.samples.size() / 2];
        EXPECT_GT(mid.forcing, 0.0);
        EXPECT_EQ(mid.field_term, 0.0);
        // R' = −∫Q²ρ + forcing
        EXPECT_NEAR(mid.rhs, -mid.dissipation + mid.forcing, 1e-15);
    }
}

// --- roundness ---------------------------------------------------------------------

TEST(Roundness, SelfShrinker) {
    auto rs = context(0.5, {1.0, 0.0});
    rs.snapshots.push_back({0.0, 0.0, 1.0, make_circle(1.0, 1024)});
    const auto rr = rescaled_roundness(rs);
    ASSERT_EQ(rr.size(), 1u);
    EXPECT_NEAR(rr[0].A, kPi, 1e-4);
    EXPECT_NEAR(rr[0].ratio, 1.0, 1e-9);
    EXPECT_NEAR(rr[0].f, 0.0, 1e-4);
    EXPECT_NEAR(rr[0].slack, 2.0 * kPi - rr[0].L, 1e-4);
}

TEST(Roundness, ShrinkingCircleRun) {
    StepControl c;
    c.snapshot_area_ratio = std::exp(-0.4);
    // circles are the equality case, where the inscribed polygon's slack is
    // −(2π/3)(π/N)²: −1.3e-3 at N = 128, −3.2e-4 at N = 256
    const auto tr = evolve(make_circle(1.0, 256), AmbientField::zero(), {1.0, 0.0}, c);
    const auto ex = estimate_extinction(tr);
    const auto rr = rescaled_roundness(rescale_trajectory(tr, ex.T, ex.O));
    std::size_t late = 0;
    for (const auto& s : rr) {
        EXPECT_TRUE(s.convex);
        EXPECT_GE(s.slack, -1e-3);
        if (s.t_hat >= 2.0) {
            ++late;
            EXPECT_NEAR(s.A, kPi, 0.02 * kPi);
        }
    }
    EXPECT_GT(late, 0u);
}

TEST(Roundness, EllipseSlackAndNonConvexFlag) {
    const auto tr = ellipse_run(0.5, 128, 0.2, {1.0, 0.0}, AmbientField::zero());
    const auto ex = estimate_extinction(tr);
    auto rs = rescale_trajectory(tr, ex.T, ex.O);
    for (const auto& s : rescaled_roundness(rs)) EXPECT_GE(s.slack, -1e-3);

    rs.snapshots.push_back({0.0, 9.0, 1.0, trefoil_bump(0.3, 256)});
    const auto rr = rescaled_roundness(rs);
    EXPECT_FALSE(rr.back().convex);
    EXPECT_TRUE(std::isnan(rr.back().f));
}

// --- derivative boundedness ----------------------------------------------------------

TEST(DerivativeBoundedness, Circle) {
    const auto r = derivative_boundedness(single_snapshot(make_circle(0.5, 512), AmbientField::zero(), {}));
    EXPECT_TRUE(r.bounded);
    EXPECT_LE(r.samples[0].max_ks, 1e-3 * 2.0);
}

TEST(DerivativeBoundedness, EllipseSeriesFiniteAndContinuous) {
    StepControl c;
    c.snapshot_times = {0.01, 0.02, 0.03, 0.04, 0.05, 0.06};
    c.max_time = 0.06;
    const auto tr = evolve(make_ellipse(1.0, 0.5, 256), AmbientField::zero(), {1.0, 0.0}, c);
    const auto r = derivative_boundedness(tr);
    EXPECT_TRUE(r.bounded);
    for (std::size_t i = 1; i < r.samples.size(); ++i) {
        EXPECT_TRUE(std::isfinite(r.samples[i].max_ks));
        EXPECT_LT(std::abs(r.samples[i].max_ks - r.samples[i - 1].max_ks), 0.5 * r.samples[i - 1].max_ks + 1e-9);
    }
}
