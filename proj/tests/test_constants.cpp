#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "ambientflow/constants.hpp"
#include "ambientflow/error.hpp"

using namespace ambientflow;

namespace {

double P(double s1, double s2, double C1, double C2, double x) {
    const double beta = std::abs(s2) - s2;
    return s1 * x * x * x - 0.5 * beta * x * x - 3.0 * C1 * x - C2;
}

// Largest real root by scanning sign changes on a fine grid, then bisecting.
double oracle_largest_root(double s1, double s2, double C1, double C2) {
    const double hi = 10.0 + (std::abs(s2) * 2 + 3 * C1 + C2) / s1 * 2;
    const int n = 20000;
    double best = 0.0;
    for (int i = 0; i < n; ++i) {
        double a = hi * i / n, b = hi * (i + 1) / n;
        if (P(s1, s2, C1, C2, a) <= 0.0 && P(s1, s2, C1, C2, b) > 0.0) {
            for (int it = 0; it < 200; ++it) {
                const double m = 0.5 * (a + b);
                (P(s1, s2, C1, C2, m) > 0.0 ? b : a) = m;
            }
            best = std::max(best, b);
        }
    }
    return best;
}

// Maximum of the printed right side over a 10⁴-point α grid on [0,1), refined
// by golden-section search inside the bracketing cells of the best node.
double alpha_grid_max(double s1, double s2, double C0, double C1) {
    const int n = 10000;
    auto f = [&](double a) { return length_condition_rhs(a, s1, s2, C0, C1); };
    int best = 0;
    for (int j = 1; j < n; ++j)
        if (f(double(j) / n) > f(double(best) / n)) best = j;
    double lo = std::max(0.0, double(best - 1) / n), hi = std::min(1.0 - 1e-12, double(best + 1) / n);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 200; ++it) {
        const double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
        (f(a) < f(b) ? lo : hi) = (f(a) < f(b) ? a : b);
    }
    return std::max(f(double(best) / n), f(0.5 * (lo + hi)));
}

}  // namespace

TEST(ThresholdK, Examples) {
    EXPECT_EQ(curvature_threshold_K(1, 0, 0, 0).K, 0.0);
    EXPECT_NEAR(curvature_threshold_K(1, 0, 0, 8).K, 2.0, 1e-12);
    const auto r = curvature_threshold_K(1, -2, 0, 0);
    EXPECT_NEAR(r.K, 2.0, 1e-9);
    EXPECT_EQ(r.cubic.branch, CubicBranch::Trigonometric);
}

TEST(ThresholdK, DepressedFormReproducesCubic) {
    // substituting x = t + shift must give σ₁(t³ + pt + q)
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> s1d(0.1, 10), s2d(-5, 5), cd(0, 10), td(-3, 3);
    for (int i = 0; i < 50; ++i) {
        const double s1 = s1d(rng), s2 = s2d(rng), C1 = cd(rng), C2 = cd(rng);
        const auto c = curvature_threshold_K(s1, s2, C1, C2).cubic;
        const double t = td(rng);
        EXPECT_NEAR(P(s1, s2, C1, C2, t + c.shift), s1 * (t * t * t + c.p * t + c.q),
                    1e-10 * (1 + std::abs(P(s1, s2, C1, C2, t + c.shift))));
    }
}

TEST(ThresholdK, RandomDrawsAgreeWithBisectionAndOracle) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> s1d(0.1, 10), s2d(-5, 5), cd(0, 10);
    int trig = 0, hyp = 0;
    for (int i = 0; i < 200; ++i) {
        const double s1 = s1d(rng), s2 = s2d(rng), C1 = cd(rng), C2 = cd(rng);
        const auto r = curvature_threshold_K(s1, s2, C1, C2);
        EXPECT_NEAR(r.cubic.closed_form, r.cubic.bisection, 1e-9);
        EXPECT_NEAR(P(s1, s2, C1, C2, r.K), 0.0, 1e-9);
        for (int k = 1; k <= 3; ++k) EXPECT_GT(P(s1, s2, C1, C2, r.K + std::pow(10.0, -k) * (1 + r.K)), 0.0);
        EXPECT_GT(P(s1, s2, C1, C2, r.K * (1 + 1e-3) + 1e-3), 0.0);
        EXPECT_NEAR(r.K, oracle_largest_root(s1, s2, C1, C2), 1e-9 * std::max(1.0, r.K));
        (r.cubic.branch == CubicBranch::Trigonometric ? trig : hyp)++;
    }
    // both closed-form branches are exercised
    EXPECT_GT(trig, 0);
    EXPECT_GT(hyp, 0);
}

TEST(ThresholdK, Monotonicity) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> s1d(0.1, 10), s2d(-5, 5), cd(0, 10), dd(0, 2);
    for (int i = 0; i < 100; ++i) {
        const double s1 = s1d(rng), s2 = s2d(rng), C1 = cd(rng), C2 = cd(rng);
        const double K = curvature_threshold_K(s1, s2, C1, C2).K;
        EXPECT_GE(curvature_threshold_K(s1, s2, C1 + dd(rng), C2).K, K - 1e-12);
        EXPECT_GE(curvature_threshold_K(s1, s2, C1, C2 + dd(rng)).K, K - 1e-12);
        EXPECT_LE(curvature_threshold_K(s1 + dd(rng), s2, C1, C2).K, K + 1e-12);
    }
}

TEST(ThresholdK, RejectsBadInput) {
    EXPECT_THROW(curvature_threshold_K(0, 0, 0, 0), Error);
    EXPECT_THROW(curvature_threshold_K(1, 0, -1, 0), Error);
}

TEST(ThresholdM, Examples) {
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_EQ(length_threshold_M(ConfinementCase::A, 1, 0, 1, 0).M, inf);
    EXPECT_EQ(length_threshold_M(ConfinementCase::B, 2, 0.5, 3, 0).M, inf);
    EXPECT_EQ(length_threshold_M(ConfinementCase::B, 1, 0, 0, 0).M, inf);
    const auto m = length_threshold_M(ConfinementCase::A, 1, 0, 1, 0);
    EXPECT_NEAR(m.first_branch, kPi * std::sqrt(3.0), 1e-12);

    const auto c = length_threshold_M(ConfinementCase::C, 1, 0, 0, 0, 1.0);
    EXPECT_NEAR(c.M, kPi, 1e-12);
    EXPECT_NEAR(c.first_branch, 2.0 * std::sqrt(kPi), 1e-12);
    try {
        length_threshold_M(ConfinementCase::C, 1, 0, 0, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingInput);
    }
}

TEST(ThresholdM, NegativeForcingWithConstantFieldIsFinite) {
    // C₁ = 0 with σ₂ < 0: the α → 1 limit of the length condition is 3πσ₁/(2|σ₂|)
    const auto m = length_threshold_M(ConfinementCase::B, 1.5, -2.0, 1.0, 0.0);
    EXPECT_NEAR(m.M, 3.0 * kPi * 1.5 / 4.0, 1e-12);
    EXPECT_NEAR(length_condition_rhs(1.0 - 1e-3, 1.5, -2.0, 1.0, 0.0), m.M, 1e-6 * m.M);
}

TEST(ThresholdM, MatchesAlphaGridMaximum) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> s1d(0.1, 10), s2d(-5, 5), cd(0.01, 10);
    int interior = 0, boundary = 0;
    for (int i = 0; i < 200; ++i) {
        const double s1 = s1d(rng), s2 = s2d(rng), C0 = cd(rng), C1 = cd(rng);
        const auto m = length_threshold_M(ConfinementCase::B, s1, s2, C0, C1);
        const double grid = alpha_grid_max(s1, s2, C0, C1);
        EXPECT_NEAR(m.M, grid, 1e-6 * grid) << s1 << " " << s2 << " " << C0 << " " << C1;
        EXPECT_GE(m.M, grid * (1 - 1e-12));
        (m.alpha > 0 ? interior : boundary)++;
    }
    EXPECT_GT(interior, 0);
    EXPECT_GT(boundary, 0);
}

TEST(ConfinementOde, ConstantGrowth) {
    const auto zero = solve_confinement_ode(0.0, [](double) { return 0.0; }, 0.7, 2.0);
    EXPECT_FALSE(zero.blew_up);
    for (double x : zero.x) EXPECT_EQ(x, 0.7);

    const double c = 2.5;
    const auto lin = solve_confinement_ode(0.0, [c](double) { return c; }, 0.7, 2.0);
    for (std::size_t i = 0; i < lin.r.size(); ++i) EXPECT_NEAR(lin.x[i], 0.7 + c * lin.r[i], 1e-12);
    EXPECT_NEAR(lin.final_x(), 0.7 + 2.0 * c, 1e-12);

    // σ₂ enters as |σ₂|
    const auto forced = solve_confinement_ode(-1.5, [](double) { return 0.0; }, 1.0, 1.0);
    EXPECT_NEAR(forced.final_x(), 2.5, 1e-12);
}

TEST(ConfinementOde, QuadraticGrowthBlowsUp) {
    const auto sol = solve_confinement_ode(0.0, [](double x) { return x * x; }, 1.0, 2.0);
    for (std::size_t i = 0; i < sol.r.size(); ++i)
        if (sol.r[i] <= 0.9) EXPECT_NEAR(sol.x[i], 1.0 / (1.0 - sol.r[i]), 1e-6);
    EXPECT_NEAR(sol.at(0.9), 10.0, 1e-6 * 10);
    ASSERT_TRUE(sol.blew_up);
    EXPECT_LT(sol.blow_up_r, 1.0);
    EXPECT_GT(sol.blow_up_r, 1.0 - 1e-6);
}

TEST(ConfinementOde, ErrorIsProportionalToTolerance) {
    auto err_at = [](double tol) {
        ConfinementOdeOptions o;
        o.tolerance = tol;
        const auto sol = solve_confinement_ode(0.0, [](double x) { return x * x; }, 1.0, 0.9, o);
        return std::abs(sol.final_x() - 10.0);
    };
    // asymptotic regime: a few hundred steps
    for (double tol : {1e-9, 1e-10}) {
        const double ratio = err_at(tol) / err_at(0.5 * tol);
        EXPECT_GT(ratio, 1.3) << tol;
        EXPECT_LT(ratio, 3.0) << tol;
    }
}

TEST(Hypotheses, Examples) {
    const FlowParams fp{1.0, 0.0};
    const auto small = check_hypotheses(make_circle(0.1, 128), AmbientField::zero(), fp, 1.0);
    EXPECT_EQ(small.threshold.K, 0.0);
    EXPECT_TRUE(small.curvature_ok);
    EXPECT_TRUE(small.case_b.applicable);
    EXPECT_EQ(small.case_b.M, std::numeric_limits<double>::infinity());
    EXPECT_TRUE(small.holds());

    const auto big = check_hypotheses(make_circle(1.0, 128), AmbientField::constant(3, 4), fp, 1.5);
    EXPECT_NEAR(big.C0, 5.0, 1e-12);
    EXPECT_FALSE(big.case_b.applicable);

    const auto tiny = check_hypotheses(make_circle(0.05, 128), AmbientField::constant(3, 4), fp, 0.1);
    EXPECT_TRUE(tiny.case_b.applicable);
    EXPECT_TRUE(tiny.holds());
}

TEST(Hypotheses, SaddleDiskOfCriterionSix) {
    const FlowParams fp{1.0, 0.0};
    const auto rep = check_hypotheses(make_circle(0.3, 256), AmbientField::saddle(), fp, 0.5);
    EXPECT_NEAR(rep.C0, 0.5 * std::sqrt(1.25), 1e-12);
    EXPECT_NEAR(rep.C1, std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(rep.C2, 2.0, 1e-12);
    EXPECT_TRUE(rep.case_b.applicable);
    EXPECT_TRUE(rep.curvature_ok);
    EXPECT_TRUE(rep.holds());
}

TEST(Hypotheses, CaseCAndAssertedGlobalBound) {
    const FlowParams fp{1.0, 0.0};
    HypothesisOptions o;
    o.assume_global_bound = true;
    const auto rep = check_hypotheses(make_circle(0.2, 128), AmbientField::constant(0.3, 0.4), fp, 2.0, o);
    EXPECT_TRUE(rep.case_a.applicable);
    EXPECT_NEAR(rep.T0, 1.0 / kPi, 1e-15);
    // x' = 0.5 from x(0) = 0.2
    EXPECT_NEAR(rep.x_T0, 0.2 + 0.5 / kPi, 1e-10);
    EXPECT_TRUE(rep.case_c.applicable);

    const auto grow = check_hypotheses(make_circle(0.2, 128), AmbientField::saddle(), fp, 2.0, o);
    EXPECT_FALSE(grow.case_a.applicable);
}
