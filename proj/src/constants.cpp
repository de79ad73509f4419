#include "ambientflow/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ambientflow/error.hpp"

namespace ambientflow {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void FlowParams::validate() const {
    if (!(sigma1 > 0.0) || !std::isfinite(sigma1)) throw Error(ErrorKind::Domain, "sigma1 must be positive");
    if (!std::isfinite(sigma2)) throw Error(ErrorKind::Domain, "sigma2 must be finite");
}

const char* to_string(CubicBranch b) {
    switch (b) {
        case CubicBranch::Trigonometric: return "trigonometric";
        case CubicBranch::Hyperbolic: return "hyperbolic";
        case CubicBranch::Cbrt: return "cbrt";
    }
    return "?";
}

const char* to_string(ConfinementCase c) {
    switch (c) {
        case ConfinementCase::A: return "a";
        case ConfinementCase::B: return "b";
        case ConfinementCase::C: return "c";
    }
    return "?";
}

// --- K -----------------------------------------------------------------------

ThresholdK curvature_threshold_K(double sigma1, double sigma2, double C1, double C2) {
    if (!(sigma1 > 0.0)) throw Error(ErrorKind::Domain, "sigma1 must be positive");
    if (C1 < 0.0 || C2 < 0.0) throw Error(ErrorKind::Domain, "C1 and C2 must be non-negative");

    CubicReport r;
    const double beta = std::abs(sigma2) - sigma2;
    r.c3 = sigma1;
    r.c2 = -0.5 * beta;
    r.c1 = -3.0 * C1;
    r.c0 = -C2;
    r.shift = beta / (6.0 * sigma1);
    r.p = -(36.0 * sigma1 * C1 + beta * beta) / (12.0 * sigma1 * sigma1);
    r.q = -beta * beta * beta / (108.0 * sigma1 * sigma1 * sigma1) - beta * C1 / (2.0 * sigma1 * sigma1) - C2 / sigma1;
    r.discriminant = -(4.0 * r.p * r.p * r.p + 27.0 * r.q * r.q);

    const double p = r.p, q = r.q;
    double t;
    if (p == 0.0) {
        r.branch = CubicBranch::Cbrt;
        t = std::cbrt(-q);
    } else if (r.discriminant >= 0.0 || q == 0.0) {
        r.branch = CubicBranch::Trigonometric;
        const double arg = std::clamp(3.0 * q / (2.0 * p) * std::sqrt(-3.0 / p), -1.0, 1.0);
        t = 2.0 * std::sqrt(-p / 3.0) * std::cos(std::acos(arg) / 3.0);
    } else {
        r.branch = CubicBranch::Hyperbolic;
        const double arg = std::max(1.0, -3.0 * std::abs(q) / (2.0 * p) * std::sqrt(-3.0 / p));
        t = -2.0 * (std::abs(q) / q) * std::sqrt(-p / 3.0) * std::cosh(std::acosh(arg) / 3.0);
    }
    r.closed_form = std::max(0.0, r.shift + t);

    // Bisection: P is increasing beyond its larger critical point, where it is <= 0.
    r.cauchy_bound = 1.0 + std::max({std::abs(r.c2), std::abs(r.c1), std::abs(r.c0)}) / sigma1;
    double lo = std::max(0.0, (beta + std::sqrt(beta * beta + 36.0 * sigma1 * C1)) / (6.0 * sigma1));
    double hi = r.cauchy_bound;
    if (r.eval(lo) >= 0.0) {
        hi = lo;
    } else {
        for (int iter = 0; iter < 200; ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            (r.eval(mid) > 0.0 ? hi : lo) = mid;
        }
    }
    r.bisection = hi;

    if (std::abs(r.closed_form - r.bisection) > 1e-9 * std::max(1.0, r.bisection))
        throw Error(ErrorKind::InternalConsistency, "closed-form root " + std::to_string(r.closed_form) +
                                                        " disagrees with bisection " + std::to_string(r.bisection));
    return {r.closed_form, r};
}

// --- M -----------------------------------------------------------------------

double length_condition_rhs(double alpha, double sigma1, double sigma2, double C0, double C1) {
    const double g = alpha * C1 + (1.0 - alpha) * (1.0 - alpha) * C0 * C0 / sigma1;
    return (kPi * sigma2 + std::sqrt(kPi * kPi * sigma2 * sigma2 + 3.0 * kPi * kPi * sigma1 * g)) / g;
}

namespace {

// Same quantity as a function of g, written without cancellation:
// (πσ₂ + √(π²σ₂² + 3π²σ₁g))/g = 3πσ₁/(√(σ₂² + 3σ₁g) − σ₂).
double rhs_of_g(double g, double sigma1, double sigma2) {
    const double denom = std::sqrt(sigma2 * sigma2 + 3.0 * sigma1 * std::max(g, 0.0)) - sigma2;
    return denom > 0.0 ? 3.0 * kPi * sigma1 / denom : kInf;
}

}  // namespace

LengthThresholdM length_threshold_M(ConfinementCase which, double sigma1, double sigma2, double C0, double C1,
                                    std::optional<double> x_T0) {
    if (!(sigma1 > 0.0)) throw Error(ErrorKind::Domain, "sigma1 must be positive");
    LengthThresholdM out;
    if (which == ConfinementCase::C) {
        if (!x_T0) throw Error(ErrorKind::MissingInput, "case (c) needs x(T0)");
        const double beta = std::abs(sigma2) - sigma2;
        const double x = *x_T0;
        const double m1 = 4.0 * sigma1 * kPi / (beta + std::sqrt(beta * beta + 4.0 * kPi * x * x));
        const double m2 = sigma1 * kPi / (0.5 * beta + x);
        out.M = std::min(m1, m2);
        out.first_branch = m1;
        out.second_branch = m2;
        return out;
    }

    out.first_branch = rhs_of_g(C0 * C0 / sigma1, sigma1, sigma2);
    out.second_branch = std::numeric_limits<double>::quiet_NaN();
    double g;
    if (C0 > 0.0 && sigma1 * C1 < 2.0 * C0 * C0) {
        out.alpha = 1.0 - sigma1 * C1 / (2.0 * C0 * C0);
        g = C1 * (1.0 - sigma1 * C1 / (4.0 * C0 * C0));
        out.second_branch = rhs_of_g(g, sigma1, sigma2);
    } else {
        out.alpha = 0.0;
        g = C0 * C0 / sigma1;
    }
    out.M = rhs_of_g(g, sigma1, sigma2);
    return out;
}

// --- confinement ODE ---------------------------------------------------------

double ConfinementOdeSolution::at(double rr) const {
    if (r.empty() || rr < r.front() || rr > r.back()) throw Error(ErrorKind::Domain, "r outside the solved range");
    auto it = std::upper_bound(r.begin(), r.end(), rr);
    if (it == r.end()) return x.back();
    const std::size_t i = static_cast<std::size_t>(std::distance(r.begin(), it)) - 1;
    // cubic Hermite with the stored slopes
    const double h = r[i + 1] - r[i];
    const double u = (rr - r[i]) / h;
    const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
    const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
    return h00 * x[i] + h10 * h * dx[i] + h01 * x[i + 1] + h11 * h * dx[i + 1];
}

ConfinementOdeSolution solve_confinement_ode(double sigma2, const std::function<double(double)>& growth, double r0,
                                             double r_max, const ConfinementOdeOptions& opts) {
    if (!(r0 > 0.0)) throw Error(ErrorKind::Domain, "r0 must be positive");
    if (!(r_max >= 0.0)) throw Error(ErrorKind::Domain, "r_max must be non-negative");
    const double s2 = std::abs(sigma2);
    auto f = [&](double x) { return s2 + growth(x); };
    auto rk4 = [&](double x, double h) {
        const double k1 = f(x);
        const double k2 = f(x + 0.5 * h * k1);
        const double k3 = f(x + 0.5 * h * k2);
        const double k4 = f(x + h * k3);
        return x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    };

    ConfinementOdeSolution sol;
    double r = 0.0, x = r0;
    double r_comp = 0.0;  // Kahan compensation: thousands of tiny steps pile up near a pole
    sol.r.push_back(r);
    sol.x.push_back(x);
    sol.dx.push_back(f(x));
    double h = std::min(opts.initial_step, r_max);
    while (r < r_max) {
        h = std::min(h, r_max - r);
        if (h <= 1e-15 * std::max(1.0, r)) {
            // the step collapsed: the solution is singular here
            sol.blew_up = true;
            sol.blow_up_r = r;
            break;
        }
        const double full = rk4(x, h);
        const double half = rk4(rk4(x, 0.5 * h), 0.5 * h);
        const double err = std::abs(half - full) / 15.0;
        // per-unit-step control, floored at round-off so steep growth can still advance
        const double scale = std::max(1.0, std::abs(x));
        const double allowed = std::max(opts.tolerance * h, 4e-15) * scale;
        if (!std::isfinite(half) || err > allowed) {
            ++sol.rejected;
            const double factor = std::isfinite(err) && err > 0.0
                                      ? 0.9 * std::pow(allowed / err, 0.25)
                                      : 0.1;
            h *= std::clamp(factor, 0.1, 0.5);
            continue;
        }
        const double y = h - r_comp;
        const double t = r + y;
        r_comp = (t - r) - y;
        r = t;
        x = half;
        ++sol.steps;
        sol.r.push_back(r);
        sol.x.push_back(x);
        sol.dx.push_back(f(x));
        if (x > opts.ceiling) {
            sol.blew_up = true;
            sol.blow_up_r = r;
            break;
        }
        const double factor = err > 0.0 ? 0.9 * std::pow(allowed / err, 0.25) : 4.0;
        h *= std::clamp(factor, 0.2, 4.0);
    }
    return sol;
}

// --- hypotheses --------------------------------------------------------------

bool HypothesisReport::length_ok() const {
    return (case_a.applicable && case_a.length_ok) || (case_b.applicable && case_b.length_ok) ||
           (case_c.applicable && case_c.length_ok);
}

HypothesisReport check_hypotheses(const ClosedCurve& curve, const AmbientField& field, const FlowParams& params,
                                  double R0, const HypothesisOptions& opts) {
    params.validate();
    HypothesisReport rep;
    const CurveGeometry g = compute_geometry(curve);
    rep.min_k0 = g.min_curvature();
    rep.L0 = g.length;
    rep.A0 = g.area;
    rep.r0 = curve.max_radius();
    rep.R0 = R0;
    rep.sigma1 = params.sigma1;
    rep.sigma2 = params.sigma2;

    const FieldBounds b = estimate_bounds(field, R0, opts.bounds_grid);
    rep.C0 = b.C0;
    rep.C1 = b.C1;
    rep.C2 = b.C2;
    rep.threshold = curvature_threshold_K(params.sigma1, params.sigma2, b.C1, b.C2);
    rep.curvature_ok = rep.min_k0 > rep.threshold.K;

    // (a) global bound: a user assertion, plus a plateau check of sampled sup|V|
    {
        CaseVerdict& v = rep.case_a;
        const double big = opts.global_check_radius;
        const FieldBounds far = estimate_bounds(field, big, 64, 16);
        const FieldBounds half = estimate_bounds(field, 0.5 * big, 64, 16);
        const bool plateau = std::isfinite(far.C0) && far.C0 <= half.C0 * (1.0 + 1e-6) + 1e-12;
        v.applicable = opts.assume_global_bound && plateau;
        v.note = opts.assume_global_bound ? (plateau ? "asserted; sampled sup|V| plateaus"
                                                     : "asserted, but sampled sup|V| still grows on the check disk")
                                          : "not asserted";
        if (opts.assume_global_bound) {
            v.M = length_threshold_M(ConfinementCase::A, params.sigma1, params.sigma2, far.C0, far.C1).M;
            v.length_ok = rep.L0 < v.M;
        }
    }

    // (b) small disk with dominant diffusion
    {
        CaseVerdict& v = rep.case_b;
        const double limit = params.sigma1 / (std::abs(params.sigma2) + b.C0);
        v.applicable = R0 < limit && rep.r0 < R0;
        v.note = "R0 < sigma1/(|sigma2| + C0) = " + std::to_string(limit);
        v.M = length_threshold_M(ConfinementCase::B, params.sigma1, params.sigma2, b.C0, b.C1).M;
        v.length_ok = rep.L0 < v.M;
    }

    // (c) integrable growth
    {
        CaseVerdict& v = rep.case_c;
        rep.T0 = 1.0 / (params.sigma1 * kPi);
        const auto sol = solve_confinement_ode(params.sigma2, [&](double r) { return field.growth(r); }, rep.r0, rep.T0);
        rep.ode_blew_up = sol.blew_up;
        rep.area_ok = rep.A0 <= 1.0;
        if (!sol.blew_up) {
            rep.x_T0 = sol.final_x();
            v.M = length_threshold_M(ConfinementCase::C, params.sigma1, params.sigma2, b.C0, b.C1, rep.x_T0).M;
            v.length_ok = rep.L0 < v.M;
            v.applicable = rep.area_ok && R0 >= rep.x_T0;
            v.note = "x(T0) = " + std::to_string(rep.x_T0);
        } else {
            rep.x_T0 = kInf;
            v.note = "confinement ODE blew up before T0";
        }
    }
    return rep;
}

}  // namespace ambientflow
