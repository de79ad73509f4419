#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ambientflow/field.hpp"
#include "ambientflow/flow_params.hpp"
#include "ambientflow/geometry.hpp"

namespace ambientflow {

enum class CubicBranch { Trigonometric, Hyperbolic, Cbrt };
const char* to_string(CubicBranch b);

/// P(x) = σ₁x³ − ½(|σ₂|−σ₂)x² − 3C₁x − C₂ and its depressed form t³ + pt + q.
struct CubicReport {
    double c3 = 0.0, c2 = 0.0, c1 = 0.0, c0 = 0.0;  ///< P(x) = c3 x³ + c2 x² + c1 x + c0
    double shift = 0.0;                              ///< x = t + shift
    double p = 0.0, q = 0.0;
    double discriminant = 0.0;                       ///< −(4p³ + 27q²)
    CubicBranch branch = CubicBranch::Trigonometric;
    double closed_form = 0.0;
    double bisection = 0.0;
    double cauchy_bound = 0.0;

    double eval(double x) const { return ((c3 * x + c2) * x + c1) * x + c0; }
};

struct ThresholdK {
    double K = 0.0;
    CubicReport cubic;
};

/// Largest non-negative root of P. Throws InternalConsistency when the closed
/// form and bisection disagree by more than 1e-9·max(1, K).
ThresholdK curvature_threshold_K(double sigma1, double sigma2, double C1, double C2);

enum class ConfinementCase { A, B, C };
const char* to_string(ConfinementCase c);

/// Right side of the length condition for a given α ∈ [0,1), as printed.
double length_condition_rhs(double alpha, double sigma1, double sigma2, double C0, double C1);

struct LengthThresholdM {
    double M = 0.0;  ///< may be +infinity
    /// Cases (a)/(b): α used and both branch values of the closed form.
    double alpha = 0.0;
    double first_branch = 0.0;   ///< α = 0
    double second_branch = 0.0;  ///< α = 1 − σ₁C₁/(2C₀²); NaN when that α is not in [0,1)
};

/// Cases (a)/(b) need only σ₁, σ₂, C₀, C₁; case (c) needs x(T₀).
LengthThresholdM length_threshold_M(ConfinementCase which, double sigma1, double sigma2, double C0, double C1,
                                    std::optional<double> x_T0 = std::nullopt);

struct ConfinementOdeOptions {
    double tolerance = 1e-12;  ///< local error per unit step, relative to max(1,|x|)
    double ceiling = 1e12;     ///< blow-up threshold on x
    double initial_step = 1e-3;
};

struct ConfinementOdeSolution {
    std::vector<double> r, x, dx;
    bool blew_up = false;
    double blow_up_r = 0.0;  ///< where x crossed the ceiling
    std::size_t steps = 0, rejected = 0;

    double final_x() const { return x.back(); }
    /// Cubic Hermite interpolation in the table; requires r in range.
    double at(double r) const;
};

/// x'(r) = |σ₂| + R(x), x(0) = r₀ on [0, r_max] by adaptive classical RK4
/// (step doubling). Blow-up is a result, not an error.
ConfinementOdeSolution solve_confinement_ode(double sigma2, const std::function<double(double)>& growth, double r0,
                                             double r_max, const ConfinementOdeOptions& opts = {});

struct HypothesisOptions {
    bool assume_global_bound = false;  ///< user assertion for case (a)
    double global_check_radius = 1e3;  ///< disk for the sampled plausibility check of (a)
    std::size_t bounds_grid = 256;
};

struct CaseVerdict {
    bool applicable = false;  ///< the confinement condition itself holds
    double M = 0.0;
    bool length_ok = false;   ///< L₀ < M
    std::string note;
};

struct HypothesisReport {
    // measured inputs
    double min_k0 = 0.0, L0 = 0.0, A0 = 0.0, r0 = 0.0;
    double C0 = 0.0, C1 = 0.0, C2 = 0.0, R0 = 0.0;
    double sigma1 = 0.0, sigma2 = 0.0;
    ThresholdK threshold;
    // verdicts
    bool curvature_ok = false;  ///< condition (i): min k₀ > K
    CaseVerdict case_a, case_b, case_c;
    double T0 = 0.0, x_T0 = 0.0;
    bool ode_blew_up = false;
    bool area_ok = false;       ///< case (c) extra: A₀ ≤ 1

    bool length_ok() const;     ///< (ii) under some applicable case
    bool holds() const { return curvature_ok && length_ok(); }
};

HypothesisReport check_hypotheses(const ClosedCurve& curve, const AmbientField& field, const FlowParams& params,
                                  double R0, const HypothesisOptions& opts = {});

}  // namespace ambientflow
