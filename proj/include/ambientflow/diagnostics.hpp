#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ambientflow/field.hpp"
#include "ambientflow/flow.hpp"

namespace ambientflow {

/// FD-in-time slope minus analytic right side for L, A and ∫k ds on the
/// per-step series. Relative columns divide by σ₁∫k²ds (L') and 2πσ₁ (A').
struct IdentityResidualReport {
    std::vector<double> t;
    std::vector<double> L, A, K;  ///< signed residuals; K is for ∫k ds
    double max_L_rel = 0.0, max_A_rel = 0.0, max_K = 0.0;
};

IdentityResidualReport identity_residuals(const Trajectory& traj);

/// Ratios of successive level maxima (coarse / fine) and the implied orders
/// log2(ratio) for a refinement ladder in which dt halves per level.
struct IdentityConvergence {
    std::vector<double> max_L_rel, max_A_rel;
    std::vector<double> ratio_L, ratio_A;
};
IdentityConvergence identity_convergence(const std::vector<IdentityResidualReport>& levels);

// --- speed bounds in the angle parametrization ----------------------------

struct SpeedSample {
    double t = 0.0;
    bool convex = true;          ///< false: skipped
    double F_max = 0.0, F_min = 0.0;
    double sup_F_theta = 0.0;
    double int_abs_F = 0.0;
    /// right side minus left side of the three estimates (negative = violation)
    double margin_gradient = 0.0;  ///< M + ∫|F| − sup|F_θ|
    double margin_max = 0.0;       ///< M₁(1 + ∫|F|) − F_max
    double margin_local = 0.0;     ///< min over |θ−θ*| <= 1/(4π) of 2F + M/2π − F_max
};

struct SpeedMonitor {
    double M = 0.0, M1 = 0.0;
    double C0 = 0.0, C1 = 0.0, K = 0.0;
    std::vector<SpeedSample> samples;
    std::vector<std::string> violations;
    std::size_t skipped = 0;
};

/// Evaluates the three speed estimates on every snapshot; M is set from the
/// first snapshot. `m` is the angle-grid size (0: vertex count).
SpeedMonitor speed_monitor(const Trajectory& traj, const FieldBounds& bounds, double K, std::size_t m = 0);

// --- geometric estimate -----------------------------------------------------

struct GeometricEstimateSample {
    double t = 0.0;
    bool convex = true;
    double k_star = 0.0, L_over_A = 0.0;
    bool verdict = false;  ///< k* < L/A; false also for skipped snapshots
};

std::vector<GeometricEstimateSample> geometric_estimate(const Trajectory& traj, std::size_t m = 1024);

// --- rescaled monitors --------------------------------------------------------

struct GaussianSample {
    double t_hat = 0.0;
    double R = 0.0;             ///< ∫ρ dŝ
    double dissipation = 0.0;   ///< ∫Q²ρ dŝ
    double forcing = 0.0;       ///< σ₂ term of R'
    double field_term = 0.0;    ///< V term of R'
    double rhs = 0.0;           ///< −dissipation + forcing − field_term
    double max_abs_Q = 0.0;
    double fd_slope = 0.0;      ///< NaN at the ends
    double residual = 0.0;      ///< |fd_slope − rhs|, NaN at the ends
};

struct GaussianMonitor {
    std::vector<GaussianSample> samples;
    double max_rel_residual = 0.0;  ///< max residual / R over interior samples
    double max_rel_increase = 0.0;  ///< max (R_{j+1} − R_j)/R_j, 0 when R never increases
};

/// ρ = exp(−|γ̂|²/(2σ₁)), Q = ⟨γ̂,ν⟩/√σ₁ + √σ₁k̂ + √(2T)σ₂e^{−t̂}/(2√σ₁), and
/// R' = −∫Q²ρ + (2Tσ₂²e^{−2t̂}/(4σ₁))∫ρ − (√(2T)e^{−t̂}/σ₁)∫(⟨γ̂,ν⟩ + σ₁k̂)⟨V,ν⟩ρ.
GaussianMonitor gaussian_monitor(const RescaledTrajectory& rescaled);

/// Same sums for a single rescaled curve (used on synthetic self-shrinkers).
GaussianSample gaussian_sample(const ClosedCurve& curve, double t_hat, const RescaledTrajectory& context);

struct RoundnessSample {
    double t_hat = 0.0;
    double A = 0.0, L = 0.0, kmin = 0.0, kmax = 0.0, ratio = 0.0;
    double slack = 0.0;   ///< 2k̂max Â − L̂
    bool convex = true;
    double f = 0.0;       ///< NaN when not convex
};

/// `m` is the angle-grid size for f (0: vertex count).
std::vector<RoundnessSample> rescaled_roundness(const RescaledTrajectory& rescaled, std::size_t m = 0);

/// f(t̂) = ∫u dθ with u = −1 + σ₁k̂(k̂_θθ + k̂) − 2√(2T)σ₂e^{−t̂}k̂ on a rescaled convex curve.
double rescaled_f(const ClosedCurve& curve, double t_hat, double T, const FlowParams& params, std::size_t m = 0);

// --- derivative boundedness ---------------------------------------------------

struct DerivativeSample {
    double t = 0.0;
    double max_ks = 0.0, max_kss = 0.0;
};

struct DerivativeReport {
    std::vector<DerivativeSample> samples;
    bool bounded = true;  ///< all values finite up to the last snapshot
};

DerivativeReport derivative_boundedness(const Trajectory& traj);

}  // namespace ambientflow
