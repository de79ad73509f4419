#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ambientflow/field.hpp"
#include "ambientflow/flow_params.hpp"
#include "ambientflow/geometry.hpp"

namespace ambientflow {

/// Discretization policy: time step, resampling, stop conditions, snapshots.
struct StepControl {
    enum class DtPolicy { Cfl, Fixed };
    DtPolicy dt_policy = DtPolicy::Cfl;
    double cfl = 0.2;         ///< dt = cfl·h²/σ₁ with h the minimum edge length
    double fixed_dt = 0.0;    ///< used when dt_policy == Fixed

    std::size_t resample_every = 1;  ///< 0 disables resampling
    std::size_t resolution = 0;      ///< vertex count kept by resampling; 0 = initial count

    double max_time = std::numeric_limits<double>::infinity();
    double area_floor = 1e-4;        ///< stop once A <= area_floor·A(0)
    std::size_t max_steps = 50'000'000;
    bool stop_on_nonconvex = false;  ///< otherwise the first event is recorded and the run goes on

    /// Snapshot every k steps (0: only the first and last states), plus each
    /// listed time (the step is shortened to land on it), plus whenever the
    /// area has dropped by `snapshot_area_ratio` since the last snapshot.
    std::size_t snapshot_every = 0;
    std::vector<double> snapshot_times;
    double snapshot_area_ratio = 0.0;

    void validate() const;
};

enum class StopReason { Extinct, NonEmbedded, NonConvexEvent, MaxTime, MaxSteps };
const char* to_string(StopReason r);

struct FlowState {
    ClosedCurve curve;
    CurveGeometry geom;
    double t = 0.0;
    bool embedded = true;
};

FlowState make_state(ClosedCurve curve, double t = 0.0);

/// F = σ₁k + σ₂ + ⟨V(γ), ν⟩ at every vertex.
std::vector<double> normal_speed(const ClosedCurve& curve, const CurveGeometry& geom, const AmbientField& field,
                                 const FlowParams& params);

/// The time step the control would take from this state.
double step_size(const FlowState& state, const FlowParams& params, const StepControl& control);

/// One explicit Euler step of length dt in the normal direction, then
/// resampling when `resample` is set. Loss of embeddedness is reported in the
/// returned state, not thrown.
FlowState step(const FlowState& state, const AmbientField& field, const FlowParams& params, double dt,
               bool resample, std::size_t resolution);

struct Snapshot {
    double t = 0.0;
    ClosedCurve curve;
};

/// Per-step scalar series. The integral columns are the ingredients of the
/// analytic L' and A' right sides, evaluated on the same state.
struct FlowSeries {
    std::vector<double> t, L, A, W, kmin, kmax, Fmin;
    std::vector<double> int_k2;   ///< ∫k² ds
    std::vector<double> int_kVn;  ///< ∫k⟨V,ν⟩ ds
    std::vector<double> int_Vn;   ///< ∫⟨V,ν⟩ ds
    std::vector<double> max_radius;

    std::size_t size() const { return t.size(); }
};

struct Trajectory {
    FlowParams params;
    AmbientField field = AmbientField::zero();
    StepControl control;
    std::vector<Snapshot> snapshots;
    FlowSeries series;
    StopReason stop = StopReason::MaxTime;
    double stop_time = 0.0;
    std::optional<double> nonconvex_time;  ///< first time min k fell below the event threshold
    double noise_floor = 0.0;               ///< curvature noise floor used for the event threshold
    std::size_t steps = 0;
};

/// Curvature noise floor of an equal-chord polygon: h²·max|k|³/12.
double curvature_noise_floor(const CurveGeometry& geom);

Trajectory evolve(const ClosedCurve& initial, const AmbientField& field, const FlowParams& params,
                  const StepControl& control);

// --- local graph flow ------------------------------------------------------

/// γ(x) = p + xτ + u(x)Rτ on a uniform grid over [-δ/2, δ/2].
struct GraphState {
    double delta = 0.0;
    std::vector<double> u;  ///< odd count, so x = 0 is a node
    Point2 anchor;
    Vec2 tau{1.0, 0.0};
    double t = 0.0;
    /// Closed curve hosting the graph; its intersections with x = ±δ/2 give
    /// the boundary values. Without a host the boundary values stay fixed.
    std::optional<ClosedCurve> host;

    double dx() const { return delta / static_cast<double>(u.size() - 1); }
    double x(std::size_t i) const { return -0.5 * delta + dx() * static_cast<double>(i); }
    double uxx_center() const;
};

/// Graph over [-δ/2, δ/2] with n nodes (n odd), anchored at the origin along e₁.
GraphState make_graph(double delta, std::size_t n, const std::function<double(double)>& profile);

struct GraphRun {
    std::vector<GraphState> states;  ///< snapshots per the control's cadence, first and last included
    std::vector<double> t, uxx0;     ///< every step
    bool graphical = true;
    double slope_cap = 10.0;
};

GraphRun evolve_graph(const GraphState& g, const AmbientField& field, const FlowParams& params,
                      const StepControl& control, double slope_cap = 10.0);

// --- extinction and rescaling ------------------------------------------------

struct Extinction {
    double T = 0.0;
    Point2 O;
};

/// T from a quadratic least-squares fit of A(t) over the last stretch of the
/// run (where A <= 4·A_final), 𝒪 = area centroid of the final snapshot.
Extinction estimate_extinction(const Trajectory& traj);

struct RescaledSnapshot {
    double t = 0.0, t_hat = 0.0, phi = 0.0;
    ClosedCurve curve;  ///< φ(γ − 𝒪)
};

struct RescaledSeries {
    std::vector<double> t, t_hat, L, A, kmin, kmax;
};

struct RescaledTrajectory {
    double T = 0.0;
    Point2 O;
    FlowParams params;
    AmbientField field = AmbientField::zero();
    std::vector<RescaledSnapshot> snapshots;
    RescaledSeries series;
};

/// t̂ = −½ log(1 − t/T) and φ = (2T − 2t)^{-1/2}.
double rescaled_time(double t, double T);
double rescale_factor(double t, double T);

RescaledTrajectory rescale_trajectory(const Trajectory& traj, double T, const Point2& O);

/// Rigid motion of a V = 0 trajectory by the flow of Killing(a, b, c):
/// rotation by −a·t about the origin, then the integral curve from the origin.
Trajectory rigid_motion_killing(const Trajectory& base, double a, double b, double c);

/// Max over interior snapshot triples and vertices of |FD k_t − RHS|, with
/// vertices matched by arc-length fraction (equal-chord snapshots of equal size).
struct CurvatureResidual {
    std::vector<double> t, residual;
    double max = 0.0;
};
CurvatureResidual curvature_residual(const Trajectory& traj);

}  // namespace ambientflow
