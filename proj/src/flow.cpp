#include "ambientflow/flow.hpp"

#include <algorithm>
#include <cmath>

#include "ambientflow/error.hpp"

namespace ambientflow {

void StepControl::validate() const {
    if (dt_policy == DtPolicy::Cfl && !(cfl > 0.0)) throw Error(ErrorKind::Domain, "cfl must be positive");
    if (dt_policy == DtPolicy::Fixed && !(fixed_dt > 0.0)) throw Error(ErrorKind::Domain, "fixed dt must be positive");
    if (!(area_floor > 0.0) || area_floor >= 1.0) throw Error(ErrorKind::Domain, "area floor must be in (0,1)");
    if (!(max_time > 0.0)) throw Error(ErrorKind::Domain, "max time must be positive");
    if (snapshot_area_ratio < 0.0 || snapshot_area_ratio >= 1.0)
        throw Error(ErrorKind::Domain, "snapshot area ratio must be in [0,1)");
}

const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::Extinct: return "extinct";
        case StopReason::NonEmbedded: return "nonembedded";
        case StopReason::NonConvexEvent: return "nonconvex-event";
        case StopReason::MaxTime: return "max-time";
        case StopReason::MaxSteps: return "max-steps";
    }
    return "?";
}

FlowState make_state(ClosedCurve curve, double t) {
    CurveGeometry g = compute_geometry(curve);
    return {std::move(curve), std::move(g), t, true};
}

std::vector<double> normal_speed(const ClosedCurve& curve, const CurveGeometry& geom, const AmbientField& field,
                                 const FlowParams& params) {
    const std::size_t n = curve.size();
    std::vector<double> F(n);
    const bool zero = field.is_zero();
    for (std::size_t i = 0; i < n; ++i) {
        F[i] = params.sigma1 * geom.curvature[i] + params.sigma2;
        if (!zero) F[i] += dot(field.value(curve[i]), geom.normal[i]);
    }
    return F;
}

double step_size(const FlowState& state, const FlowParams& params, const StepControl& control) {
    if (control.dt_policy == StepControl::DtPolicy::Fixed) return control.fixed_dt;
    const double h = state.curve.min_edge_length();
    return control.cfl * h * h / params.sigma1;
}

FlowState step(const FlowState& state, const AmbientField& field, const FlowParams& params, double dt,
               bool resample, std::size_t resolution) {
    const auto F = normal_speed(state.curve, state.geom, field, params);
    const std::size_t n = state.curve.size();
    std::vector<Point2> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = state.curve[i] + (dt * F[i]) * state.geom.normal[i];

    const bool ok = signed_area(pts) > 0.0 && is_simple(pts);
    ClosedCurve next = ClosedCurve::trusted(std::move(pts));
    if (ok && resample) next = resample_arclength(next, resolution ? resolution : n);
    FlowState out = make_state(std::move(next), state.t + dt);
    out.embedded = ok;
    return out;
}

double curvature_noise_floor(const CurveGeometry& geom) {
    double h = 0.0, kmax = 0.0;
    for (std::size_t i = 0; i < geom.size(); ++i) {
        h = std::max(h, geom.ds[i]);
        kmax = std::max(kmax, std::abs(geom.curvature[i]));
    }
    return h * h * kmax * kmax * kmax / 12.0;
}

namespace {

void record(FlowSeries& s, const FlowState& st, const AmbientField& field, const FlowParams& params) {
    const auto& g = st.geom;
    const auto F = normal_speed(st.curve, g, field, params);
    double k2 = 0.0, kvn = 0.0, vn = 0.0;
    const bool zero = field.is_zero();
    for (std::size_t i = 0; i < g.size(); ++i) {
        k2 += g.curvature[i] * g.curvature[i] * g.ds[i];
        if (!zero) {
            const double v = dot(field.value(st.curve[i]), g.normal[i]);
            kvn += g.curvature[i] * v * g.ds[i];
            vn += v * g.ds[i];
        }
    }
    s.t.push_back(st.t);
    s.L.push_back(g.length);
    s.A.push_back(g.area);
    s.W.push_back(g.turning_number);
    s.kmin.push_back(g.min_curvature());
    s.kmax.push_back(g.max_curvature());
    s.Fmin.push_back(*std::min_element(F.begin(), F.end()));
    s.int_k2.push_back(k2);
    s.int_kVn.push_back(kvn);
    s.int_Vn.push_back(vn);
    s.max_radius.push_back(st.curve.max_radius());
}

}  // namespace

Trajectory evolve(const ClosedCurve& initial, const AmbientField& field, const FlowParams& params,
                  const StepControl& control) {
    params.validate();
    control.validate();
    const std::size_t n = control.resolution ? control.resolution : initial.size();

    Trajectory traj;
    traj.params = params;
    traj.field = field;
    traj.control = control;

    FlowState st = make_state(control.resample_every ? resample_arclength(initial, n) : initial);
    const double A0 = st.geom.area;
    traj.noise_floor = curvature_noise_floor(st.geom);
    record(traj.series, st, field, params);
    traj.snapshots.push_back({st.t, st.curve});

    std::vector<double> times = control.snapshot_times;
    std::sort(times.begin(), times.end());
    std::size_t next_time = 0;
    while (next_time < times.size() && times[next_time] <= 0.0) ++next_time;
    double snap_area = A0;

    auto finish = [&](StopReason why) {
        traj.stop = why;
        traj.stop_time = st.t;
        if (traj.snapshots.back().t != st.t) traj.snapshots.push_back({st.t, st.curve});
    };

    while (true) {
        if (st.t >= control.max_time) {
            finish(StopReason::MaxTime);
            return traj;
        }
        if (traj.steps >= control.max_steps) {
            finish(StopReason::MaxSteps);
            return traj;
        }

        double dt = step_size(st, params, control);
        // land on a stop or snapshot time instead of falling a round-off short of it
        const double slack = 1e-6 * dt;
        double target = st.t + dt;
        bool on_time = false;
        if (next_time < times.size() && target + slack >= times[next_time]) {
            target = times[next_time];
            on_time = true;
        }
        if (target + slack >= control.max_time) target = control.max_time;
        dt = target - st.t;

        const bool resample = control.resample_every && (traj.steps + 1) % control.resample_every == 0;
        FlowState next = step(st, field, params, dt, resample, n);
        next.t = target;
        ++traj.steps;
        if (!next.embedded) {
            st = std::move(next);
            record(traj.series, st, field, params);
            finish(StopReason::NonEmbedded);
            return traj;
        }
        st = std::move(next);
        record(traj.series, st, field, params);

        const double kmin = st.geom.min_curvature();
        if (!traj.nonconvex_time && kmin < -10.0 * curvature_noise_floor(st.geom)) {
            traj.nonconvex_time = st.t;
            if (control.stop_on_nonconvex) {
                finish(StopReason::NonConvexEvent);
                return traj;
            }
        }
        if (st.geom.area <= control.area_floor * A0) {
            finish(StopReason::Extinct);
            return traj;
        }

        bool snap = false;
        if (on_time) {
            snap = true;
            while (next_time < times.size() && times[next_time] <= st.t) ++next_time;
        }
        if (control.snapshot_every && traj.steps % control.snapshot_every == 0) snap = true;
        if (control.snapshot_area_ratio > 0.0 && st.geom.area <= control.snapshot_area_ratio * snap_area) snap = true;
        if (snap) {
            traj.snapshots.push_back({st.t, st.curve});
            snap_area = st.geom.area;
        }
    }
}

// --- graph flow --------------------------------------------------------------

double GraphState::uxx_center() const {
    const std::size_t m = u.size() / 2;
    const double h = dx();
    return (u[m + 1] - 2.0 * u[m] + u[m - 1]) / (h * h);
}

GraphState make_graph(double delta, std::size_t n, const std::function<double(double)>& profile) {
    if (!(delta > 0.0)) throw Error(ErrorKind::Domain, "graph interval must be positive");
    if (n < 5 || n % 2 == 0) throw Error(ErrorKind::Domain, "graph needs an odd node count >= 5");
    GraphState g;
    g.delta = delta;
    g.u.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.u[i] = profile(g.x(i));
    return g;
}

namespace {

// Height of the host curve above x = xb in the graph frame, choosing the
// crossing nearest the previous value.
double host_height(const ClosedCurve& host, const GraphState& g, double xb, double previous) {
    const Vec2 nrm = rot90(g.tau);
    const std::size_t n = host.size();
    double best = previous, gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = host[i] - g.anchor, b = host[(i + 1) % n] - g.anchor;
        const double xa = dot(a, g.tau), xb2 = dot(b, g.tau);
        if ((xa - xb) * (xb2 - xb) > 0.0 || xa == xb2) continue;
        const double f = (xb - xa) / (xb2 - xa);
        const double y = dot(a, nrm) + f * (dot(b, nrm) - dot(a, nrm));
        if (std::abs(y - previous) < gap) {
            gap = std::abs(y - previous);
            best = y;
        }
    }
    return best;
}

}  // namespace

GraphRun evolve_graph(const GraphState& g0, const AmbientField& field, const FlowParams& params,
                      const StepControl& control, double slope_cap) {
    params.validate();
    control.validate();
    GraphRun run;
    run.slope_cap = slope_cap;
    GraphState g = g0;
    const std::size_t n = g.u.size();
    const double h = g.dx();
    const Vec2 nrm = rot90(g.tau);

    std::optional<FlowState> host;
    if (g.host) host = make_state(*g.host, g.t);

    run.states.push_back(g);
    run.t.push_back(g.t);
    run.uxx0.push_back(g.uxx_center());

    std::vector<double> rate(n, 0.0);
    std::size_t steps = 0;
    while (g.t < control.max_time && steps < control.max_steps) {
        double dt = control.dt_policy == StepControl::DtPolicy::Fixed ? control.fixed_dt
                                                                       : control.cfl * h * h / params.sigma1;
        if (host) dt = std::min(dt, step_size(*host, params, control));
        if (g.t + dt * (1.0 + 1e-6) >= control.max_time) dt = control.max_time - g.t;

        double max_slope = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double ux = (g.u[i + 1] - g.u[i - 1]) / (2.0 * h);
            const double uxx = (g.u[i + 1] - 2.0 * g.u[i] + g.u[i - 1]) / (h * h);
            const double w = std::sqrt(1.0 + ux * ux);
            const Point2 p = g.anchor + g.x(i) * g.tau + g.u[i] * nrm;
            const Vec2 nu = (nrm - ux * g.tau) / w;
            rate[i] = params.sigma1 * uxx / (w * w) + w * (params.sigma2 + dot(field.value(p), nu));
            max_slope = std::max(max_slope, std::abs(ux));
        }
        if (max_slope > slope_cap) {
            run.graphical = false;
            break;
        }
        for (std::size_t i = 1; i + 1 < n; ++i) g.u[i] += dt * rate[i];
        g.t += dt;
        if (host) {
            FlowState next = step(*host, field, params, dt, control.resample_every != 0, host->curve.size());
            if (!next.embedded) break;
            host = std::move(next);
            g.u[0] = host_height(host->curve, g, g.x(0), g.u[0]);
            g.u[n - 1] = host_height(host->curve, g, g.x(n - 1), g.u[n - 1]);
        }
        ++steps;
        run.t.push_back(g.t);
        run.uxx0.push_back(g.uxx_center());
        if (control.snapshot_every && steps % control.snapshot_every == 0) run.states.push_back(g);
    }
    if (host) g.host = host->curve;
    if (run.states.back().t != g.t) run.states.push_back(g);
    return run;
}

// --- extinction and rescaling ------------------------------------------------

Extinction estimate_extinction(const Trajectory& traj) {
    const auto& s = traj.series;
    if (s.size() < 5 || traj.snapshots.empty()) throw Error(ErrorKind::EstimatorInapplicable, "trajectory too short");
    const double A0 = s.A.front(), Af = s.A.back();
    if (!(Af > 0.0) || Af > 1e-2 * A0)
        throw Error(ErrorKind::EstimatorInapplicable, "trajectory did not approach extinction (A/A0 = " +
                                                          std::to_string(Af / A0) + ")");

    std::size_t first = s.size() - 1;
    while (first > 0 && s.A[first - 1] <= 4.0 * Af) --first;
    first = std::min(first, s.size() - 5);

    // least squares A ≈ c0 + c1 τ + c2 τ², τ = (t − t_last)/span
    const double tl = s.t.back();
    const double span = tl - s.t[first];
    double m[3][4] = {};
    for (std::size_t i = first; i < s.size(); ++i) {
        const double x = (s.t[i] - tl) / span;
        const double b[3] = {1.0, x, x * x};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) m[r][c] += b[r] * b[c];
            m[r][3] += b[r] * s.A[i];
        }
    }
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
        std::swap(m[c], m[piv]);
        for (int r = 0; r < 3; ++r) {
            if (r == c) continue;
            const double f = m[r][c] / m[c][c];
            for (int k = c; k < 4; ++k) m[r][k] -= f * m[c][k];
        }
    }
    const double c0 = m[0][3] / m[0][0], c1 = m[1][3] / m[1][1], c2 = m[2][3] / m[2][2];

    // smallest root beyond the last sample
    double root;
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (!(c1 < 0.0) || disc < 0.0) throw Error(ErrorKind::EstimatorInapplicable, "area is not decreasing to zero");
    if (std::abs(c2) < 1e-14 * std::abs(c1)) {
        root = -c0 / c1;
    } else {
        // stable quadratic roots; pick the one nearest zero on the right
        const double q = -0.5 * (c1 - std::sqrt(disc));
        const double r1 = q / c2, r2 = c0 / q;
        root = std::numeric_limits<double>::infinity();
        for (double r : {r1, r2})
            if (r >= -1e-12 && r < root) root = r;
    }
    if (!std::isfinite(root)) throw Error(ErrorKind::EstimatorInapplicable, "no extinction root");
    return {tl + std::max(root, 0.0) * span, traj.snapshots.back().curve.centroid()};
}

double rescaled_time(double t, double T) {
    if (!(t < T)) throw Error(ErrorKind::Domain, "time at or past extinction");
    return -0.5 * std::log1p(-t / T);
}

double rescale_factor(double t, double T) {
    if (!(t < T)) throw Error(ErrorKind::Domain, "time at or past extinction");
    return 1.0 / std::sqrt(2.0 * (T - t));
}

RescaledTrajectory rescale_trajectory(const Trajectory& traj, double T, const Point2& O) {
    if (!(T > 0.0)) throw Error(ErrorKind::Domain, "extinction time must be positive");
    RescaledTrajectory out;
    out.T = T;
    out.O = O;
    out.params = traj.params;
    out.field = traj.field;
    for (const auto& snap : traj.snapshots) {
        const double phi = rescale_factor(snap.t, T);
        out.snapshots.push_back({snap.t, rescaled_time(snap.t, T), phi, snap.curve.translated(-O).scaled(phi)});
    }
    const auto& s = traj.series;
    auto& r = out.series;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double phi = rescale_factor(s.t[i], T);
        r.t.push_back(s.t[i]);
        r.t_hat.push_back(rescaled_time(s.t[i], T));
        r.L.push_back(phi * s.L[i]);
        r.A.push_back(phi * phi * s.A[i]);
        r.kmin.push_back(s.kmin[i] / phi);
        r.kmax.push_back(s.kmax[i] / phi);
    }
    return out;
}

Trajectory rigid_motion_killing(const Trajectory& base, double a, double b, double c) {
    if (!base.field.is_zero()) throw Error(ErrorKind::Domain, "rigid motion needs a V = 0 base trajectory");
    Trajectory out = base;
    out.field = AmbientField::killing(a, b, c);
    for (auto& snap : out.snapshots)
        snap.curve = snap.curve.rotated(-a * snap.t).translated(killing_integral_curve(-a, b, c, snap.t));
    // speed and field integrals refer to the base field; they are not carried over
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto& s = out.series;
    std::fill(s.Fmin.begin(), s.Fmin.end(), nan);
    std::fill(s.int_kVn.begin(), s.int_kVn.end(), nan);
    std::fill(s.int_Vn.begin(), s.int_Vn.end(), nan);
    std::fill(s.max_radius.begin(), s.max_radius.end(), nan);
    return out;
}

CurvatureResidual curvature_residual(const Trajectory& traj) {
    CurvatureResidual out;
    const auto& snaps = traj.snapshots;
    const auto& field = traj.field;
    const double s1 = traj.params.sigma1, s2 = traj.params.sigma2;
    for (std::size_t j = 1; j + 1 < snaps.size(); ++j) {
        const auto& prev = snaps[j - 1];
        const auto& cur = snaps[j];
        const auto& next = snaps[j + 1];
        const std::size_t n = cur.curve.size();
        if (prev.curve.size() != n || next.curve.size() != n)
            throw Error(ErrorKind::InsufficientData, "curvature residual needs snapshots of equal size");
        const auto gp = compute_geometry(prev.curve);
        const auto g = compute_geometry(cur.curve);
        const auto gn = compute_geometry(next.curve);
        const auto F = normal_speed(cur.curve, g, field, traj.params);

        // three-point derivative weights at the middle time
        const double h1 = cur.t - prev.t, h2 = next.t - cur.t;
        const double wp = -h2 / (h1 * (h1 + h2)), wc = (h2 - h1) / (h1 * h2), wn = h1 / (h2 * (h1 + h2));

        const double h = g.length / static_cast<double>(n);
        // tangential velocity of the arc-length-fraction parametrization
        // relative to pure normal motion, zero at vertex 0
        std::vector<double> cum(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t i1 = (i + 1) % n;
            cum[i + 1] = cum[i] + 0.5 * h * (g.curvature[i] * F[i] + g.curvature[i1] * F[i1]);
        }

        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t im = (i + n - 1) % n, ip = (i + 1) % n;
            const double k = g.curvature[i];
            const double ks = (g.curvature[ip] - g.curvature[im]) / (2.0 * h);
            const double kss = (g.curvature[ip] - 2.0 * k + g.curvature[im]) / (h * h);
            const Vec2 tau = g.tangent[i], nu = g.normal[i];
            double rhs = s1 * kss + s1 * k * k * k + s2 * k * k;
            if (!field.is_zero()) {
                const FieldJet jet = field.jet(cur.curve[i], 2);
                rhs += -k * (2.0 * dot(jet.first(tau), tau) - dot(jet.first(nu), nu)) + dot(jet.second(tau, tau), nu);
                rhs -= ks * dot(jet.value, tau);
            }
            const double vtan = cum[i] - (static_cast<double>(i) / static_cast<double>(n)) * cum[n];
            rhs += ks * vtan;
            const double kt = wp * gp.curvature[i] + wc * k + wn * gn.curvature[i];
            worst = std::max(worst, std::abs(kt - rhs));
        }
        out.t.push_back(cur.t);
        out.residual.push_back(worst);
        out.max = std::max(out.max, worst);
    }
    return out;
}

}  // namespace ambientflow
