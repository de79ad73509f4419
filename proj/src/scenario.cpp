#include "ambientflow/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "ambientflow/constants.hpp"
#include "ambientflow/diagnostics.hpp"
#include "ambientflow/error.hpp"
#include "ambientflow/io.hpp"

#ifndef AMBIENTFLOW_VERSION
#define AMBIENTFLOW_VERSION "0.0.0"
#endif

namespace ambientflow {

namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Non-finite reals are stored as strings so the manifest stays valid JSON.
Json num(double x) {
    if (std::isfinite(x)) return x;
    return format_real(x);
}

double as_real(const Json& j, const std::string& what) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
        if (s == "nan") return std::nan("");
    }
    if (j.is_null()) return kInf;
    throw Error(ErrorKind::Config, what + " must be a number");
}

// Rejects keys outside `allowed` so that typos do not silently fall back to defaults.
void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw Error(ErrorKind::Config, where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw Error(ErrorKind::Config, "unknown key '" + key + "' in " + where);
    }
}

double real_or(const Json& j, const char* key, double fallback) {
    return j.contains(key) ? as_real(j[key], key) : fallback;
}

std::size_t count_or(const Json& j, const char* key, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_unsigned()) throw Error(ErrorKind::Config, std::string(key) + " must be a non-negative integer");
    return j[key].get<std::size_t>();
}

Json control_to_json(const StepControl& c) {
    Json j;
    j["dt_policy"] = c.dt_policy == StepControl::DtPolicy::Cfl ? "cfl" : "fixed";
    j["cfl"] = c.cfl;
    j["dt"] = c.fixed_dt;
    j["resample_every"] = c.resample_every;
    j["resolution"] = c.resolution;
    j["max_time"] = num(c.max_time);
    j["area_floor"] = c.area_floor;
    j["max_steps"] = c.max_steps;
    j["stop_on_nonconvex"] = c.stop_on_nonconvex;
    j["snapshot_every"] = c.snapshot_every;
    j["snapshot_times"] = c.snapshot_times;
    j["snapshot_area_ratio"] = c.snapshot_area_ratio;
    return j;
}

StepControl control_from_json(const Json& j) {
    check_keys(j, {"dt_policy", "cfl", "dt", "resample_every", "resolution", "max_time", "area_floor", "max_steps",
                   "stop_on_nonconvex", "snapshot_every", "snapshot_times", "snapshot_area_ratio"},
               "control");
    StepControl c;
    if (j.contains("dt_policy")) {
        const std::string p = j["dt_policy"].get<std::string>();
        if (p == "cfl") c.dt_policy = StepControl::DtPolicy::Cfl;
        else if (p == "fixed") c.dt_policy = StepControl::DtPolicy::Fixed;
        else throw Error(ErrorKind::Config, "dt_policy must be \"cfl\" or \"fixed\"");
    } else if (j.contains("dt")) {
        c.dt_policy = StepControl::DtPolicy::Fixed;
    }
    c.cfl = real_or(j, "cfl", c.cfl);
    c.fixed_dt = real_or(j, "dt", c.fixed_dt);
    c.resample_every = count_or(j, "resample_every", c.resample_every);
    c.resolution = count_or(j, "resolution", c.resolution);
    c.max_time = real_or(j, "max_time", c.max_time);
    c.area_floor = real_or(j, "area_floor", c.area_floor);
    c.max_steps = count_or(j, "max_steps", c.max_steps);
    if (j.contains("stop_on_nonconvex")) c.stop_on_nonconvex = j["stop_on_nonconvex"].get<bool>();
    c.snapshot_every = count_or(j, "snapshot_every", c.snapshot_every);
    if (j.contains("snapshot_times"))
        for (const auto& t : j["snapshot_times"]) c.snapshot_times.push_back(as_real(t, "snapshot_times"));
    c.snapshot_area_ratio = real_or(j, "snapshot_area_ratio", c.snapshot_area_ratio);
    c.validate();
    return c;
}

Json params_to_json(const FlowParams& p) { return {{"sigma1", p.sigma1}, {"sigma2", p.sigma2}}; }

FlowParams params_from_json(const Json& j) {
    check_keys(j, {"sigma1", "sigma2"}, "params");
    FlowParams p;
    p.sigma1 = real_or(j, "sigma1", p.sigma1);
    p.sigma2 = real_or(j, "sigma2", p.sigma2);
    p.validate();
    return p;
}

AmbientField field_from_json(const Json& j) { return AmbientField::from_json(j.dump()); }
Json field_to_json(const AmbientField& f) { return Json::parse(f.to_json()); }

Json point_json(Point2 p) { return Json::array({num(p.x), num(p.y)}); }

}  // namespace

// --- config ------------------------------------------------------------------

ClosedCurve CurveSpec::build() const {
    switch (kind) {
        case Kind::Circle: return make_circle(radius, vertices, center);
        case Kind::Ellipse: return make_ellipse(a, b, vertices, center);
        case Kind::ParabolaClosure: return build_parabola_closure(epsilon, delta, vertices).curve;
        case Kind::File: {
            auto c = read_curve(path);
            return vertices ? resample_arclength(c, vertices) : c;
        }
    }
    throw Error(ErrorKind::Config, "unknown curve kind");
}

Json CurveSpec::to_json() const {
    Json j;
    switch (kind) {
        case Kind::Circle: j = {{"type", "circle"}, {"radius", radius}, {"center", point_json(center)}}; break;
        case Kind::Ellipse: j = {{"type", "ellipse"}, {"a", a}, {"b", b}, {"center", point_json(center)}}; break;
        case Kind::ParabolaClosure: j = {{"type", "parabola-closure"}, {"epsilon", epsilon}, {"delta", delta}}; break;
        case Kind::File: j = {{"type", "file"}, {"path", path}}; break;
    }
    j["vertices"] = vertices;
    return j;
}

CurveSpec CurveSpec::from_json(const Json& j) {
    check_keys(j, {"type", "radius", "a", "b", "epsilon", "delta", "center", "vertices", "path"}, "curve");
    if (!j.contains("type") || !j["type"].is_string()) throw Error(ErrorKind::Config, "curve needs a string \"type\"");
    CurveSpec c;
    const std::string type = j["type"];
    if (type == "circle") c.kind = Kind::Circle;
    else if (type == "ellipse") c.kind = Kind::Ellipse;
    else if (type == "parabola-closure") c.kind = Kind::ParabolaClosure;
    else if (type == "file") c.kind = Kind::File;
    else throw Error(ErrorKind::Config, "unknown curve type '" + type + "'");
    c.radius = real_or(j, "radius", c.radius);
    c.a = real_or(j, "a", c.a);
    c.b = real_or(j, "b", c.b);
    c.epsilon = real_or(j, "epsilon", c.epsilon);
    c.delta = real_or(j, "delta", c.delta);
    if (j.contains("center")) {
        const auto& p = j["center"];
        if (!p.is_array() || p.size() != 2) throw Error(ErrorKind::Config, "center must be [x, y]");
        c.center = {as_real(p[0], "center"), as_real(p[1], "center")};
    }
    c.vertices = count_or(j, "vertices", c.kind == Kind::File ? 0 : c.vertices);
    if (c.kind == Kind::File) {
        if (!j.contains("path")) throw Error(ErrorKind::Config, "file curve needs \"path\"");
        c.path = j["path"].get<std::string>();
    }
    return c;
}

ScenarioConfig ScenarioConfig::parse(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const std::exception& e) {
        throw Error(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(j);
}

ScenarioConfig ScenarioConfig::from_json(const Json& j) {
    check_keys(j, {"scenario", "curve", "field", "params", "control", "output", "ladder", "curves", "fields",
                   "epsilons", "region_radius", "rescaled_step", "matched_times", "matched_fraction", "constants"},
               "config");
    ScenarioConfig c;
    try {
        if (!j.contains("scenario")) throw Error(ErrorKind::Config, "config needs \"scenario\"");
        c.scenario = j["scenario"].get<std::string>();
        static const char* known[] = {"baseline-circle", "killing-equivalence", "loss-of-convexity",
                                      "round-point",     "identity-audit",      "constants"};
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return c.scenario == k; }) ==
            std::end(known))
            throw Error(ErrorKind::Config, "unknown scenario '" + c.scenario + "'");
        if (j.contains("curve")) c.curve = CurveSpec::from_json(j["curve"]);
        if (j.contains("field")) c.field = field_from_json(j["field"]);
        if (j.contains("params")) c.params = params_from_json(j["params"]);
        if (j.contains("control")) c.control = control_from_json(j["control"]);
        if (j.contains("output")) c.output = j["output"].get<std::string>();
        if (j.contains("ladder"))
            for (const auto& n : j["ladder"]) c.ladder.push_back(n.get<std::size_t>());
        if (j.contains("curves"))
            for (const auto& s : j["curves"]) c.curves.push_back(CurveSpec::from_json(s));
        if (j.contains("fields"))
            for (const auto& f : j["fields"]) c.fields.push_back(field_from_json(f));
        if (j.contains("epsilons"))
            for (const auto& e : j["epsilons"]) c.epsilons.push_back(as_real(e, "epsilons"));
        c.region_radius = real_or(j, "region_radius", c.region_radius);
        c.rescaled_step = real_or(j, "rescaled_step", c.rescaled_step);
        c.matched_times = count_or(j, "matched_times", c.matched_times);
        c.matched_fraction = real_or(j, "matched_fraction", c.matched_fraction);
        if (j.contains("constants")) {
            const auto& k = j["constants"];
            check_keys(k, {"C0", "C1", "C2"}, "constants");
            if (k.contains("C0")) c.C0 = as_real(k["C0"], "C0");
            if (k.contains("C1")) c.C1 = as_real(k["C1"], "C1");
            if (k.contains("C2")) c.C2 = as_real(k["C2"], "C2");
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Config, std::string("config: ") + e.what());
    }
    if (!(c.region_radius > 0.0)) throw Error(ErrorKind::Config, "region_radius must be positive");
    if (!(c.rescaled_step > 0.0)) throw Error(ErrorKind::Config, "rescaled_step must be positive");
    if (!(c.matched_fraction > 0.0 && c.matched_fraction < 1.0))
        throw Error(ErrorKind::Config, "matched_fraction must be in (0,1)");
    return c;
}

Json ScenarioConfig::to_json() const {
    Json j;
    j["scenario"] = scenario;
    j["curve"] = curve.to_json();
    j["field"] = field_to_json(field);
    j["params"] = params_to_json(params);
    j["control"] = control_to_json(control);
    j["output"] = output;
    j["ladder"] = ladder;
    j["curves"] = Json::array();
    for (const auto& c : curves) j["curves"].push_back(c.to_json());
    j["fields"] = Json::array();
    for (const auto& f : fields) j["fields"].push_back(field_to_json(f));
    j["epsilons"] = epsilons;
    j["region_radius"] = region_radius;
    j["rescaled_step"] = rescaled_step;
    j["matched_times"] = matched_times;
    j["matched_fraction"] = matched_fraction;
    Json k = Json::object();
    if (C0) k["C0"] = num(*C0);
    if (C1) k["C1"] = num(*C1);
    if (C2) k["C2"] = num(*C2);
    j["constants"] = k;
    return j;
}

// --- threads -------------------------------------------------------------------

std::size_t thread_cap() {
    if (const char* env = std::getenv("AMBIENTFLOW_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex m;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(m);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

// --- trajectory directories -------------------------------------------------------

namespace {

std::string snapshot_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshots/snap_%05zu.csv", i);
    return buf;
}

Json extinction_json(const Extinction& ex) { return {{"T", num(ex.T)}, {"O", point_json(ex.O)}}; }

double max_winding_drift(const FlowSeries& s) {
    double d = 0.0;
    for (double w : s.W) d = std::max(d, std::abs(w - 1.0));
    return d;
}

}  // namespace

std::vector<std::string> write_trajectory(const fs::path& dir, const Trajectory& traj,
                                          const std::optional<Extinction>& extinction) {
    std::vector<std::string> files;
    auto put = [&](const std::string& rel, const std::string& text) {
        write_text_atomic(dir / rel, text);
        files.push_back(rel);
    };
    put("series.csv", series_to_csv(traj.series));
    put("integrals.csv", integrals_to_csv(traj.series));
    Json snaps = Json::array();
    std::vector<ClosedCurve> curves;
    for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
        put(snapshot_name(i), curve_to_csv(traj.snapshots[i].curve));
        snaps.push_back({{"t", num(traj.snapshots[i].t)}, {"file", snapshot_name(i)}});
        curves.push_back(traj.snapshots[i].curve);
    }
    put("trajectory.svg", render_svg(curves));

    Json j;
    j["params"] = params_to_json(traj.params);
    j["field"] = field_to_json(traj.field);
    j["control"] = control_to_json(traj.control);
    j["stop"] = to_string(traj.stop);
    j["stop_time"] = num(traj.stop_time);
    j["steps"] = traj.steps;
    j["nonconvex_time"] = traj.nonconvex_time ? num(*traj.nonconvex_time) : Json();
    j["noise_floor"] = num(traj.noise_floor);
    j["snapshots"] = snaps;
    j["series"] = "series.csv";
    j["integrals"] = "integrals.csv";
    j["extinction"] = extinction ? extinction_json(*extinction) : Json();
    put("trajectory.json", j.dump(2) + "\n");
    return files;
}

LoadedTrajectory load_trajectory(const fs::path& dir) {
    Json j;
    try {
        j = Json::parse(read_text(dir / "trajectory.json"));
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Config, (dir / "trajectory.json").string() + ": " + e.what());
    }
    LoadedTrajectory out;
    auto& tr = out.traj;
    try {
        tr.params = params_from_json(j.at("params"));
        tr.field = field_from_json(j.at("field"));
        tr.control = control_from_json(j.at("control"));
        const std::string stop = j.at("stop");
        for (auto r : {StopReason::Extinct, StopReason::NonEmbedded, StopReason::NonConvexEvent, StopReason::MaxTime,
                       StopReason::MaxSteps})
            if (stop == to_string(r)) tr.stop = r;
        tr.stop_time = as_real(j.at("stop_time"), "stop_time");
        tr.steps = j.at("steps").get<std::size_t>();
        if (!j.at("nonconvex_time").is_null()) tr.nonconvex_time = as_real(j["nonconvex_time"], "nonconvex_time");
        tr.noise_floor = as_real(j.at("noise_floor"), "noise_floor");
        tr.series = read_series(dir / j.at("series").get<std::string>(), dir / j.at("integrals").get<std::string>());
        for (const auto& s : j.at("snapshots"))
            tr.snapshots.push_back({as_real(s.at("t"), "t"), read_curve(dir / s.at("file").get<std::string>())});
        if (!j.at("extinction").is_null()) {
            const auto& e = j["extinction"];
            out.extinction = Extinction{as_real(e.at("T"), "T"), {as_real(e.at("O")[0], "O"), as_real(e.at("O")[1], "O")}};
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Config, (dir / "trajectory.json").string() + ": " + e.what());
    }
    return out;
}

namespace {

struct Verdicts {
    Json j = Json::object();
    bool all = true;
    void set(const std::string& name, bool ok) {
        j[name] = ok;
        all = all && ok;
    }
};

// Checks shared by every stored trajectory.
Json trajectory_checks(const Trajectory& tr, Verdicts& v, bool identities) {
    Json m;
    bool increasing = true;
    for (std::size_t i = 1; i < tr.series.size(); ++i) increasing = increasing && tr.series.t[i] > tr.series.t[i - 1];
    v.set("times_increasing", increasing);
    const double drift = max_winding_drift(tr.series);
    m["winding_drift"] = num(drift);
    v.set("winding", drift <= 1e-8);

    bool embedded = true;
    for (const auto& s : tr.snapshots) embedded = embedded && is_simple(s.curve.vertices());
    if (tr.stop == StopReason::NonEmbedded) embedded = true;  // the last snapshot is the recorded event
    v.set("snapshots_embedded", embedded);

    const auto ge = geometric_estimate(tr);
    bool ge_ok = true;
    std::size_t convex = 0;
    for (const auto& s : ge)
        if (s.convex) {
            ++convex;
            ge_ok = ge_ok && s.verdict;
        }
    m["geometric_estimate"] = {{"convex_snapshots", convex}, {"snapshots", ge.size()}};
    v.set("geometric_estimate", ge_ok);

    const auto db = derivative_boundedness(tr);
    v.set("derivatives_bounded", db.bounded);

    if (identities && tr.series.size() >= 3) {
        const auto r = identity_residuals(tr);
        m["identity"] = {{"max_L_rel", num(r.max_L_rel)}, {"max_A_rel", num(r.max_A_rel)}, {"max_K", num(r.max_K)}};
        v.set("identity_L", r.max_L_rel <= 1e-3);
        v.set("identity_A", r.max_A_rel <= 1e-3);
        v.set("identity_K", r.max_K / kTwoPi <= 1e-3);
    }
    return m;
}

std::string geometric_csv(const std::vector<GeometricEstimateSample>& ge) {
    CsvTable t{{"t", "convex", "k_star", "L_over_A", "verdict"}, {}};
    for (const auto& s : ge) t.rows.push_back({s.t, s.convex ? 1.0 : 0.0, s.k_star, s.L_over_A, s.verdict ? 1.0 : 0.0});
    return t.str();
}

struct FileList {
    fs::path root;
    std::vector<std::string> names;
    void put(const std::string& rel, const std::string& text) {
        write_text_atomic(root / rel, text);
        names.push_back(rel);
    }
    void add(const std::string& prefix, const std::vector<std::string>& rel) {
        for (const auto& r : rel) names.push_back(prefix.empty() ? r : prefix + "/" + r);
    }
};

// Writes rescaled/ under files.root and returns the summary block.
Json write_rescaled(FileList& files, const RescaledTrajectory& rs) {
    CsvTable series{{"t", "t_hat", "L", "A", "kmin", "kmax"}, {}};
    for (std::size_t i = 0; i < rs.series.t.size(); ++i)
        series.rows.push_back({rs.series.t[i], rs.series.t_hat[i], rs.series.L[i], rs.series.A[i], rs.series.kmin[i],
                               rs.series.kmax[i]});
    files.put("rescaled/series.csv", series.str());
    Json snaps = Json::array();
    std::vector<ClosedCurve> curves;
    for (std::size_t i = 0; i < rs.snapshots.size(); ++i) {
        const auto name = "rescaled/" + snapshot_name(i);
        files.put(name, curve_to_csv(rs.snapshots[i].curve));
        snaps.push_back({{"t", num(rs.snapshots[i].t)}, {"t_hat", num(rs.snapshots[i].t_hat)}, {"file", name}});
        curves.push_back(rs.snapshots[i].curve);
    }
    SvgStyle style;
    style.center_origin = true;
    files.put("rescaled/rescaled.svg", render_svg(curves, style));

    const auto rr = rescaled_roundness(rs);
    CsvTable rt{{"t_hat", "A", "L", "kmin", "kmax", "ratio", "slack", "convex", "f"}, {}};
    for (const auto& s : rr)
        rt.rows.push_back({s.t_hat, s.A, s.L, s.kmin, s.kmax, s.ratio, s.slack, s.convex ? 1.0 : 0.0, s.f});
    files.put("rescaled/roundness.csv", rt.str());

    const auto gm = gaussian_monitor(rs);
    CsvTable gt{{"t_hat", "R", "dissipation", "forcing", "field_term", "rhs", "max_abs_Q", "fd_slope", "residual"}, {}};
    for (const auto& s : gm.samples)
        gt.rows.push_back({s.t_hat, s.R, s.dissipation, s.forcing, s.field_term, s.rhs, s.max_abs_Q, s.fd_slope,
                           s.residual});
    files.put("rescaled/gaussian.csv", gt.str());

    // final decade of t̂: one decade of T − t, i.e. Δt̂ = ½ ln 10
    const double t_end = rr.empty() ? 0.0 : rr.back().t_hat;
    const double t_start = t_end - 0.5 * std::log(10.0);
    double area_err = 0.0, ratio = 0.0, f_max = -kInf, slack_min = kInf;
    std::size_t count = 0, nonconvex = 0;
    const double target = rs.params.sigma1 * kPi;
    for (const auto& s : rr) {
        slack_min = s.convex ? std::min(slack_min, s.slack / s.L) : slack_min;
        if (s.t_hat < t_start) continue;
        ++count;
        area_err = std::max(area_err, std::abs(s.A - target) / target);
        if (!s.convex) {
            ++nonconvex;
            continue;
        }
        ratio = std::max(ratio, s.ratio);
        f_max = std::max(f_max, s.f);
    }
    Json j;
    j["T"] = num(rs.T);
    j["O"] = point_json(rs.O);
    j["snapshots"] = snaps;
    j["final_decade"] = {{"t_hat_start", num(t_start)},   {"t_hat_end", num(t_end)},     {"samples", count},
                         {"nonconvex", nonconvex},        {"max_area_rel_error", num(area_err)},
                         {"max_ratio", num(ratio)},       {"max_f", num(f_max)}};
    j["min_relative_slack"] = num(slack_min);
    j["gaussian"] = {{"max_rel_residual", num(gm.max_rel_residual)}, {"max_rel_increase", num(gm.max_rel_increase)}};
    return j;
}

Json base_manifest(const ScenarioConfig& cfg) {
    Json m;
    m["software"] = {{"name", "ambientflow"}, {"version", AMBIENTFLOW_VERSION}};
    m["scenario"] = cfg.scenario;
    m["config"] = cfg.to_json();
    return m;
}

RunResult finish(const fs::path& dir, Json m, const Verdicts& v, FileList& files) {
    m["verdicts"] = v.j;
    m["passed"] = v.all;
    std::sort(files.names.begin(), files.names.end());
    m["files"] = files.names;
    write_text_atomic(dir / "manifest.json", m.dump(2) + "\n");
    return {m, v.all};
}

Json stop_json(const Trajectory& tr) {
    return {{"reason", to_string(tr.stop)}, {"time", num(tr.stop_time)}, {"steps", tr.steps}};
}

std::optional<Extinction> try_extinction(const Trajectory& tr) {
    try {
        return estimate_extinction(tr);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::EstimatorInapplicable) throw;
        return std::nullopt;
    }
}

// --- scenarios ------------------------------------------------------------------

// Radius of a circle under V = 0: t(r) = ∫_r^{r0} s/(σ1 + σ2 s) ds.
struct CircleOracle {
    double r0, s1, s2;
    bool valid() const { return s1 + s2 * r0 > 0.0; }
    double time_to(double r) const {
        if (s2 == 0.0) return (r0 * r0 - r * r) / (2.0 * s1);
        return (r0 - r) / s2 - s1 / (s2 * s2) * std::log((s1 + s2 * r0) / (s1 + s2 * r));
    }
    double T() const { return time_to(0.0); }
    double radius(double t) const {
        double lo = 0.0, hi = r0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (time_to(mid) > t) lo = mid; else hi = mid;
        }
        return 0.5 * (lo + hi);
    }
};

RunResult run_baseline(const ScenarioConfig& cfg) {
    const fs::path dir = cfg.output;
    FileList files{dir, {}};
    Verdicts v;
    Json m = base_manifest(cfg);

    const auto tr = evolve(cfg.curve.build(), cfg.field, cfg.params, cfg.control);
    const auto ex = try_extinction(tr);
    files.add("", write_trajectory(dir, tr, ex));
    files.put("geometric.csv", geometric_csv(geometric_estimate(tr)));
    m["stop"] = stop_json(tr);

    Json h;
    h["T"] = ex ? num(ex->T) : Json();
    h["O"] = ex ? point_json(ex->O) : Json();
    v.set("extinct", tr.stop == StopReason::Extinct && ex.has_value());
    const CircleOracle oracle{cfg.curve.radius, cfg.params.sigma1, cfg.params.sigma2};
    if (cfg.curve.kind == CurveSpec::Kind::Circle && cfg.field.is_zero() && oracle.valid()) {
        const double T = oracle.T();
        h["T_oracle"] = num(T);
        double rerr = 0.0;
        for (const auto& s : tr.snapshots) {
            if (s.t > 0.9 * T) continue;
            double mean = 0.0;
            for (const auto& p : s.curve.vertices()) mean += norm(p - cfg.curve.center);
            mean /= static_cast<double>(s.curve.size());
            rerr = std::max(rerr, std::abs(mean - oracle.radius(s.t)));
        }
        h["radius_max_error"] = num(rerr);
        v.set("radius_oracle", rerr <= 1e-3);
        if (ex) {
            h["T_rel_error"] = num(std::abs(ex->T - T) / T);
            h["O_error"] = num(norm(ex->O - cfg.curve.center));
            v.set("extinction_time", std::abs(ex->T - T) <= 1e-2 * T);
            v.set("extinction_point", norm(ex->O - cfg.curve.center) <= 1e-3);
        }
    }
    m["headline"] = h;
    m["monitors"] = trajectory_checks(tr, v, true);
    return finish(dir, m, v, files);
}

RunResult run_killing(const ScenarioConfig& cfg, std::size_t threads) {
    const fs::path dir = cfg.output;
    FileList files{dir, {}};
    Verdicts v;
    Json m = base_manifest(cfg);
    const auto kp = cfg.field.killing_params();
    if (!kp) throw Error(ErrorKind::Config, "killing-equivalence needs a killing, constant or zero field");
    const auto [a, b, c] = *kp;
    const auto init = cfg.curve.build();

    // T of the V = 0 flow sets the matched times
    StepControl probe = cfg.control;
    probe.snapshot_every = 0;
    probe.snapshot_times.clear();
    probe.snapshot_area_ratio = 0.0;
    const auto first = evolve(init, AmbientField::zero(), cfg.params, probe);
    const auto ex = estimate_extinction(first);
    const double t_end = cfg.matched_fraction * ex.T;

    StepControl matched = cfg.control;
    matched.snapshot_times.clear();
    for (std::size_t j = 1; j <= cfg.matched_times; ++j)
        matched.snapshot_times.push_back(t_end * static_cast<double>(j) / static_cast<double>(cfg.matched_times));
    matched.max_time = t_end;
    matched.snapshot_every = 0;
    matched.snapshot_area_ratio = 0.0;

    Trajectory base, direct;
    parallel_for(2, threads, [&](std::size_t i) {
        if (i == 0) base = evolve(init, AmbientField::zero(), cfg.params, matched);
        else direct = evolve(init, cfg.field, cfg.params, matched);
    });
    const auto moved = rigid_motion_killing(base, a, b, c);
    files.add("base", write_trajectory(dir / "base", base, ex));
    files.add("killing", write_trajectory(dir / "killing", direct));

    CsvTable t{{"t", "hausdorff", "diameter", "relative"}, {}};
    double worst = 0.0;
    std::size_t found = 0;
    for (double tm : matched.snapshot_times) {
        auto at = [&](const Trajectory& tr) -> const ClosedCurve* {
            for (const auto& s : tr.snapshots)
                if (s.t == tm) return &s.curve;
            return nullptr;
        };
        const auto* p = at(moved);
        const auto* q = at(direct);
        if (!p || !q) continue;
        ++found;
        const double h = hausdorff_distance(*p, *q), d = q->diameter();
        t.rows.push_back({tm, h, d, h / d});
        worst = std::max(worst, h / d);
    }
    files.put("matched.csv", t.str());

    Json h;
    h["T"] = num(ex.T);
    h["O"] = point_json(ex.O);
    h["matched_times"] = found;
    h["max_relative_hausdorff"] = num(worst);
    m["headline"] = h;
    m["stop"] = stop_json(direct);
    v.set("all_times_matched", found == cfg.matched_times);
    v.set("killing_equivalence", found > 0 && worst <= 1e-3);
    Verdicts vb, vk;
    m["monitors"] = {{"base", trajectory_checks(base, vb, true)}, {"killing", trajectory_checks(direct, vk, true)}};
    m["monitor_verdicts"] = {{"base", vb.j}, {"killing", vk.j}};
    v.set("winding", vb.j["winding"].get<bool>() && vk.j["winding"].get<bool>());
    v.set("geometric_estimate", vb.j["geometric_estimate"].get<bool>() && vk.j["geometric_estimate"].get<bool>());
    return finish(dir, m, v, files);
}

RunResult run_loss_of_convexity(const ScenarioConfig& cfg, std::size_t threads) {
    const fs::path dir = cfg.output;
    FileList files{dir, {}};
    Verdicts v;
    Json m = base_manifest(cfg);
    if (cfg.curve.kind != CurveSpec::Kind::ParabolaClosure)
        throw Error(ErrorKind::Config, "loss-of-convexity needs a parabola-closure curve");
    if (cfg.epsilons.empty()) throw Error(ErrorKind::Config, "loss-of-convexity needs \"epsilons\"");

    const std::size_t n = cfg.epsilons.size();
    std::vector<Trajectory> runs(n);
    std::vector<Json> sub(n);
    std::vector<std::vector<std::string>> sub_files(n);
    StepControl control = cfg.control;
    control.stop_on_nonconvex = true;
    parallel_for(n, threads, [&](std::size_t i) {
        const double eps = cfg.epsilons[i];
        const auto pc = build_parabola_closure(eps, cfg.curve.delta, cfg.curve.vertices);
        runs[i] = evolve(pc.curve, cfg.field, cfg.params, control);
        char name[32];
        std::snprintf(name, sizeof name, "eps_%02zu", i);
        FileList f{dir / name, {}};
        f.add("", write_trajectory(f.root, runs[i]));
        Verdicts vi;
        Json mi = base_manifest(cfg);
        mi["epsilon"] = eps;
        mi["stop"] = stop_json(runs[i]);
        mi["headline"] = {{"epsilon", eps},
                          {"nonconvex_time", runs[i].nonconvex_time ? num(*runs[i].nonconvex_time) : Json()},
                          {"blend_end_angle", pc.blend_end_angle},
                          {"closing_scale", pc.closing_scale}};
        vi.set("nonconvex_event", runs[i].nonconvex_time.has_value());
        mi["monitors"] = trajectory_checks(runs[i], vi, false);
        sub[i] = finish(f.root, mi, vi, f).manifest;
        for (const auto& r : f.names) sub_files[i].push_back(std::string(name) + "/" + r);
        sub_files[i].push_back(std::string(name) + "/manifest.json");
    });
    for (const auto& f : sub_files) files.add("", f);

    // order by decreasing ε; event times must not increase
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return cfg.epsilons[x] > cfg.epsilons[y]; });
    bool all = true, monotone = true, winding = true;
    Json events = Json::array();
    double prev = kInf;
    for (std::size_t i : order) {
        const auto& r = runs[i];
        events.push_back({{"epsilon", cfg.epsilons[i]}, {"nonconvex_time", r.nonconvex_time ? num(*r.nonconvex_time) : Json()}});
        all = all && r.nonconvex_time.has_value();
        if (r.nonconvex_time) {
            monotone = monotone && *r.nonconvex_time <= prev;
            prev = *r.nonconvex_time;
        }
        winding = winding && sub[i]["verdicts"]["winding"].get<bool>();
    }
    m["headline"] = {{"events", events}};
    v.set("nonconvex_events", all);
    v.set("event_times_non_increasing", all && monotone);
    v.set("winding", winding);
    return finish(dir, m, v, files);
}

RunResult run_round_point(const ScenarioConfig& cfg) {
    const fs::path dir = cfg.output;
    FileList files{dir, {}};
    Verdicts v;
    Json m = base_manifest(cfg);
    const auto init = cfg.curve.build();

    const auto hyp = check_hypotheses(init, cfg.field, cfg.params, cfg.region_radius);
    const auto bounds = estimate_bounds(cfg.field, cfg.region_radius);
    StepControl control = cfg.control;
    if (control.snapshot_area_ratio == 0.0) control.snapshot_area_ratio = std::exp(-2.0 * cfg.rescaled_step);
    const auto tr = evolve(init, cfg.field, cfg.params, control);
    const auto ex = try_extinction(tr);
    files.add("", write_trajectory(dir, tr, ex));
    m["stop"] = stop_json(tr);

    Json hj;
    hj["K"] = num(hyp.threshold.K);
    hj["C0"] = num(hyp.C0);
    hj["C1"] = num(hyp.C1);
    hj["C2"] = num(hyp.C2);
    hj["min_k0"] = num(hyp.min_k0);
    hj["L0"] = num(hyp.L0);
    hj["M_b"] = num(hyp.case_b.M);
    hj["case_b_applicable"] = hyp.case_b.applicable;
    hj["curvature_ok"] = hyp.curvature_ok;
    hj["length_ok"] = hyp.length_ok();
    m["hypotheses"] = hj;
    v.set("hypotheses", hyp.holds());

    double kmin = kInf;
    for (double k : tr.series.kmin) kmin = std::min(kmin, k);
    double rmax = 0.0;
    for (double r : tr.series.max_radius) rmax = std::max(rmax, r);
    const double r0 = tr.series.max_radius.front();
    v.set("extinct", tr.stop == StopReason::Extinct && ex.has_value());
    v.set("curvature_threshold", kmin >= hyp.threshold.K - 1e-3);
    v.set("confinement", rmax <= r0 + 1e-3);
    bool length_monotone = true;
    for (std::size_t i = 1; i < tr.series.size(); ++i)
        length_monotone = length_monotone && tr.series.L[i] <= tr.series.L[i - 1] * (1.0 + 1e-6);
    v.set("length_non_increasing", length_monotone);

    Json h;
    h["T"] = ex ? num(ex->T) : Json();
    h["O"] = ex ? point_json(ex->O) : Json();
    h["min_k"] = num(kmin);
    h["max_radius"] = num(rmax);

    Json monitors = trajectory_checks(tr, v, false);
    const auto sm = speed_monitor(tr, bounds, hyp.threshold.K);
    CsvTable st{{"t", "convex", "F_max", "F_min", "sup_F_theta", "int_abs_F", "margin_gradient", "margin_max",
                 "margin_local"},
                {}};
    double mg = kInf, mm = kInf, ml = kInf;
    for (const auto& s : sm.samples) {
        st.rows.push_back({s.t, s.convex ? 1.0 : 0.0, s.F_max, s.F_min, s.sup_F_theta, s.int_abs_F, s.margin_gradient,
                           s.margin_max, s.margin_local});
        if (!s.convex) continue;
        mg = std::min(mg, s.margin_gradient);
        mm = std::min(mm, s.margin_max);
        ml = std::min(ml, s.margin_local);
    }
    files.put("speed.csv", st.str());
    monitors["speed"] = {{"M", num(sm.M)},
                         {"M1", num(sm.M1)},
                         {"violations", sm.violations},
                         {"skipped", sm.skipped},
                         {"min_margin_gradient", num(mg)},
                         {"min_margin_max", num(mm)},
                         {"min_margin_local", num(ml)}};
    v.set("speed_bounds", sm.violations.empty());
    files.put("geometric.csv", geometric_csv(geometric_estimate(tr)));

    const auto db = derivative_boundedness(tr);
    CsvTable dt{{"t", "max_ks", "max_kss"}, {}};
    for (const auto& s : db.samples) dt.rows.push_back({s.t, s.max_ks, s.max_kss});
    files.put("derivatives.csv", dt.str());

    if (ex) {
        const auto rs = rescale_trajectory(tr, ex->T, ex->O);
        const auto r = write_rescaled(files, rs);
        monitors["rescaled"] = r;
        const auto& fd = r["final_decade"];
        h["final_decade"] = fd;
        v.set("rescaled_area", as_real(fd["max_area_rel_error"], "") <= 0.02);
        v.set("rescaled_roundness", as_real(fd["max_ratio"], "") <= 1.02 && fd["nonconvex"].get<std::size_t>() == 0);
        v.set("rescaled_f", as_real(fd["max_f"], "") <= 0.05);
        v.set("reverse_isoperimetric", as_real(r["min_relative_slack"], "") >= -1e-3);
    }
    m["headline"] = h;
    m["monitors"] = monitors;
    return finish(dir, m, v, files);
}

RunResult run_identity_audit(const ScenarioConfig& cfg, std::size_t threads) {
    const fs::path dir = cfg.output;
    FileList files{dir, {}};
    Verdicts v;
    Json m = base_manifest(cfg);
    if (cfg.ladder.size() < 2) throw Error(ErrorKind::Config, "identity-audit needs a ladder of at least 2 levels");
    if (!std::isfinite(cfg.control.max_time)) throw Error(ErrorKind::Config, "identity-audit needs a finite max_time");
    const auto curves = cfg.curves.empty() ? std::vector<CurveSpec>{cfg.curve} : cfg.curves;
    const auto fields = cfg.fields.empty() ? std::vector<AmbientField>{cfg.field} : cfg.fields;
    const std::size_t nl = cfg.ladder.size(), nf = fields.size(), nc = curves.size();

    std::vector<IdentityResidualReport> reports(nc * nf * nl);
    std::vector<double> drift(reports.size());
    parallel_for(reports.size(), threads, [&](std::size_t idx) {
        const std::size_t l = idx % nl, f = (idx / nl) % nf, c = idx / (nl * nf);
        CurveSpec spec = curves[c];
        spec.vertices = cfg.ladder[l];
        const auto tr = evolve(spec.build(), fields[f], cfg.params, cfg.control);
        reports[idx] = identity_residuals(tr);
        drift[idx] = max_winding_drift(tr.series);
    });

    CsvTable t{{"curve", "field", "vertices", "max_L_rel", "max_A_rel", "max_K", "ratio_L", "ratio_A"}, {}};
    bool fine_ok = true, order_ok = true, k_ok = true, w_ok = true;
    double worst_fine = 0.0, min_ratio = kInf, max_ratio = 0.0;
    for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t f = 0; f < nf; ++f) {
            const std::vector<IdentityResidualReport> levels(reports.begin() + (c * nf + f) * nl,
                                                             reports.begin() + (c * nf + f + 1) * nl);
            const auto conv = identity_convergence(levels);
            for (std::size_t l = 0; l < nl; ++l) {
                const double rl = l ? conv.ratio_L[l - 1] : std::nan(""), ra = l ? conv.ratio_A[l - 1] : std::nan("");
                t.rows.push_back({double(c), double(f), double(cfg.ladder[l]), levels[l].max_L_rel, levels[l].max_A_rel,
                                  levels[l].max_K, rl, ra});
                k_ok = k_ok && levels[l].max_K / kTwoPi <= 1e-3;
                w_ok = w_ok && drift[(c * nf + f) * nl + l] <= 1e-8;
                if (l) {
                    for (double r : {rl, ra}) {
                        order_ok = order_ok && r >= 1.5 && r <= 3.0;
                        min_ratio = std::min(min_ratio, r);
                        max_ratio = std::max(max_ratio, r);
                    }
                }
            }
            const auto& fine = levels.back();
            worst_fine = std::max({worst_fine, fine.max_L_rel, fine.max_A_rel});
            fine_ok = fine_ok && fine.max_L_rel <= 1e-3 && fine.max_A_rel <= 1e-3;
        }
    files.put("identity.csv", t.str());
    m["headline"] = {{"runs", reports.size()},
                     {"finest_max_rel", num(worst_fine)},
                     {"min_ratio", num(min_ratio)},
                     {"max_ratio", num(max_ratio)}};
    v.set("finest_level", fine_ok);
    v.set("first_order", order_ok);
    v.set("winding_identity", k_ok);
    v.set("winding", w_ok);
    return finish(dir, m, v, files);
}

}  // namespace

Json constants_report(const ScenarioConfig& cfg) {
    const auto& p = cfg.params;
    const auto fb = estimate_bounds(cfg.field, cfg.region_radius);
    const double C0 = cfg.C0.value_or(fb.C0), C1 = cfg.C1.value_or(fb.C1), C2 = cfg.C2.value_or(fb.C2);
    const auto th = curvature_threshold_K(p.sigma1, p.sigma2, C1, C2);
    const auto& cu = th.cubic;
    Json j;
    j["sigma1"] = p.sigma1;
    j["sigma2"] = p.sigma2;
    j["C0"] = num(C0);
    j["C1"] = num(C1);
    j["C2"] = num(C2);
    j["R0"] = cfg.region_radius;
    j["field"] = field_to_json(cfg.field);
    j["K"] = num(th.K);
    j["cubic"] = {{"coefficients", {num(cu.c3), num(cu.c2), num(cu.c1), num(cu.c0)}},
                  {"shift", num(cu.shift)},
                  {"p", num(cu.p)},
                  {"q", num(cu.q)},
                  {"discriminant", num(cu.discriminant)},
                  {"branch", to_string(cu.branch)},
                  {"closed_form", num(cu.closed_form)},
                  {"bisection", num(cu.bisection)},
                  {"P_at_K", num(cu.eval(th.K))}};
    for (auto which : {ConfinementCase::A, ConfinementCase::B}) {
        const auto mm = length_threshold_M(which, p.sigma1, p.sigma2, C0, C1);
        j[std::string("M_") + (which == ConfinementCase::A ? "a" : "b")] = {{"M", num(mm.M)},
                                                                           {"alpha", num(mm.alpha)},
                                                                           {"first_branch", num(mm.first_branch)},
                                                                           {"second_branch", num(mm.second_branch)}};
    }
    j["case_b_limit"] = num(p.sigma1 / (std::abs(p.sigma2) + C0));
    return j;
}

RunResult run_scenario(const ScenarioConfig& cfg, std::size_t threads) {
    if (cfg.scenario == "baseline-circle") return run_baseline(cfg);
    if (cfg.scenario == "killing-equivalence") return run_killing(cfg, threads);
    if (cfg.scenario == "loss-of-convexity") return run_loss_of_convexity(cfg, threads);
    if (cfg.scenario == "round-point") return run_round_point(cfg);
    if (cfg.scenario == "identity-audit") return run_identity_audit(cfg, threads);
    if (cfg.scenario == "constants") {
        const fs::path dir = cfg.output;
        FileList files{dir, {}};
        Verdicts v;
        Json m = base_manifest(cfg);
        const Json k = constants_report(cfg);
        files.put("constants.json", k.dump(2) + "\n");
        m["headline"] = {{"K", k["K"]}, {"M_a", k["M_a"]["M"]}, {"M_b", k["M_b"]["M"]}};
        const double K = as_real(k["K"], "K");
        v.set("closed_form_matches_bisection",
              std::abs(as_real(k["cubic"]["closed_form"], "") - as_real(k["cubic"]["bisection"], "")) <=
                  1e-9 * std::max(1.0, K));
        v.set("root_residual", std::abs(as_real(k["cubic"]["P_at_K"], "")) <= 1e-9 * std::max(1.0, K * K * K));
        return finish(dir, m, v, files);
    }
    throw Error(ErrorKind::Config, "unknown scenario '" + cfg.scenario + "'");
}

RunResult verify_directory(const fs::path& dir) {
    const auto lt = load_trajectory(dir);
    Verdicts v;
    Json m;
    m["software"] = {{"name", "ambientflow"}, {"version", AMBIENTFLOW_VERSION}};
    m["stop"] = stop_json(lt.traj);
    const bool v_defined = std::none_of(lt.traj.series.int_Vn.begin(), lt.traj.series.int_Vn.end(),
                                        [](double x) { return std::isnan(x); });
    m["monitors"] = trajectory_checks(lt.traj, v, v_defined);
    m["verdicts"] = v.j;
    m["passed"] = v.all;
    write_text_atomic(dir / "verify.json", m.dump(2) + "\n");
    return {m, v.all};
}

RunResult rescale_directory(const fs::path& dir) {
    const auto lt = load_trajectory(dir);
    const Extinction ex = lt.extinction ? *lt.extinction : estimate_extinction(lt.traj);
    const auto rs = rescale_trajectory(lt.traj, ex.T, ex.O);
    FileList files{dir, {}};
    Json r = write_rescaled(files, rs);
    Verdicts v;
    const auto& fd = r["final_decade"];
    v.set("rescaled_area", as_real(fd["max_area_rel_error"], "") <= 0.02);
    v.set("rescaled_roundness", as_real(fd["max_ratio"], "") <= 1.02 && fd["nonconvex"].get<std::size_t>() == 0);
    v.set("rescaled_f", as_real(fd["max_f"], "") <= 0.05);
    v.set("reverse_isoperimetric", as_real(r["min_relative_slack"], "") >= -1e-3);
    r.erase("snapshots");
    r["verdicts"] = v.j;
    r["passed"] = v.all;
    write_text_atomic(dir / "rescaled" / "rescaled.json", r.dump(2) + "\n");
    return {r, v.all};
}

}  // namespace ambientflow
