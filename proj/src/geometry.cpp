#include "ambientflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "ambientflow/error.hpp"
#include "spline.hpp"

namespace ambientflow {

// --- ClosedCurve -----------------------------------------------------------

double signed_area(std::span<const Point2> v) {
    const std::size_t n = v.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += cross(v[i], v[(i + 1) % n]);
    return 0.5 * acc;
}

namespace {

int orientation(const Point2& a, const Point2& b, const Point2& c) {
    const double v = cross(b - a, c - a);
    return (v > 0.0) - (v < 0.0);
}

bool on_segment(const Point2& a, const Point2& b, const Point2& p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

bool segments_intersect(const Point2& p1, const Point2& p2, const Point2& q1, const Point2& q2) {
    const int o1 = orientation(p1, p2, q1), o2 = orientation(p1, p2, q2);
    const int o3 = orientation(q1, q2, p1), o4 = orientation(q1, q2, p2);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(p1, p2, q1)) return true;
    if (o2 == 0 && on_segment(p1, p2, q2)) return true;
    if (o3 == 0 && on_segment(q1, q2, p1)) return true;
    if (o4 == 0 && on_segment(q1, q2, p2)) return true;
    return false;
}

double point_segment_distance(const Point2& p, const Point2& a, const Point2& b) {
    const Vec2 ab = b - a;
    const double len2 = norm2(ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return norm(p - (a + t * ab));
}

}  // namespace

bool is_simple(std::span<const Point2> v) {
    const std::size_t n = v.size();
    if (n < 3) return false;

    double minx = v[0].x, maxx = v[0].x, miny = v[0].y, maxy = v[0].y, total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        minx = std::min(minx, v[i].x);
        maxx = std::max(maxx, v[i].x);
        miny = std::min(miny, v[i].y);
        maxy = std::max(maxy, v[i].y);
        total += norm(v[(i + 1) % n] - v[i]);
    }
    const double cell = std::max(2.0 * total / static_cast<double>(n), 1e-300);
    const auto dims = [&](double lo, double hi) {
        return std::clamp<std::size_t>(static_cast<std::size_t>((hi - lo) / cell) + 1, 1, 4 * n);
    };
    const std::size_t nx = dims(minx, maxx), ny = dims(miny, maxy);
    const double cx = std::max((maxx - minx) / static_cast<double>(nx), 1e-300);
    const double cy = std::max((maxy - miny) / static_cast<double>(ny), 1e-300);
    auto clampi = [](double f, std::size_t count) {
        return std::min<std::size_t>(static_cast<std::size_t>(std::max(f, 0.0)), count - 1);
    };

    std::vector<std::vector<std::size_t>> grid(nx * ny);
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = v[i];
        const Point2& b = v[(i + 1) % n];
        const std::size_t x0 = clampi((std::min(a.x, b.x) - minx) / cx, nx);
        const std::size_t x1 = clampi((std::max(a.x, b.x) - minx) / cx, nx);
        const std::size_t y0 = clampi((std::min(a.y, b.y) - miny) / cy, ny);
        const std::size_t y1 = clampi((std::max(a.y, b.y) - miny) / cy, ny);
        for (std::size_t gx = x0; gx <= x1; ++gx)
            for (std::size_t gy = y0; gy <= y1; ++gy) grid[gy * nx + gx].push_back(i);
    }

    for (const auto& bucket : grid) {
        for (std::size_t p = 0; p < bucket.size(); ++p) {
            for (std::size_t q = p + 1; q < bucket.size(); ++q) {
                const std::size_t i = bucket[p], j = bucket[q];
                const std::size_t d = (j + n - i) % n;
                const Point2 &a = v[i], &b = v[(i + 1) % n], &c = v[j], &e = v[(j + 1) % n];
                if (d == 1 || d == n - 1) {
                    // adjacent edges share one vertex; they may only fail by folding back
                    const Vec2 e1 = (d == 1) ? b - a : e - c;
                    const Vec2 e2 = (d == 1) ? e - c : b - a;
                    if (cross(e1, e2) == 0.0 && dot(e1, e2) < 0.0) return false;
                    continue;
                }
                if (segments_intersect(a, b, c, e)) return false;
            }
        }
    }
    return true;
}

ClosedCurve ClosedCurve::from_vertices(std::vector<Point2> vertices) {
    const std::size_t n = vertices.size();
    if (n < kMinVertices) throw Error(ErrorKind::InvalidCurve, "closed curve needs at least 8 vertices");
    for (const auto& p : vertices)
        if (!is_finite(p)) throw Error(ErrorKind::InvalidCurve, "non-finite vertex");
    for (std::size_t i = 0; i < n; ++i)
        if (norm(vertices[(i + 1) % n] - vertices[i]) <= 0.0)
            throw Error(ErrorKind::InvalidCurve, "coincident consecutive vertices");
    if (!is_simple(vertices)) throw Error(ErrorKind::InvalidCurve, "curve is self-intersecting");
    const double area = signed_area(vertices);
    if (area == 0.0) throw Error(ErrorKind::InvalidCurve, "zero enclosed area");
    if (area < 0.0) std::reverse(vertices.begin() + 1, vertices.end());
    return ClosedCurve(std::move(vertices));
}

ClosedCurve ClosedCurve::trusted(std::vector<Point2> vertices) { return ClosedCurve(std::move(vertices)); }

double ClosedCurve::min_edge_length() const {
    double m = std::numeric_limits<double>::infinity();
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) m = std::min(m, norm(vertices_[(i + 1) % n] - vertices_[i]));
    return m;
}

double ClosedCurve::max_edge_length() const {
    double m = 0.0;
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, norm(vertices_[(i + 1) % n] - vertices_[i]));
    return m;
}

double ClosedCurve::max_radius() const {
    double m = 0.0;
    for (const auto& p : vertices_) m = std::max(m, norm(p));
    return m;
}

double ClosedCurve::diameter() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
        for (std::size_t j = i + 1; j < size(); ++j) m = std::max(m, norm(vertices_[i] - vertices_[j]));
    return m;
}

Point2 ClosedCurve::centroid() const {
    const std::size_t n = size();
    double a = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& p = vertices_[i];
        const Point2& q = vertices_[(i + 1) % n];
        const double c = cross(p, q);
        a += c;
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    a *= 0.5;
    return {cx / (6.0 * a), cy / (6.0 * a)};
}

ClosedCurve ClosedCurve::translated(const Vec2& offset) const {
    std::vector<Point2> v(vertices_);
    for (auto& p : v) p += offset;
    return ClosedCurve(std::move(v));
}

ClosedCurve ClosedCurve::rotated(double angle) const {
    std::vector<Point2> v(vertices_);
    for (auto& p : v) p = rotate(p, angle);
    return ClosedCurve(std::move(v));
}

ClosedCurve ClosedCurve::scaled(double factor) const {
    std::vector<Point2> v(vertices_);
    for (auto& p : v) p *= factor;
    return ClosedCurve(std::move(v));
}

// --- CurveGeometry ---------------------------------------------------------

double CurveGeometry::min_curvature() const { return *std::min_element(curvature.begin(), curvature.end()); }
double CurveGeometry::max_curvature() const { return *std::max_element(curvature.begin(), curvature.end()); }

double CurveGeometry::total_curvature() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < size(); ++i) acc += curvature[i] * ds[i];
    return acc;
}

CurveGeometry compute_geometry(const ClosedCurve& curve) {
    const auto v = curve.vertices();
    const std::size_t n = v.size();
    std::vector<Vec2> edge_dir(n);
    std::vector<double> edge_len(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 e = v[(i + 1) % n] - v[i];
        edge_len[i] = norm(e);
        if (!(edge_len[i] > 0.0)) throw Error(ErrorKind::InvalidCurve, "degenerate edge");
        edge_dir[i] = e / edge_len[i];
    }

    CurveGeometry g;
    g.tangent.resize(n);
    g.normal.resize(n);
    g.curvature.resize(n);
    g.ds.resize(n);
    g.turning.resize(n);
    double total_turn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t prev = (i + n - 1) % n;
        const Vec2& a = edge_dir[prev];
        const Vec2& b = edge_dir[i];
        const double phi = std::atan2(cross(a, b), dot(a, b));
        Vec2 bis = a + b;
        const double bn = norm(bis);
        // a hairpin (phi ≈ ±π) has no bisector; fall back to the rotated incoming edge
        bis = bn > 1e-300 ? bis / bn : rot90(a) * (phi >= 0 ? -1.0 : 1.0);
        g.tangent[i] = bis;
        g.normal[i] = rot90(bis);
        g.turning[i] = phi;
        g.ds[i] = 0.5 * (edge_len[prev] + edge_len[i]);
        g.curvature[i] = phi / g.ds[i];
        total_turn += phi;
    }
    g.length = std::accumulate(edge_len.begin(), edge_len.end(), 0.0);
    g.area = signed_area(v);
    g.turning_number = total_turn / kTwoPi;
    return g;
}

double boundary_integral_area(const ClosedCurve& curve, const CurveGeometry& geom) {
    double acc = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) acc += dot(curve[i], geom.normal[i]) * geom.ds[i];
    return -0.5 * acc;
}

// --- resampling ------------------------------------------------------------

ClosedCurve resample_arclength(const ClosedCurve& curve, std::size_t n) {
    if (n < ClosedCurve::kMinVertices) throw Error(ErrorKind::InvalidCurve, "resample needs n >= 8");
    // When the input is already equal-chord at this resolution, keep its vertices.
    if (n == curve.size()) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double c = norm(curve[(i + 1) % n] - curve[i]);
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
        if (hi - lo <= 1e-12 * hi) {
            std::vector<Point2> same(curve.vertices().begin(), curve.vertices().end());
            return ClosedCurve::trusted(std::move(same));
        }
    }

    // Equalize the polygon chords by iterating on the spline parameter; the
    // chord-length parameter is close to arc length, so a few sweeps suffice.
    const detail::SplineCurve spline(curve.vertices());
    const double period = spline.period();
    std::vector<double> s(n);
    for (std::size_t j = 0; j < n; ++j) s[j] = period * static_cast<double>(j) / static_cast<double>(n);

    std::vector<Point2> pts(n);
    std::vector<double> chord(n), gap(n);
    for (int iter = 0; iter < 100; ++iter) {
        for (std::size_t j = 0; j < n; ++j) pts[j] = spline.at_parameter(s[j]);
        double mean = 0.0, worst = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            chord[j] = norm(pts[(j + 1) % n] - pts[j]);
            mean += chord[j];
        }
        mean /= static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::abs(chord[j] - mean));
        if (worst <= 1e-13 * mean) break;

        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double cur = (j + 1 < n ? s[j + 1] : period) - s[j];
            gap[j] = cur * mean / chord[j];
            sum += gap[j];
        }
        const double scale = period / sum;
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            s[j] = acc;
            acc += gap[j] * scale;
        }
    }
    return ClosedCurve::trusted(std::move(pts));
}

// --- angle parametrization -------------------------------------------------

std::vector<double> vertex_tangent_angles(const CurveGeometry& geom) {
    const std::size_t n = geom.size();
    std::vector<double> theta(n);
    theta[0] = std::atan2(geom.tangent[0].y, geom.tangent[0].x);
    for (std::size_t i = 0; i + 1 < n; ++i) theta[i + 1] = theta[i] + 0.5 * (geom.turning[i] + geom.turning[i + 1]);
    return theta;
}

std::vector<double> sample_on_angle_grid(const CurveGeometry& geom, std::span<const double> values, std::size_t m) {
    const std::size_t n = geom.size();
    for (double k : geom.curvature)
        if (!(k > 0.0)) throw Error(ErrorKind::ConvexityRequired, "angle parametrization needs k > 0");
    const std::vector<double> theta = vertex_tangent_angles(geom);
    const double span = theta[n - 1] + 0.5 * (geom.turning[n - 1] + geom.turning[0]) - theta[0];

    std::vector<double> out(m);
    const double step = kTwoPi / static_cast<double>(m);
    for (std::size_t j = 0; j < m; ++j) {
        double w = std::fmod(step * static_cast<double>(j) - theta[0], kTwoPi);
        if (w < 0.0) w += kTwoPi;
        w = theta[0] + w * (span / kTwoPi);
        // left endpoint wins on ties
        auto it = std::upper_bound(theta.begin(), theta.end(), w);
        const std::size_t i = static_cast<std::size_t>(std::distance(theta.begin(), it)) - 1;
        const double t0 = theta[i];
        const double t1 = (i + 1 < n) ? theta[i + 1] : theta[0] + span;
        const double v0 = values[i];
        const double v1 = values[(i + 1) % n];
        const double f = (w - t0) / (t1 - t0);
        out[j] = v0 + f * (v1 - v0);
    }
    return out;
}

AngleProfile to_angle_param(const CurveGeometry& geom, std::size_t m) {
    return AngleProfile{sample_on_angle_grid(geom, geom.curvature, m)};
}

Reconstruction reconstruct_from_profile(const AngleProfile& profile) {
    const std::size_t m = profile.size();
    const double h = profile.step();
    Reconstruction r;
    r.vertices.resize(m);
    Point2 p{0.0, 0.0};
    for (std::size_t j = 0; j < m; ++j) {
        r.vertices[j] = p;
        const double t0 = profile.theta(j), t1 = t0 + h;
        const double k0 = profile.k[j], k1 = profile.k[(j + 1) % m];
        p += 0.5 * h * (Vec2{std::cos(t0), std::sin(t0)} / k0 + Vec2{std::cos(t1), std::sin(t1)} / k1);
    }
    r.closure_gap = norm(p);
    return r;
}

double median_curvature(const AngleProfile& profile) {
    const std::size_t m = profile.size();
    const std::size_t w = (m + 1) / 2;
    // sliding-window minimum over the doubled sequence
    std::deque<std::size_t> dq;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m + w - 1; ++i) {
        const double v = profile.k[i % m];
        while (!dq.empty() && profile.k[dq.back() % m] >= v) dq.pop_back();
        dq.push_back(i);
        if (dq.front() + w <= i) dq.pop_front();
        if (i + 1 >= w) best = std::max(best, profile.k[dq.front() % m]);
    }
    return best;
}

double entropy(const AngleProfile& profile) {
    double acc = 0.0;
    for (double k : profile.k) {
        if (!(k > 0.0)) throw Error(ErrorKind::Domain, "entropy needs positive curvature samples");
        acc += std::log(k);
    }
    return acc * profile.step();
}

double hausdorff_distance(const ClosedCurve& a, const ClosedCurve& b) {
    auto directed = [](const ClosedCurve& from, const ClosedCurve& to) {
        double worst = 0.0;
        const std::size_t n = to.size();
        for (const auto& p : from.vertices()) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j) best = std::min(best, point_segment_distance(p, to[j], to[(j + 1) % n]));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

// --- test curves -----------------------------------------------------------

ClosedCurve make_circle(double radius, std::size_t n, Point2 center) {
    if (!(radius > 0.0)) throw Error(ErrorKind::InvalidCurve, "circle radius must be positive");
    std::vector<Point2> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
        v[i] = center + radius * Vec2{std::cos(t), std::sin(t)};
    }
    return ClosedCurve::from_vertices(std::move(v));
}

ClosedCurve make_ellipse(double a, double b, std::size_t n, Point2 center) {
    if (!(a > 0.0 && b > 0.0)) throw Error(ErrorKind::InvalidCurve, "ellipse semi-axes must be positive");
    const std::size_t panels = 2048;
    auto speed = [&](double t) { return std::hypot(a * std::sin(t), b * std::cos(t)); };
    std::vector<double> cum(panels + 1, 0.0);
    const double dt = kTwoPi / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p)
        cum[p + 1] = cum[p] + detail::GaussLegendre8::integrate(speed, dt * p, dt * (p + 1));
    const double total = cum.back();

    std::vector<Point2> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double target = total * static_cast<double>(i) / static_cast<double>(n);
        auto it = std::upper_bound(cum.begin(), cum.end(), target);
        const std::size_t p = std::min<std::size_t>(static_cast<std::size_t>(std::distance(cum.begin(), it)) - 1, panels - 1);
        const double t0 = dt * p;
        double t = t0 + dt * (target - cum[p]) / (cum[p + 1] - cum[p]);
        for (int iter = 0; iter < 20; ++iter) {
            const double f = cum[p] + detail::GaussLegendre8::integrate(speed, t0, t) - target;
            const double step = f / speed(t);
            t -= step;
            if (std::abs(step) < 1e-15) break;
        }
        v[i] = center + Vec2{a * std::cos(t), b * std::sin(t)};
    }
    return ClosedCurve::from_vertices(std::move(v));
}

// --- parabola closure ------------------------------------------------------

namespace {

double smoothstep5(double x) {
    x = std::clamp(x, 0.0, 1.0);
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0);
}

struct ClosureProfile {
    double eps, delta, theta_d, theta_b, rho_d, a;

    double parabola_rho(double th) const {
        const double c = std::cos(th);
        return 1.0 / (2.0 * eps * c * c * c);
    }
    double closing_rho(double th) const { return a * (1.0 - 0.5 * std::cos(th)); }
    /// radius of curvature for θ in [0, π]
    double rho(double th) const {
        if (th <= theta_d) return parabola_rho(th);
        if (th >= theta_b) return closing_rho(th);
        const double s = smoothstep5((th - theta_d) / (theta_b - theta_d));
        return (1.0 - s) * rho_d + s * closing_rho(th);
    }
};

}  // namespace

ParabolaClosure build_parabola_closure(double epsilon, double delta, std::size_t n) {
    if (!(epsilon > 0.0 && epsilon <= 1.0 && delta > 0.0 && delta <= 1.0))
        throw Error(ErrorKind::Construction, "parabola closure needs 0 < ε <= 1 and 0 < δ <= 1");
    if (n < ClosedCurve::kMinVertices) throw Error(ErrorKind::Construction, "too few vertices");

    ClosureProfile prof{epsilon, delta, std::atan(2.0 * epsilon * delta), 0.0, 0.0, 0.0};
    prof.theta_b = 2.0 * prof.theta_d;
    prof.rho_d = prof.parabola_rho(prof.theta_d);

    using GL = detail::GaussLegendre8;
    const int blend_panels = 64;
    // x-closure ∫₀^π ρ cos θ dθ = 0 is linear in a: δ + B0 + a (B1 + R1) = 0.
    double b0 = 0.0, b1 = 0.0;
    const double bw = (prof.theta_b - prof.theta_d) / blend_panels;
    for (int p = 0; p < blend_panels; ++p) {
        const double lo = prof.theta_d + bw * p, hi = lo + bw;
        b0 += GL::integrate([&](double th) {
            const double s = smoothstep5((th - prof.theta_d) / (prof.theta_b - prof.theta_d));
            return (1.0 - s) * prof.rho_d * std::cos(th);
        }, lo, hi);
        b1 += GL::integrate([&](double th) {
            const double s = smoothstep5((th - prof.theta_d) / (prof.theta_b - prof.theta_d));
            return s * (1.0 - 0.5 * std::cos(th)) * std::cos(th);
        }, lo, hi);
    }
    const double tb = prof.theta_b;
    const double r1 = -kPi / 4.0 - (std::sin(tb) - 0.25 * tb - 0.125 * std::sin(2.0 * tb));
    const double denom = b1 + r1;
    if (!(denom < 0.0)) throw Error(ErrorKind::Construction, "closing profile cannot close the curve");
    prof.a = -(delta + b0) / denom;
    if (!(prof.a > 0.0) || 1.5 * prof.a >= prof.rho_d)
        throw Error(ErrorKind::Construction, "closing arc would be flatter than the parabola window");

    // Tabulate arc length and position on [0, π] at panel nodes.
    std::vector<double> nodes;
    auto add_range = [&](double lo, double hi, int count) {
        for (int i = 0; i < count; ++i) nodes.push_back(lo + (hi - lo) * i / count);
    };
    add_range(0.0, prof.theta_d, 64);
    add_range(prof.theta_d, prof.theta_b, blend_panels);
    add_range(prof.theta_b, kPi, 1024);
    nodes.push_back(kPi);

    const std::size_t np = nodes.size();
    std::vector<double> arc(np, 0.0);
    std::vector<Point2> pos(np);
    auto parabola_point = [&](double th) {
        const double x = std::tan(th) / (2.0 * epsilon);
        return Point2{x, epsilon * x * x};
    };
    for (std::size_t i = 0; i + 1 < np; ++i) {
        const double lo = nodes[i], hi = nodes[i + 1];
        arc[i + 1] = arc[i] + GL::integrate([&](double th) { return prof.rho(th); }, lo, hi);
        if (hi <= prof.theta_d) {
            pos[i + 1] = parabola_point(hi);
        } else {
            pos[i + 1] = pos[i] + Vec2{GL::integrate([&](double th) { return prof.rho(th) * std::cos(th); }, lo, hi),
                                       GL::integrate([&](double th) { return prof.rho(th) * std::sin(th); }, lo, hi)};
        }
    }
    const double half = arc.back();
    const double total = 2.0 * half;
    if (total / static_cast<double>(n) > 0.5 * delta)
        throw Error(ErrorKind::Construction, "resolution too coarse to resolve the parabola window");

    // Point at arc length s ∈ [0, half] from the origin along θ >= 0.
    auto point_at = [&](double s) -> Point2 {
        auto it = std::upper_bound(arc.begin(), arc.end(), s);
        std::size_t i = static_cast<std::size_t>(std::distance(arc.begin(), it));
        i = std::clamp<std::size_t>(i, 1, np - 1) - 1;
        const double lo = nodes[i];
        double th = lo + (nodes[i + 1] - lo) * (s - arc[i]) / (arc[i + 1] - arc[i]);
        for (int iter = 0; iter < 30; ++iter) {
            const double f = arc[i] + GL::integrate([&](double x) { return prof.rho(x); }, lo, th) - s;
            const double step = f / prof.rho(th);
            th -= step;
            if (std::abs(step) < 1e-16) break;
        }
        if (th <= prof.theta_d) return parabola_point(th);
        return pos[i] + Vec2{GL::integrate([&](double x) { return prof.rho(x) * std::cos(x); }, lo, th),
                             GL::integrate([&](double x) { return prof.rho(x) * std::sin(x); }, lo, th)};
    };

    std::vector<Point2> v(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double s = total * static_cast<double>(j) / static_cast<double>(n);
        if (s <= half) {
            v[j] = point_at(s);
        } else {
            const Point2 p = point_at(total - s);
            v[j] = {-p.x, p.y};
        }
    }
    v[0] = {0.0, 0.0};

    ParabolaClosure out{ClosedCurve::from_vertices(std::move(v)), epsilon, delta, prof.theta_b, prof.a};
    return out;
}

}  // namespace ambientflow
