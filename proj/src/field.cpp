#include "ambientflow/field.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <json.hpp>

#include "ambientflow/error.hpp"

namespace ambientflow {

Vec2 FieldJet::second(const Vec2& x, const Vec2& y) const {
    const double xs[2] = {x.x, x.y}, ys[2] = {y.x, y.y};
    double out[2] = {0.0, 0.0};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) out[i] += d2[i][j][k] * xs[j] * ys[k];
    return {out[0], out[1]};
}

Vec2 FieldJet::third(const Vec2& x, const Vec2& y, const Vec2& z) const {
    const double xs[2] = {x.x, x.y}, ys[2] = {y.x, y.y}, zs[2] = {z.x, z.y};
    double out[2] = {0.0, 0.0};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) out[i] += d3[i][j][k][l] * xs[j] * ys[k] * zs[l];
    return {out[0], out[1]};
}

AmbientField AmbientField::zero() { return {FieldKind::Zero, {0, 0, 0}}; }
AmbientField AmbientField::constant(double b, double c) { return {FieldKind::Constant, {0, b, c}}; }
AmbientField AmbientField::killing(double a, double b, double c) { return {FieldKind::Killing, {a, b, c}}; }
AmbientField AmbientField::saddle() { return {FieldKind::Saddle, {0, 0, 0}}; }
AmbientField AmbientField::radial_power(double p) { return {FieldKind::RadialPower, {p, 0, 0}}; }
AmbientField AmbientField::radial_linear(Vec2 alpha) { return {FieldKind::RadialLinear, {alpha.x, alpha.y, 0}}; }

bool AmbientField::is_zero() const {
    switch (kind_) {
        case FieldKind::Zero: return true;
        case FieldKind::Constant:
        case FieldKind::Killing: return params_[0] == 0.0 && params_[1] == 0.0 && params_[2] == 0.0;
        case FieldKind::RadialLinear: return params_[0] == 0.0 && params_[1] == 0.0;
        default: return false;
    }
}

std::optional<std::array<double, 3>> AmbientField::killing_params() const {
    switch (kind_) {
        case FieldKind::Zero:
        case FieldKind::Constant:
        case FieldKind::Killing: return params_;
        default: return std::nullopt;
    }
}

namespace {

// g(s) = (1+s)^{p/2} and its derivatives in s
std::array<double, 4> radial_power_g(double p, double s) {
    const double h = 0.5 * p;
    const double base = 1.0 + s;
    return {std::pow(base, h), h * std::pow(base, h - 1.0), h * (h - 1.0) * std::pow(base, h - 2.0),
            h * (h - 1.0) * (h - 2.0) * std::pow(base, h - 3.0)};
}

double delta(int i, int j) { return i == j ? 1.0 : 0.0; }

}  // namespace

Vec2 AmbientField::value(const Point2& p) const {
    const auto& [a, b, c] = params_;
    switch (kind_) {
        case FieldKind::Zero: return {0.0, 0.0};
        case FieldKind::Constant: return {b, c};
        case FieldKind::Killing: return {a * p.y + b, -a * p.x + c};
        case FieldKind::Saddle: return {p.x, -p.x * p.x};
        case FieldKind::RadialPower: return std::pow(1.0 + norm2(p), 0.5 * a) * p;
        case FieldKind::RadialLinear: return dot(Vec2{a, b}, p) * p;
    }
    return {};
}

Mat2 AmbientField::jacobian(const Point2& p) const { return jet(p, 1).d1; }

FieldJet AmbientField::jet(const Point2& p, int order) const {
    FieldJet j;
    j.value = value(p);
    const auto& [a, b, c] = params_;
    switch (kind_) {
        case FieldKind::Zero:
        case FieldKind::Constant: break;
        case FieldKind::Killing: j.d1 = {0.0, a, -a, 0.0}; break;
        case FieldKind::Saddle:
            j.d1 = {1.0, 0.0, -2.0 * p.x, 0.0};
            j.d2[1][0][0] = -2.0;
            break;
        case FieldKind::RadialLinear: {
            const double al[2] = {a, b}, g[2] = {p.x, p.y};
            const double ag = dot(Vec2{a, b}, p);
            j.d1 = {al[0] * g[0] + ag, al[1] * g[0], al[0] * g[1], al[1] * g[1] + ag};
            for (int i = 0; i < 2; ++i)
                for (int q = 0; q < 2; ++q)
                    for (int k = 0; k < 2; ++k) j.d2[i][q][k] = al[q] * delta(i, k) + al[k] * delta(i, q);
            break;
        }
        case FieldKind::RadialPower: {
            const auto gd = radial_power_g(a, norm2(p));
            const double g0 = gd[0], g1 = gd[1], g2 = gd[2], g3 = gd[3];
            const double x[2] = {p.x, p.y};
            double d1[2][2];
            for (int i = 0; i < 2; ++i)
                for (int q = 0; q < 2; ++q) d1[i][q] = 2.0 * g1 * x[i] * x[q] + g0 * delta(i, q);
            j.d1 = {d1[0][0], d1[0][1], d1[1][0], d1[1][1]};
            if (order < 2) break;
            for (int i = 0; i < 2; ++i)
                for (int q = 0; q < 2; ++q)
                    for (int k = 0; k < 2; ++k)
                        j.d2[i][q][k] = 4.0 * g2 * x[i] * x[q] * x[k] +
                                        2.0 * g1 * (delta(q, k) * x[i] + delta(i, k) * x[q] + delta(i, q) * x[k]);
            if (order < 3) break;
            for (int i = 0; i < 2; ++i)
                for (int q = 0; q < 2; ++q)
                    for (int k = 0; k < 2; ++k)
                        for (int l = 0; l < 2; ++l) {
                            double v = 8.0 * g3 * x[i] * x[q] * x[k] * x[l];
                            v += 4.0 * g2 *
                                 (delta(i, l) * x[q] * x[k] + delta(q, l) * x[i] * x[k] + delta(k, l) * x[i] * x[q] +
                                  x[l] * (delta(q, k) * x[i] + delta(i, k) * x[q] + delta(i, q) * x[k]));
                            v += 2.0 * g1 * (delta(q, k) * delta(i, l) + delta(i, k) * delta(q, l) +
                                             delta(i, q) * delta(k, l));
                            j.d3[i][q][k][l] = v;
                        }
            break;
        }
    }
    return j;
}

double AmbientField::growth(double r) const {
    const auto& [a, b, c] = params_;
    switch (kind_) {
        case FieldKind::Zero: return 0.0;
        case FieldKind::Constant: return std::hypot(b, c);
        case FieldKind::Killing: return std::abs(a) * r + std::hypot(b, c);
        case FieldKind::Saddle: return r * std::sqrt(1.0 + r * r);
        case FieldKind::RadialLinear: return std::hypot(a, b) * r * r;
        case FieldKind::RadialPower: {
            // |V| = (1+ρ²)^{p/2} ρ peaks at ρ² = -1/(1+p) when p < -1
            double rho = r;
            if (a < -1.0) rho = std::min(r, std::sqrt(-1.0 / (1.0 + a)));
            return std::pow(1.0 + rho * rho, 0.5 * a) * rho;
        }
    }
    return 0.0;
}

std::string AmbientField::describe() const { return to_json(); }

std::string AmbientField::to_json() const {
    nlohmann::ordered_json j;
    const auto& [a, b, c] = params_;
    switch (kind_) {
        case FieldKind::Zero: j["kind"] = "zero"; break;
        case FieldKind::Constant: j = {{"kind", "constant"}, {"b", b}, {"c", c}}; break;
        case FieldKind::Killing: j = {{"kind", "killing"}, {"a", a}, {"b", b}, {"c", c}}; break;
        case FieldKind::Saddle: j["kind"] = "saddle"; break;
        case FieldKind::RadialPower: j = {{"kind", "radial_power"}, {"p", a}}; break;
        case FieldKind::RadialLinear: j = {{"kind", "radial_linear"}, {"alpha", {a, b}}}; break;
    }
    return j.dump();
}

AmbientField AmbientField::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, std::string("field descriptor: ") + e.what());
    }
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw Error(ErrorKind::Config, "field descriptor needs a string \"kind\"");
    const std::string kind = j["kind"];
    auto num = [&](const char* key, double fallback) {
        if (!j.contains(key)) return fallback;
        if (!j[key].is_number()) throw Error(ErrorKind::Config, std::string("field key '") + key + "' must be numeric");
        return j[key].get<double>();
    };
    if (kind == "zero") return zero();
    if (kind == "constant") return constant(num("b", 0.0), num("c", 0.0));
    if (kind == "killing") return killing(num("a", 0.0), num("b", 0.0), num("c", 0.0));
    if (kind == "saddle") return saddle();
    if (kind == "radial_power") {
        if (!j.contains("p")) throw Error(ErrorKind::Config, "radial_power needs \"p\"");
        return radial_power(num("p", 0.0));
    }
    if (kind == "radial_linear") {
        if (!j.contains("alpha") || !j["alpha"].is_array() || j["alpha"].size() != 2)
            throw Error(ErrorKind::Config, "radial_linear needs \"alpha\": [ax, ay]");
        return radial_linear({j["alpha"][0].get<double>(), j["alpha"][1].get<double>()});
    }
    throw Error(ErrorKind::Config, "unknown field kind '" + kind + "'");
}

double convexity_indicator(const AmbientField& field, const Point2& p, const Vec2& tau) {
    return dot(field.jet(p, 2).second(tau, tau), rot90(tau));
}

// --- bounds ----------------------------------------------------------------

ClosedFormBounds closed_form_bounds(const AmbientField& field, double R0) {
    const auto& [a, b, c] = field.params();
    switch (field.kind()) {
        case FieldKind::Zero: return {0.0, 0.0, 0.0};
        case FieldKind::Constant: return {std::hypot(b, c), 0.0, 0.0};
        case FieldKind::Killing: return {std::abs(a) * R0 + std::hypot(b, c), std::abs(a), 0.0};
        case FieldKind::Saddle: return {R0 * std::sqrt(1.0 + R0 * R0), std::sqrt(1.0 + 4.0 * R0 * R0), 2.0};
        case FieldKind::RadialLinear: {
            const double n = std::hypot(a, b);
            return {n * R0 * R0, 2.0 * n * R0, 0.0};
        }
        case FieldKind::RadialPower: return {field.growth(R0), std::nullopt, std::nullopt};
    }
    return {};
}

namespace {

struct Probe {
    const AmbientField& field;
    double R0;

    Point2 point(double r, double phi) const {
        r = std::clamp(r, 0.0, R0);
        return {r * std::cos(phi), r * std::sin(phi)};
    }
    double c0(double r, double phi) const { return norm(field.value(point(r, phi))); }
    double c1(double r, double phi) const { return operator_norm(field.jacobian(point(r, phi))); }
    double c2(double r, double phi, double psi) const {
        const Vec2 x{std::cos(psi), std::sin(psi)};
        return std::abs(dot(field.jet(point(r, phi), 2).second(x, x), rot90(x)));
    }
};

/// Compass search maximizing f over (r, angles...) with r clamped to [0, R0].
template <std::size_t D, class F>
double compass_maximize(F&& f, std::array<double, D> x, std::array<double, D> step, double R0) {
    auto eval = [&](const std::array<double, D>& y) {
        auto z = y;
        z[0] = std::clamp(z[0], 0.0, R0);
        return f(z);
    };
    double best = eval(x);
    for (int iter = 0; iter < 2000; ++iter) {
        bool improved = false;
        for (std::size_t d = 0; d < D; ++d) {
            for (double sgn : {1.0, -1.0}) {
                auto y = x;
                y[d] += sgn * step[d];
                y[0] = std::clamp(y[0], 0.0, R0);
                const double v = eval(y);
                if (v > best) {
                    best = v;
                    x = y;
                    improved = true;
                }
            }
        }
        if (!improved) {
            bool tiny = true;
            for (std::size_t d = 0; d < D; ++d) {
                step[d] *= 0.5;
                if (step[d] > 1e-13 * std::max(1.0, std::abs(x[d]))) tiny = false;
            }
            if (tiny) break;
        }
    }
    return best;
}

}  // namespace

FieldBounds estimate_bounds(const AmbientField& field, double R0, std::size_t grid, std::size_t directions) {
    if (!(R0 > 0.0) || !std::isfinite(R0)) throw Error(ErrorKind::Domain, "bounds need a finite radius R0 > 0");
    if (grid < 64) throw Error(ErrorKind::Domain, "bounds grid must be at least 64");
    if (directions < 1) directions = 1;

    const Probe probe{field, R0};
    const double dr = R0 / static_cast<double>(grid - 1);
    const double dphi = kTwoPi / static_cast<double>(grid);
    const double dpsi = kPi / static_cast<double>(directions);  // X and -X give the same |value|

    FieldBounds out;
    out.R0 = R0;
    out.growth_radii.resize(grid);
    out.growth.resize(grid);

    std::array<double, 2> arg0{0, 0}, arg1{0, 0};
    std::array<double, 3> arg2{0, 0, 0};
    double ring_max = 0.0;
    for (std::size_t i = 0; i < grid; ++i) {
        const double r = dr * static_cast<double>(i);
        for (std::size_t k = 0; k < grid; ++k) {
            const double phi = dphi * static_cast<double>(k);
            const Point2 p = probe.point(r, phi);
            const FieldJet jet = field.jet(p, 2);
            const double v0 = norm(jet.value);
            const double v1 = operator_norm(jet.d1);
            if (!std::isfinite(v0) || !std::isfinite(v1))
                throw Error(ErrorKind::UnboundedField, "non-finite field value inside the region");
            ring_max = std::max(ring_max, v0);
            if (v0 > out.sampled_C0) { out.sampled_C0 = v0; arg0 = {r, phi}; }
            if (v1 > out.sampled_C1) { out.sampled_C1 = v1; arg1 = {r, phi}; }
            for (std::size_t d = 0; d < directions; ++d) {
                const double psi = dpsi * static_cast<double>(d);
                const Vec2 x{std::cos(psi), std::sin(psi)};
                const double v2 = std::abs(dot(jet.second(x, x), rot90(x)));
                if (v2 > out.sampled_C2) { out.sampled_C2 = v2; arg2 = {r, phi, psi}; }
            }
            if (r == 0.0) break;  // the centre is a single node
        }
        if (r > 0.0) {
            // refine the ring maximum in angle
            double best_phi = 0.0, best = -1.0;
            for (std::size_t k = 0; k < grid; ++k) {
                const double v = probe.c0(r, dphi * static_cast<double>(k));
                if (v > best) { best = v; best_phi = dphi * static_cast<double>(k); }
            }
            ring_max = std::max(ring_max, compass_maximize<2>([&](auto z) { return probe.c0(r, z[1]); },
                                                              std::array<double, 2>{r, best_phi}, {0.0, dphi}, R0));
        }
        out.growth_radii[i] = r;
        out.growth[i] = ring_max;
    }

    out.sampled_C0 = std::max(out.sampled_C0, compass_maximize<2>([&](auto z) { return probe.c0(z[0], z[1]); },
                                                                  arg0, {dr, dphi}, R0));
    out.sampled_C1 = std::max(out.sampled_C1, compass_maximize<2>([&](auto z) { return probe.c1(z[0], z[1]); },
                                                                  arg1, {dr, dphi}, R0));
    out.sampled_C2 = std::max(out.sampled_C2,
                              compass_maximize<3>([&](auto z) { return probe.c2(z[0], z[1], z[2]); }, arg2,
                                                  {dr, dphi, dpsi}, R0));

    const ClosedFormBounds exact = closed_form_bounds(field, R0);
    out.C0 = std::max(out.sampled_C0, exact.C0.value_or(0.0));
    out.C1 = std::max(out.sampled_C1, exact.C1.value_or(0.0));
    out.C2 = std::max(out.sampled_C2, exact.C2.value_or(0.0));
    out.growth.back() = std::max(out.growth.back(), out.C0);
    return out;
}

// --- Killing integral curve --------------------------------------------------

Point2 killing_integral_curve(double a, double b, double c, double t) {
    // z = x + iy solves z' = i a z + (b + i c), z(0) = 0
    using cd = std::complex<double>;
    const cd w(b, c);
    const double at = a * t;
    cd factor;
    if (std::abs(at) < 1e-2) {
        // (e^{iat} - 1)/(ia) = Σ_{n≥1} (ia)^{n-1} t^n / n!
        cd term(t, 0.0);
        factor = term;
        for (int n = 2; n <= 12; ++n) {
            term *= cd(0.0, a) * t / static_cast<double>(n);
            factor += term;
        }
    } else {
        factor = (std::exp(cd(0.0, at)) - 1.0) / cd(0.0, a);
    }
    const cd z = w * factor;
    return {z.real(), z.imag()};
}

// --- jet self-test -------------------------------------------------------------

double JetCheck::max() const { return std::max({order1, order2, order3}); }

JetCheck verify_jet_fd(const AmbientField& field, const Point2& p, double step) {
    const FieldJet j = field.jet(p, 3);
    const Vec2 dirs[2] = {{1.0, 0.0}, {0.0, 1.0}};
    JetCheck out;

    double scale1 = 1.0, scale2 = 1.0, scale3 = 1.0;
    for (int i = 0; i < 2; ++i)
        for (int q = 0; q < 2; ++q) {
            scale1 = std::max(scale1, std::abs(q == 0 ? (i == 0 ? j.d1.a : j.d1.c) : (i == 0 ? j.d1.b : j.d1.d)));
            for (int k = 0; k < 2; ++k) {
                scale2 = std::max(scale2, std::abs(j.d2[i][q][k]));
                for (int l = 0; l < 2; ++l) scale3 = std::max(scale3, std::abs(j.d3[i][q][k][l]));
            }
        }

    for (int q = 0; q < 2; ++q) {
        const Point2 hi = p + step * dirs[q], lo = p - step * dirs[q];
        const FieldJet jh = field.jet(hi, 3), jl = field.jet(lo, 3);
        const Vec2 fd1 = (jh.value - jl.value) / (2.0 * step);
        const Vec2 an1 = j.d1 * dirs[q];
        out.order1 = std::max(out.order1, norm(fd1 - an1) / scale1);
        for (int i = 0; i < 2; ++i) {
            const double h1[2][2] = {{jh.d1.a, jh.d1.b}, {jh.d1.c, jh.d1.d}};
            const double l1[2][2] = {{jl.d1.a, jl.d1.b}, {jl.d1.c, jl.d1.d}};
            for (int k = 0; k < 2; ++k) {
                // ∂_q of ∂_k V_i
                const double fd2 = (h1[i][k] - l1[i][k]) / (2.0 * step);
                out.order2 = std::max(out.order2, std::abs(fd2 - j.d2[i][q][k]) / scale2);
                for (int l = 0; l < 2; ++l) {
                    const double fd3 = (jh.d2[i][k][l] - jl.d2[i][k][l]) / (2.0 * step);
                    out.order3 = std::max(out.order3, std::abs(fd3 - j.d3[i][q][k][l]) / scale3);
                }
            }
        }
    }
    return out;
}

}  // namespace ambientflow
