#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ambientflow/vec2.hpp"

namespace ambientflow {

enum class FieldKind { Zero, Constant, Killing, Saddle, RadialPower, RadialLinear };

/// V(p) and its derivatives to third order.
///
/// d2[i][j][k] = ∂_j ∂_k V_i and d3[i][j][k][l] = ∂_j ∂_k ∂_l V_i; both are
/// symmetric in the derivative indices.
struct FieldJet {
    Vec2 value;
    Mat2 d1;
    std::array<std::array<std::array<double, 2>, 2>, 2> d2{};
    std::array<std::array<std::array<std::array<double, 2>, 2>, 2>, 2> d3{};

    Vec2 first(const Vec2& x) const { return d1 * x; }
    Vec2 second(const Vec2& x, const Vec2& y) const;
    Vec2 third(const Vec2& x, const Vec2& y, const Vec2& z) const;
};

/// Analytic planar vector field with closed-form jets.
class AmbientField {
public:
    static AmbientField zero();
    static AmbientField constant(double b, double c);
    /// V = a(y, -x) + (b, c).
    static AmbientField killing(double a, double b, double c);
    /// V = (x, -x²).
    static AmbientField saddle();
    /// V = (1 + |γ|²)^{p/2} γ.
    static AmbientField radial_power(double p);
    /// V = ⟨α, γ⟩ γ.
    static AmbientField radial_linear(Vec2 alpha);

    FieldKind kind() const { return kind_; }
    bool is_zero() const;
    /// Killing parameters (a, b, c); Zero and Constant fields are Killing too.
    std::optional<std::array<double, 3>> killing_params() const;

    Vec2 value(const Point2& p) const;
    Mat2 jacobian(const Point2& p) const;
    FieldJet jet(const Point2& p, int order = 3) const;

    /// R(r) = sup of |V| over the closed disk of radius r about the origin.
    double growth(double r) const;

    std::string describe() const;
    /// JSON descriptor, e.g. {"kind":"killing","a":1,"b":0,"c":0}.
    std::string to_json() const;
    static AmbientField from_json(const std::string& text);

    const std::array<double, 3>& params() const { return params_; }

private:
    AmbientField(FieldKind k, std::array<double, 3> p) : kind_(k), params_(p) {}
    FieldKind kind_;
    std::array<double, 3> params_;
};

/// ⟨D²_{τ,τ}V(p), Rτ⟩ for unit τ.
double convexity_indicator(const AmbientField& field, const Point2& p, const Vec2& tau);

/// Sup bounds of a field over the disk B_{R0}(0).
struct FieldBounds {
    double C0 = 0.0;  ///< sup |V|
    double C1 = 0.0;  ///< sup |DV| (operator norm)
    double C2 = 0.0;  ///< sup over unit X of |⟨D²_{X,X}V, RX⟩|
    double R0 = 0.0;
    /// Values found by sampling alone (a lower bound on the sup).
    double sampled_C0 = 0.0, sampled_C1 = 0.0, sampled_C2 = 0.0;
    /// growth[i] = R(growth_radii[i]), non-decreasing.
    std::vector<double> growth_radii;
    std::vector<double> growth;
};

/// Closed-form suprema when the descriptor admits them (per component).
struct ClosedFormBounds {
    std::optional<double> C0, C1, C2;
};
ClosedFormBounds closed_form_bounds(const AmbientField& field, double R0);

/// Sample a polar grid (grid × grid nodes) on B_{R0} with `directions` unit
/// vectors, refine the best samples by compass search, and report the larger
/// of the sampled value and any closed form.
FieldBounds estimate_bounds(const AmbientField& field, double R0, std::size_t grid = 256,
                            std::size_t directions = 64);

/// Solution of x' = -a y + b, y' = a x + c with (x, y)(0) = 0.
Point2 killing_integral_curve(double a, double b, double c, double t);

/// Max relative discrepancy between analytic and central-difference derivatives.
struct JetCheck {
    double order1 = 0.0, order2 = 0.0, order3 = 0.0;
    double max() const;
};
JetCheck verify_jet_fd(const AmbientField& field, const Point2& p, double step = 1e-4);

}  // namespace ambientflow
