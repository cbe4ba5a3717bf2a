#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "bikevhc/geometry.hpp"
#include "bikevhc/odeint.hpp"
#include "bikevhc/params.hpp"
#include "bikevhc/spline.hpp"

namespace bikevhc {

/// Normalized curvature gain a(s) = (b/h) kappa(s) |sigma'(s)| and its
/// parameter derivative.
double curvature_gain(const Curve& curve, const BicycleParams& params, double s);
double curvature_gain_prime(const Curve& curve, const BicycleParams& params, double s);

/// The T-periodic positive weight mu that shapes delta = epsilon * mu in the
/// constraint generator.
class MuSpec {
public:
    enum class Kind { constant_one, proportional_to_a, table };

    static MuSpec one() { return MuSpec(Kind::constant_one); }
    static MuSpec proportional_to_a() { return MuSpec(Kind::proportional_to_a); }
    static MuSpec from_table(std::vector<double> knots, std::vector<double> values, double period);

    Kind kind() const { return kind_; }
    double value(double s, const Curve& curve, const BicycleParams& params) const;
    double deriv(double s, const Curve& curve, const BicycleParams& params) const;

private:
    explicit MuSpec(Kind k) : kind_(k) {}
    Kind kind_ = Kind::constant_one;
    PeriodicCubicSpline table_;
};

struct GeneratorConfig {
    double x0 = M_PI / 8;  // anchor roll angle, in (0, pi/2)
    double t0 = 0.0;
    MuSpec mu = MuSpec::one();
    double shoot_tol = 1e-10;
    int n_profile_nodes = 1024;
    odeint::IntegratorConfig ode;  // defaults: rk45, rtol 1e-10, atol 1e-12

    void validate() const;
};

struct RollBounds {
    double lower = 0.0;  // acos((K+/K-) cos x0)
    double upper = 0.0;  // acos((K-/K+) cos x0)
};

struct EpsilonBracket {
    double eps_minus = 0.0;
    double eps_plus = 0.0;
    double K_plus = 0.0;   // max of mu/a over a period
    double K_minus = 0.0;  // min of mu/a over a period
    bool valid = false;    // false when a(s) changes sign (non-convex curve)
};

struct VhcEval {
    double Phi = 0.0;
    double Phi_prime = 0.0;
    double Phi_pprime = 0.0;
};

/// A synthesized virtual holonomic constraint phi = Phi(s) on one period,
/// self-contained: evaluation needs only the stored samples.
///
/// Phi comes from a periodic cubic spline through the generator solution;
/// Phi' uses the generator identity -a cos(Phi) + delta, and Phi'' its
/// derivative, so both carry one interpolation order less error than
/// differentiating the spline.
class VhcProfile {
public:
    VhcProfile() = default;
    VhcProfile(double T, double epsilon, double x0, std::vector<double> nodes,
               std::vector<double> phi, std::vector<double> a, std::vector<double> a_prime,
               std::vector<double> delta, std::vector<double> delta_prime);

    double T = 0.0;
    double epsilon = 0.0;
    double x0 = 0.0;
    std::vector<double> nodes;
    std::vector<double> phi_values;
    std::vector<double> a_values;
    std::vector<double> a_prime_values;
    std::vector<double> delta_values;
    std::vector<double> delta_prime_values;

    double K_plus = std::numeric_limits<double>::quiet_NaN();
    double K_minus = std::numeric_limits<double>::quiet_NaN();
    std::optional<RollBounds> roll_bounds;

    VhcEval eval(double s) const;
    double a(double s) const { return a_spline_.value(s); }
    double delta(double s) const { return delta_spline_.value(s); }
    double phi_spline_deriv(double s) const { return phi_spline_.deriv(s); }
    double min_abs_delta() const;

    /// True iff delta stays bounded away from zero, which keeps the relative
    /// degree of the tracking output well defined everywhere.
    bool check_regularity(double tol = 1e-9) const;

    /// CSV with header s,phi,a,a_prime,delta,delta_prime and a metadata line
    /// carrying T, epsilon, x0.
    void write_csv(std::ostream& os) const;
    static VhcProfile read_csv(std::istream& is);

private:
    void finalize();
    PeriodicCubicSpline phi_spline_, a_spline_, a_prime_spline_, delta_spline_,
        delta_prime_spline_;
};

/// Right-hand side of the constraint generator dx/dt = -a(t) cos x + eps mu(t).
double generator_rhs(double t, double x, const Curve& curve, const BicycleParams& params,
                     double epsilon, const MuSpec& mu);

/// Solution of the generator at t0 + T from x(t0) = x0; the shooting map.
double solution_map(double epsilon, const GeneratorConfig& cfg, const Curve& curve,
                    const BicycleParams& params);

/// Search bracket [cos(x0)/K+, cos(x0)/K-] from the extrema of mu/a, defined
/// when a > 0 over the whole period.
EpsilonBracket epsilon_bracket(const GeneratorConfig& cfg, const Curve& curve,
                               const BicycleParams& params);

/// Finds the unique epsilon whose generator solution is T-periodic, by
/// bisection of the monotone shooting map. On non-convex curves the bracket
/// is grown geometrically from cos(x0) * mean(a clipped positive) until the
/// shooting residual changes sign.
double find_periodic_epsilon(const GeneratorConfig& cfg, const Curve& curve,
                             const BicycleParams& params);

/// Integrates the generator at the given epsilon over one period, samples on
/// the uniform profile grid and packages the spline representation. Rejects
/// profiles whose generator residual at the nodes exceeds 1e-8 or whose image
/// leaves (-pi/2, pi/2).
VhcProfile build_profile(double epsilon, const GeneratorConfig& cfg, const Curve& curve,
                         const BicycleParams& params);

}  // namespace bikevhc
