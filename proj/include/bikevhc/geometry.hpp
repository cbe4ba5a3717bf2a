#pragma once

#include <cmath>
#include <iosfwd>
#include <memory>
#include <vector>

#include "bikevhc/params.hpp"
#include "bikevhc/spline.hpp"

namespace bikevhc {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

/// Position and parameter derivatives of a curve point through third order.
struct CurveEval {
    Vec2 sigma;
    Vec2 d1;
    Vec2 d2;
    Vec2 d3;
};

/// Signed curvature, its parameter derivative, and the parametrization speed.
struct Curvature {
    double kappa = 0.0;
    double kappa_prime = 0.0;
    double speed = 0.0;
};

/// Global geometric summary used by the traversability gate.
struct CurveMetrics {
    double length = 0.0;
    int turning_number = 0;
    double mean_curvature_lhs = 0.0;  // (1/L) * integral of kappa * |sigma'|
    double bound_rhs = 0.0;           // h / (b^2 + h^2)
    bool convex = false;

    bool bound_ok() const { return mean_curvature_lhs < bound_rhs; }
};

/// A closed planar curve with a regular C3 parametrization.
///
/// Builtin kinds evaluate analytically; sampled curves interpolate stored
/// derivative data with periodic cubic splines. Immutable and cheap to copy.
class Curve {
public:
    enum class Kind { ellipse, circle, polar_flower, sampled };

    static Curve ellipse(double semi_major, double semi_minor);
    static Curve circle(double radius);
    static Curve polar_flower(double c0, double c1, int lobes);

    /// Sampled curve from uniform nodes carrying values and derivatives.
    static Curve from_samples(std::vector<double> s_nodes, const std::vector<CurveEval>& samples,
                              double period);

    Kind kind() const { return kind_; }
    bool is_sampled() const { return kind_ == Kind::sampled; }
    double period() const { return period_; }

    CurveEval eval(double s) const;
    Curvature curvature(double s) const;

    /// CSV with header s,x,y,dx,dy,ddx,ddy,dddx,dddy (sampled curves only).
    void write_csv(std::ostream& os) const;
    static Curve read_csv(std::istream& is);

    /// Minimum parametrization speed accepted before a RegularityError.
    static constexpr double speed_tolerance = 1e-9;

private:
    Curve() = default;

    struct SampledData {
        std::vector<double> s;
        PeriodicCubicSpline x, y, dx, dy, ddx, ddy, dddx, dddy;
        PeriodicCubicSpline kappa;  // fitted to node curvature, differentiated for kappa'
    };

    CurveEval eval_analytic(double s) const;

    Kind kind_ = Kind::circle;
    double period_ = 0.0;
    double A_ = 0.0, B_ = 0.0;           // ellipse
    double R_ = 0.0;                     // circle
    double c0_ = 0.0, c1_ = 0.0;         // polar flower
    int lobes_ = 0;
    std::shared_ptr<const SampledData> tab_;
};

/// Reparametrizes a closed curve by arc length. The result is a sampled curve
/// with period equal to the curve length and unit speed (to node accuracy).
/// n_nodes must be at least 64; the default resolves all bundled curves.
Curve arclength_reparam(const Curve& curve, int n_nodes = 2048);

/// Evaluates the traversability gate (1/L) * integral kappa |sigma'| < h/(b^2+h^2)
/// together with length, turning number and a convexity scan. Does not throw
/// on a failed bound; the caller reads the verdict off the metrics.
CurveMetrics check_curvature_bound(const Curve& curve, const BicycleParams& params);

}  // namespace bikevhc
