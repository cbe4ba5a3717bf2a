#pragma once

#include <vector>

namespace bikevhc {

/// C2 periodic cubic spline interpolant on one period of a closed signal.
///
/// Knots must be strictly ascending and contained in one period; the wrap
/// interval [knots.back(), knots.front() + period] closes the curve. Queries
/// at any real argument are reduced modulo the period.
class PeriodicCubicSpline {
public:
    PeriodicCubicSpline() = default;
    PeriodicCubicSpline(std::vector<double> knots, std::vector<double> values, double period);

    double value(double t) const;
    double deriv(double t) const;
    double deriv2(double t) const;

    double period() const { return period_; }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }
    bool empty() const { return knots_.empty(); }

private:
    // index of the interval containing the wrapped argument, and local offset
    void locate(double t, std::size_t& i, double& u, double& h) const;

    std::vector<double> knots_;
    std::vector<double> values_;
    std::vector<double> moments_;  // second derivatives at knots
    double period_ = 0.0;
};

}  // namespace bikevhc
