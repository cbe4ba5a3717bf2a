#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "bikevhc/geometry.hpp"
#include "bikevhc/params.hpp"
#include "bikevhc/vhc_synth.hpp"

namespace bikevhc {

struct Psi {
    double psi1 = 0.0;
    double psi2 = 0.0;
};

/// Coefficients of the reduced motion s'' = Psi1(s) + Psi2(s) s'^2 on the
/// constraint manifold, evaluated from the profile and the curve geometry.
Psi reduced_coeffs(const VhcProfile& profile, const Curve& curve, const BicycleParams& params,
                   double s);

struct HypothesesReport {
    double psi1_min = 0.0;
    double psi2_integral = 0.0;
    bool psi1_positive = false;
    bool psi2_integral_negative = false;

    bool ok() const { return psi1_positive && psi2_integral_negative; }
};

/// Reduced dynamics of one profile; owns copies of everything it needs and is
/// immutable after construction.
class ReducedModel {
public:
    ReducedModel(VhcProfile profile, Curve curve, BicycleParams params);

    Psi psi(double s) const { return reduced_coeffs(profile_, curve_, params_, s); }
    double period() const { return profile_.T; }
    const std::vector<double>& nodes() const { return profile_.nodes; }
    const VhcProfile& profile() const { return profile_; }
    const Curve& curve() const { return curve_; }
    const BicycleParams& params() const { return params_; }

    const std::vector<double>& psi1_values() const { return psi1_values_; }
    const std::vector<double>& psi2_values() const { return psi2_values_; }
    double psi1_min() const { return psi1_min_; }
    double psi2_integral() const { return psi2_integral_; }
    bool hypotheses_ok() const { return psi1_min_ > 0.0 && psi2_integral_ < 0.0; }

private:
    VhcProfile profile_;
    Curve curve_;
    BicycleParams params_;
    std::vector<double> psi1_values_, psi2_values_;
    double psi1_min_ = 0.0;
    double psi2_integral_ = 0.0;
};

HypothesesReport check_hypotheses(const ReducedModel& model);

/// The exponentially stable steady-state speed profile nu(s) together with
/// its fixed point and contraction certificate.
class LimitCycle {
public:
    double z0_bar = 0.0;          // periodic fixed point of z = s'^2 at s = 0
    double contraction = 0.0;     // phi(T) = exp(2 int Psi2) in (0, 1)
    double log_contraction = 0.0; // 2 int Psi2, kept for extreme decay rates
    std::vector<double> nodes;
    std::vector<double> nu_values;
    std::vector<double> z_values;
    std::vector<double> psi1_values, psi2_values;
    double T = 0.0;

    double nu(double s) const { return nu_spline_.value(s); }
    double z(double s) const { return z_spline_.value(s); }

    /// CSV with header s,nu,psi1,psi2 and metadata z0, phiT.
    void write_csv(std::ostream& os) const;

    void finalize();  // builds evaluation splines from the samples

private:
    PeriodicCubicSpline nu_spline_, z_spline_;
};

/// Builds the periodic solution of dz/dx = 2 Psi1 + 2 Psi2 z by stable
/// interval-wise variation of constants on the given grid. Refuses when the
/// period map does not contract (phi(T) >= 1).
LimitCycle limit_cycle_from(const std::function<Psi(double)>& psi, double T,
                            const std::vector<double>& nodes);

LimitCycle limit_cycle(const ReducedModel& model);

/// Reduced acceleration s'' = Psi1(s) + Psi2(s) s'^2.
double reduced_rhs(double s, double s_dot, const ReducedModel& model);

/// The unique input that renders the constraint manifold invariant; equals
/// Psi1(s) + Psi2(s) s'^2 identically.
double invariance_feedback(double s, double s_dot, const VhcProfile& profile, const Curve& curve,
                           const BicycleParams& params);

}  // namespace bikevhc
