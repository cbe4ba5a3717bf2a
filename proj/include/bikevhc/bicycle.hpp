#pragma once

#include "bikevhc/geometry.hpp"
#include "bikevhc/params.hpp"
#include "bikevhc/vhc_synth.hpp"

namespace bikevhc {

/// State of the curve-constrained model: roll angle, roll rate, curve
/// parameter and its rate. Valid while |phi| < pi/2.
struct FullState {
    double phi = 0.0;
    double phi_dot = 0.0;
    double s = 0.0;
    double s_dot = 0.0;
};

struct FullDeriv {
    double phi_dot = 0.0;
    double phi_ddot = 0.0;
    double s_dot = 0.0;
    double s_ddot = 0.0;
};

/// State of the full (unconstrained) model: path curvature state, roll,
/// roll rate, forward speed, plus a planar pose integrated for plotting only.
struct GetzState {
    double kappa_bar = 0.0;
    double phi = 0.0;
    double phi_dot = 0.0;
    double v = 0.0;
    double x = 0.0;
    double y = 0.0;
    double psi = 0.0;
};

struct GetzDeriv {
    double kappa_bar_dot = 0.0;
    double phi_dot = 0.0;
    double phi_ddot = 0.0;
    double v_dot = 0.0;
    double x_dot = 0.0;
    double y_dot = 0.0;
    double psi_dot = 0.0;
};

/// Steering-rate and thrust commands of the full model.
struct PhysicalInputs {
    double tau = 0.0;
    double f = 0.0;
};

struct Gains {
    double K1 = 5.0;
    double K2 = 2.0;
};

/// Tracking-feedback evaluation: the input plus the error coordinates and the
/// decoupling term it divided by.
struct FeedbackResult {
    double u = 0.0;
    double e = 0.0;
    double e_dot = 0.0;
    double Delta = 0.0;
};

/// |Delta| below this aborts the tracking controller rather than saturating.
constexpr double kDeltaSingularTol = 1e-6;

/// Dynamics of the bicycle constrained to the curve, with the curve-parameter
/// acceleration u as input.
FullDeriv sys_rhs(const FullState& state, double u, const Curve& curve,
                  const BicycleParams& params);

/// Input-output linearizing feedback for the output e = phi - Phi(s); yields
/// e'' = -K1 e - K2 e' in closed loop. Throws SingularFeedbackError when the
/// decoupling term Delta = Phi'(s) + a(s) cos(phi) is within kDeltaSingularTol
/// of zero.
FeedbackResult stabilizing_feedback(const FullState& state, const VhcProfile& profile,
                                    const Curve& curve, const BicycleParams& params,
                                    const Gains& gains);

/// Full model of Getz's bicycle under (tau, f), with pose integration.
GetzDeriv getz_rhs(const GetzState& state, const PhysicalInputs& inputs,
                   const BicycleParams& params);

/// Physical inputs that realize the constrained trajectory through the full
/// model: tau = kappa'(s) s_dot and f from the thrust row of the constrained
/// dynamics.
PhysicalInputs reconstruct_physical(const FullState& state, double u, const Curve& curve,
                                    const BicycleParams& params);

}  // namespace bikevhc
