#include "bikevhc/bicycle.hpp"

#include <cmath>
#include <string>

#include "bikevhc/errors.hpp"

namespace bikevhc {

FullDeriv sys_rhs(const FullState& state, double u, const Curve& curve,
                  const BicycleParams& params) {
    const Curvature c = curve.curvature(state.s);
    const CurveEval e = curve.eval(state.s);
    const double v = c.speed;
    const double h = params.h;
    const double b = params.b;
    const double sp = std::sin(state.phi);
    const double cp = std::cos(state.phi);
    const double a = b / h * c.kappa * v;

    const double inner = (1.0 - h * c.kappa * sp) * c.kappa * v + b * c.kappa_prime +
                         b * c.kappa * dot(e.d1, e.d2) / (v * v);

    FullDeriv d;
    d.phi_dot = state.phi_dot;
    d.s_dot = state.s_dot;
    d.phi_ddot = params.g * sp / h - inner * cp * v * state.s_dot * state.s_dot / h - a * cp * u;
    d.s_ddot = u;
    return d;
}

FeedbackResult stabilizing_feedback(const FullState& state, const VhcProfile& profile,
                                    const Curve& curve, const BicycleParams& params,
                                    const Gains& gains) {
    const VhcEval vhc = profile.eval(state.s);
    const Curvature c = curve.curvature(state.s);
    const CurveEval ev = curve.eval(state.s);
    const double v = c.speed;
    const double h = params.h;
    const double b = params.b;
    const double sp = std::sin(state.phi);
    const double cp = std::cos(state.phi);
    const double a = b / h * c.kappa * v;

    FeedbackResult out;
    out.e = state.phi - vhc.Phi;
    out.e_dot = state.phi_dot - vhc.Phi_prime * state.s_dot;
    out.Delta = vhc.Phi_prime + a * cp;
    if (std::abs(out.Delta) < kDeltaSingularTol)
        throw SingularFeedbackError("stabilizing_feedback: Delta = " +
                                    std::to_string(out.Delta) + " at s = " +
                                    std::to_string(state.s));

    const double inner = (1.0 - h * c.kappa * sp) * c.kappa * v + b * c.kappa_prime +
                         b * c.kappa * dot(ev.d1, ev.d2) / (v * v);
    out.u = (params.g * sp / h -
             (vhc.Phi_pprime + inner * cp * v / h) * state.s_dot * state.s_dot +
             gains.K1 * out.e + gains.K2 * out.e_dot) /
            out.Delta;
    return out;
}

GetzDeriv getz_rhs(const GetzState& st, const PhysicalInputs& in, const BicycleParams& params) {
    const double h = params.h;
    const double b = params.b;
    const double k = st.kappa_bar;
    const double sp = std::sin(st.phi);
    const double cp = std::cos(st.phi);

    const double M11 = h * h;
    const double M12 = b * h * cp * k;
    const double M22 = 1.0 + (b * b + h * h * sp * sp) * k * k - 2.0 * h * k * sp;

    const double det = M11 * M22 - M12 * M12;
    if (!(det > 1e-12 * M11))
        throw ModelDegeneracyError("getz_rhs: inertia matrix near singular, det = " +
                                   std::to_string(det));

    const double F1 = params.g * h * sp - (1.0 - h * k * sp) * h * cp * k * st.v * st.v;
    const double F2 = (1.0 - h * k * sp) * 2.0 * h * cp * k * st.v * st.phi_dot +
                      b * h * k * sp * st.phi_dot * st.phi_dot;

    const double B11 = -b * h * cp * st.v;
    const double B21 = -(b * b * k - h * sp * (1.0 - h * k * sp)) * st.v;

    const double r1 = F1 + B11 * in.tau;
    const double r2 = F2 + B21 * in.tau + in.f / params.m;

    GetzDeriv d;
    d.kappa_bar_dot = in.tau;
    d.phi_dot = st.phi_dot;
    d.phi_ddot = (M22 * r1 - M12 * r2) / det;
    d.v_dot = (M11 * r2 - M12 * r1) / det;
    d.x_dot = st.v * std::cos(st.psi);
    d.y_dot = st.v * std::sin(st.psi);
    d.psi_dot = st.kappa_bar * st.v;
    return d;
}

PhysicalInputs reconstruct_physical(const FullState& state, double u, const Curve& curve,
                                    const BicycleParams& params) {
    const Curvature c = curve.curvature(state.s);
    const CurveEval e = curve.eval(state.s);
    const double vs = c.speed;          // |sigma'(s)|
    const double v = vs * state.s_dot;  // forward speed on the curve
    const double h = params.h;
    const double b = params.b;
    const double k = c.kappa;
    const double sp = std::sin(state.phi);
    const double cp = std::cos(state.phi);

    PhysicalInputs out;
    out.tau = c.kappa_prime * state.s_dot;

    // thrust row of the constrained dynamics, solved for f
    const double M21 = b * h * cp * k;
    const double M22 = 1.0 + (b * b + h * h * sp * sp) * k * k - 2.0 * h * k * sp;
    const double F2 = (1.0 - h * k * sp) * 2.0 * h * cp * k * v * state.phi_dot +
                      b * h * k * sp * state.phi_dot * state.phi_dot;
    const double B21 = -(b * b * k - h * sp * (1.0 - h * k * sp)) * v;
    const double F2_bar = F2 + B21 * out.tau;

    const double phi_ddot = sys_rhs(state, u, curve, params).phi_ddot;
    const double accel = vs * u + dot(e.d1, e.d2) * state.s_dot * state.s_dot / vs;
    out.f = params.m * (M21 * phi_ddot + M22 * accel - F2_bar);
    return out;
}

}  // namespace bikevhc
