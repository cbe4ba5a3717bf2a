#include "bikevhc/reduced_dynamics.hpp"

#include <cmath>
#include <ostream>

#include "bikevhc/csv.hpp"
#include "bikevhc/errors.hpp"

namespace bikevhc {

namespace {
constexpr double kDeltaFloor = 1e-12;

// Simpson on [a, b] refined once and Richardson-extrapolated.
double simpson_r(const std::function<double(double)>& f, double a, double b, double fa, double fb) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double q1 = f(0.5 * (a + m));
    const double q3 = f(0.5 * (m + b));
    const double h = b - a;
    const double s1 = h / 6.0 * (fa + 4.0 * fm + fb);
    const double s2 = h / 12.0 * (fa + 4.0 * q1 + 2.0 * fm + 4.0 * q3 + fb);
    return (16.0 * s2 - s1) / 15.0;
}

}  // namespace

Psi reduced_coeffs(const VhcProfile& profile, const Curve& curve, const BicycleParams& params,
                   double s) {
    const VhcEval vhc = profile.eval(s);
    const Curvature c = curve.curvature(s);
    const CurveEval e = curve.eval(s);
    const double v = c.speed;
    const double sp = std::sin(vhc.Phi);
    const double cp = std::cos(vhc.Phi);
    const double h = params.h;
    const double b = params.b;

    // delta through its defining relation with the live curve gain, so the
    // coefficients agree with the plant dynamics to machine precision
    const double a = b / h * c.kappa * v;
    const double d = vhc.Phi_prime + a * cp;
    if (std::abs(d) < kDeltaFloor)
        throw RegularityError("reduced_coeffs: delta ~ 0 at s=" + std::to_string(s));

    Psi out;
    out.psi1 = params.g * sp / (h * d);
    const double inner = (1.0 - h * c.kappa * sp) * c.kappa * v + b * c.kappa_prime +
                         b * c.kappa * dot(e.d1, e.d2) / (v * v);
    out.psi2 = -(vhc.Phi_pprime + inner * cp * v / h) / d;
    return out;
}

ReducedModel::ReducedModel(VhcProfile profile, Curve curve, BicycleParams params)
    : profile_(std::move(profile)), curve_(std::move(curve)), params_(params) {
    params_.validate();
    const std::size_t n = profile_.nodes.size();
    psi1_values_.resize(n);
    psi2_values_.resize(n);
    psi1_min_ = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const Psi p = psi(profile_.nodes[i]);
        psi1_values_[i] = p.psi1;
        psi2_values_[i] = p.psi2;
        psi1_min_ = std::min(psi1_min_, p.psi1);
        // scan interval midpoints as well so narrow dips are not missed
        const double mid = profile_.nodes[i] + 0.5 * profile_.T / n;
        psi1_min_ = std::min(psi1_min_, psi(mid).psi1);
    }

    auto f2 = [this](double s) { return psi(s).psi2; };
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = profile_.nodes[i];
        const double b = (i + 1 < n) ? profile_.nodes[i + 1] : profile_.T;
        total += simpson_r(f2, a, b, psi2_values_[i], psi2_values_[(i + 1) % n]);
    }
    psi2_integral_ = total;
}

HypothesesReport check_hypotheses(const ReducedModel& model) {
    HypothesesReport rep;
    rep.psi1_min = model.psi1_min();
    rep.psi2_integral = model.psi2_integral();
    rep.psi1_positive = rep.psi1_min > 0.0;
    rep.psi2_integral_negative = rep.psi2_integral < 0.0;
    return rep;
}

LimitCycle limit_cycle_from(const std::function<Psi(double)>& psi, double T,
                            const std::vector<double>& nodes) {
    const std::size_t n = nodes.size();
    if (n < 8) throw Error("limit_cycle_from: need at least 8 grid nodes");

    // Per interval, the z equation z' = 2 Psi1 + 2 Psi2 z propagates as
    // z(b) = P z(a) + Q with P = exp(2 int_a^b Psi2) and Q by quadrature of
    // the forced response. Exponents stay interval-local, which keeps the
    // construction stable even when the full period map contracts by many
    // orders of magnitude.
    std::vector<double> P(n), Q(n);
    auto f2 = [&](double s) { return psi(s).psi2; };
    double log_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = nodes[i];
        const double b = (i + 1 < n) ? nodes[i + 1] : T;

        // nine-point composite Simpson over four panels
        double sv[9], p2[9], p1[9];
        double cum[9];
        for (int j = 0; j < 9; ++j) {
            sv[j] = a + (b - a) * j / 8.0;
            const Psi p = psi(sv[j]);
            p2[j] = p.psi2;
            p1[j] = p.psi1;
        }
        cum[0] = 0.0;
        for (int j = 0; j < 8; j += 2) {
            const double h2 = (sv[j + 2] - sv[j]);
            cum[j + 2] = cum[j] + h2 / 6.0 * (p2[j] + 4.0 * p2[j + 1] + p2[j + 2]);
            // odd points by half-panel Simpson against the next even point
            const double hh = sv[j + 1] - sv[j];
            cum[j + 1] = cum[j] + hh / 6.0 * (p2[j] + 4.0 * f2(0.5 * (sv[j] + sv[j + 1])) +
                                              p2[j + 1]);
        }
        const double dI2 = 2.0 * cum[8];
        P[i] = std::exp(dI2);
        log_total += dI2;

        double g[9];
        for (int j = 0; j < 9; ++j) g[j] = 2.0 * p1[j] * std::exp(dI2 - 2.0 * cum[j]);
        double q = 0.0;
        for (int j = 0; j < 8; j += 2)
            q += (sv[j + 2] - sv[j]) / 6.0 * (g[j] + 4.0 * g[j + 1] + g[j + 2]);
        Q[i] = q;
    }

    const double phiT = std::exp(log_total);
    if (!(phiT < 1.0))
        throw Error("limit_cycle_from: period map does not contract (phi(T) = " +
                    std::to_string(phiT) + ")");

    // Fixed point z(T) = A z(0) + S with A = prod P, S accumulated forward.
    double A = 1.0, S = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        S = P[i] * S + Q[i];
        A *= P[i];
    }
    const double z0 = S / (1.0 - A);
    if (!(z0 > 0.0)) throw Error("limit_cycle_from: non-positive fixed point");

    LimitCycle cycle;
    cycle.T = T;
    cycle.z0_bar = z0;
    cycle.contraction = phiT;
    cycle.log_contraction = log_total;
    cycle.nodes = nodes;
    cycle.z_values.resize(n);
    cycle.nu_values.resize(n);
    cycle.psi1_values.resize(n);
    cycle.psi2_values.resize(n);
    double z = z0;
    for (std::size_t i = 0; i < n; ++i) {
        cycle.z_values[i] = z;
        if (!(z > 0.0)) throw Error("limit_cycle_from: speed profile lost positivity");
        cycle.nu_values[i] = std::sqrt(z);
        const Psi p = psi(nodes[i]);
        cycle.psi1_values[i] = p.psi1;
        cycle.psi2_values[i] = p.psi2;
        z = P[i] * z + Q[i];
    }
    cycle.finalize();
    return cycle;
}

LimitCycle limit_cycle(const ReducedModel& model) {
    if (!model.hypotheses_ok())
        throw Error("limit_cycle: hypotheses fail (psi1_min = " +
                    std::to_string(model.psi1_min()) +
                    ", int psi2 = " + std::to_string(model.psi2_integral()) + ")");
    return limit_cycle_from([&model](double s) { return model.psi(s); }, model.period(),
                            model.nodes());
}

void LimitCycle::finalize() {
    nu_spline_ = PeriodicCubicSpline(nodes, nu_values, T);
    z_spline_ = PeriodicCubicSpline(nodes, z_values, T);
}

void LimitCycle::write_csv(std::ostream& os) const {
    os << "# z0=" << csv::num(z0_bar) << " phiT=" << csv::num(contraction) << "\n";
    os << "s,nu,psi1,psi2\n";
    for (std::size_t i = 0; i < nodes.size(); ++i)
        os << csv::num(nodes[i]) << ',' << csv::num(nu_values[i]) << ','
           << csv::num(psi1_values[i]) << ',' << csv::num(psi2_values[i]) << "\n";
}

double reduced_rhs(double s, double s_dot, const ReducedModel& model) {
    const Psi p = model.psi(s);
    return p.psi1 + p.psi2 * s_dot * s_dot;
}

double invariance_feedback(double s, double s_dot, const VhcProfile& profile, const Curve& curve,
                           const BicycleParams& params) {
    const VhcEval vhc = profile.eval(s);
    const Curvature c = curve.curvature(s);
    const CurveEval e = curve.eval(s);
    const double v = c.speed;
    const double h = params.h;
    const double b = params.b;
    const double sp = std::sin(vhc.Phi);
    const double cp = std::cos(vhc.Phi);

    const double a = b / h * c.kappa * v;
    const double d = vhc.Phi_prime + a * cp;  // equals delta on the constraint
    if (std::abs(d) < kDeltaFloor)
        throw RegularityError("invariance_feedback: delta ~ 0 at s=" + std::to_string(s));

    const double inner = (1.0 - h * c.kappa * sp) * c.kappa * v + b * c.kappa_prime +
                         b * c.kappa * dot(e.d1, e.d2) / (v * v);
    return params.g * sp / (h * d) -
           s_dot * s_dot / d * (vhc.Phi_pprime + inner * v * cp / h);
}

}  // namespace bikevhc
