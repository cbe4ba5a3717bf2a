#include "bikevhc/vhc_synth.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "bikevhc/csv.hpp"
#include "bikevhc/errors.hpp"

namespace bikevhc {

namespace {
constexpr int kScanGrid = 4096;
constexpr double kResidualTol = 1e-8;

// The node-wise generator residual divides sample noise by the grid spacing,
// so the generator is integrated well below the residual budget regardless of
// the configured defaults.
odeint::IntegratorConfig tightened(odeint::IntegratorConfig cfg) {
    cfg.rtol = std::min(cfg.rtol, 1e-12);
    cfg.atol = std::min(cfg.atol, 1e-14);
    return cfg;
}

}  // namespace

double curvature_gain(const Curve& curve, const BicycleParams& params, double s) {
    const Curvature c = curve.curvature(s);
    return params.b / params.h * c.kappa * c.speed;
}

double curvature_gain_prime(const Curve& curve, const BicycleParams& params, double s) {
    const Curvature c = curve.curvature(s);
    const CurveEval e = curve.eval(s);
    const double speed_prime = dot(e.d1, e.d2) / c.speed;
    return params.b / params.h * (c.kappa_prime * c.speed + c.kappa * speed_prime);
}

MuSpec MuSpec::from_table(std::vector<double> knots, std::vector<double> values, double period) {
    for (double v : values)
        if (!(v > 0.0)) throw ParseError("MuSpec::from_table: mu must be strictly positive");
    MuSpec mu(Kind::table);
    mu.table_ = PeriodicCubicSpline(std::move(knots), std::move(values), period);
    return mu;
}

double MuSpec::value(double s, const Curve& curve, const BicycleParams& params) const {
    switch (kind_) {
        case Kind::constant_one: return 1.0;
        case Kind::proportional_to_a: return curvature_gain(curve, params, s);
        case Kind::table: return table_.value(s);
    }
    return 1.0;
}

double MuSpec::deriv(double s, const Curve& curve, const BicycleParams& params) const {
    switch (kind_) {
        case Kind::constant_one: return 0.0;
        case Kind::proportional_to_a: return curvature_gain_prime(curve, params, s);
        case Kind::table: return table_.deriv(s);
    }
    return 0.0;
}

void GeneratorConfig::validate() const {
    if (!(x0 > 0.0 && x0 < M_PI / 2))
        throw ParseError("GeneratorConfig: x0 must lie in (0, pi/2)");
    if (!(shoot_tol > 0.0)) throw ParseError("GeneratorConfig: shoot_tol must be positive");
    if (n_profile_nodes < 16) throw ParseError("GeneratorConfig: need at least 16 profile nodes");
}

double generator_rhs(double t, double x, const Curve& curve, const BicycleParams& params,
                     double epsilon, const MuSpec& mu) {
    return -curvature_gain(curve, params, t) * std::cos(x) +
           epsilon * mu.value(t, curve, params);
}

double solution_map(double epsilon, const GeneratorConfig& cfg, const Curve& curve,
                    const BicycleParams& params) {
    odeint::Rhs rhs = [&](double t, const odeint::State& x, odeint::State& dxdt) {
        dxdt[0] = generator_rhs(t, x[0], curve, params, epsilon, cfg.mu);
    };
    auto res = odeint::integrate(rhs, cfg.t0, {cfg.x0}, cfg.t0 + curve.period(),
                                 tightened(cfg.ode));
    if (!res.ok()) throw SynthesisError("solution_map: " + res.message);
    return res.end_state()[0];
}

EpsilonBracket epsilon_bracket(const GeneratorConfig& cfg, const Curve& curve,
                               const BicycleParams& params) {
    cfg.validate();
    const double T = curve.period();
    EpsilonBracket br;
    double rmin = std::numeric_limits<double>::infinity();
    double rmax = -std::numeric_limits<double>::infinity();
    bool sign_ok = true;
    for (int i = 0; i < kScanGrid; ++i) {
        const double s = T * i / kScanGrid;
        const double a = curvature_gain(curve, params, s);
        if (a <= 0.0) {
            sign_ok = false;
            break;
        }
        const double r = cfg.mu.value(s, curve, params) / a;
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
    }
    if (!sign_ok) return br;  // valid == false; caller falls back to expansion
    br.valid = true;
    br.K_plus = rmax;
    br.K_minus = rmin;
    br.eps_minus = std::cos(cfg.x0) / br.K_plus;
    br.eps_plus = std::cos(cfg.x0) / br.K_minus;
    return br;
}

namespace {

// Bisection of the monotone shooting residual on a sign-changing bracket.
double bisect_epsilon(const GeneratorConfig& cfg, const Curve& curve, const BicycleParams& params,
                      double lo, double hi, double r_lo, double r_hi) {
    if (r_lo > 0.0 || r_hi < 0.0)
        throw SynthesisError("find_periodic_epsilon: residual does not change sign on bracket");
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 400; ++it) {
        mid = 0.5 * (lo + hi);
        const double r = solution_map(mid, cfg, curve, params) - cfg.x0;
        if (std::abs(r) < cfg.shoot_tol) return mid;
        if ((r < 0.0) == (r_lo < 0.0))
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-16 * std::max(1.0, std::abs(mid))) break;
    }
    const double r = solution_map(mid, cfg, curve, params) - cfg.x0;
    if (std::abs(r) < cfg.shoot_tol) return mid;
    throw SynthesisError("find_periodic_epsilon: bisection stalled, residual " + csv::num(r));
}

}  // namespace

double find_periodic_epsilon(const GeneratorConfig& cfg, const Curve& curve,
                             const BicycleParams& params) {
    cfg.validate();
    params.validate();
    const EpsilonBracket br = epsilon_bracket(cfg, curve, params);

    if (br.valid) {
        double lo = br.eps_minus, hi = br.eps_plus;
        double r_lo = solution_map(lo, cfg, curve, params) - cfg.x0;
        if (std::abs(r_lo) < cfg.shoot_tol) return lo;  // mu ~ a collapses the bracket
        double r_hi = solution_map(hi, cfg, curve, params) - cfg.x0;
        if (std::abs(r_hi) < cfg.shoot_tol) return hi;
        // Guard against quadrature-level endpoint misses of the closed bracket.
        for (int grow = 0; grow < 8 && r_lo > 0.0; ++grow) {
            lo *= 0.999;
            r_lo = solution_map(lo, cfg, curve, params) - cfg.x0;
        }
        for (int grow = 0; grow < 8 && r_hi < 0.0; ++grow) {
            hi *= 1.001;
            r_hi = solution_map(hi, cfg, curve, params) - cfg.x0;
        }
        return bisect_epsilon(cfg, curve, params, lo, hi, r_lo, r_hi);
    }

    // Non-convex curve: grow a bracket geometrically around a mean-gain guess.
    const double T = curve.period();
    double mean_pos = 0.0;
    for (int i = 0; i < kScanGrid; ++i)
        mean_pos += std::max(curvature_gain(curve, params, T * i / kScanGrid), 0.0);
    mean_pos /= kScanGrid;
    double mu_mean = 0.0;
    for (int i = 0; i < kScanGrid; ++i)
        mu_mean += cfg.mu.value(T * i / kScanGrid, curve, params);
    mu_mean /= kScanGrid;

    double eps0 = std::cos(cfg.x0) * mean_pos / mu_mean;
    if (!(eps0 > 0.0)) eps0 = std::cos(cfg.x0);

    double lo = eps0, hi = eps0;
    double r_lo = solution_map(eps0, cfg, curve, params) - cfg.x0;
    double r_hi = r_lo;
    for (int k = 0; k < 60 && r_lo > 0.0; ++k) {
        hi = lo;
        r_hi = r_lo;
        lo *= 0.5;
        r_lo = solution_map(lo, cfg, curve, params) - cfg.x0;
    }
    for (int k = 0; k < 60 && r_hi < 0.0; ++k) {
        lo = hi;
        r_lo = r_hi;
        hi *= 2.0;
        r_hi = solution_map(hi, cfg, curve, params) - cfg.x0;
    }
    if (r_lo > 0.0 || r_hi < 0.0)
        throw SynthesisError("find_periodic_epsilon: no sign change within expansion budget");
    return bisect_epsilon(cfg, curve, params, lo, hi, r_lo, r_hi);
}

VhcProfile::VhcProfile(double T_, double epsilon_, double x0_, std::vector<double> nodes_,
                       std::vector<double> phi_, std::vector<double> a_,
                       std::vector<double> a_prime_, std::vector<double> delta_,
                       std::vector<double> delta_prime_)
    : T(T_),
      epsilon(epsilon_),
      x0(x0_),
      nodes(std::move(nodes_)),
      phi_values(std::move(phi_)),
      a_values(std::move(a_)),
      a_prime_values(std::move(a_prime_)),
      delta_values(std::move(delta_)),
      delta_prime_values(std::move(delta_prime_)) {
    finalize();
}

void VhcProfile::finalize() {
    phi_spline_ = PeriodicCubicSpline(nodes, phi_values, T);
    a_spline_ = PeriodicCubicSpline(nodes, a_values, T);
    a_prime_spline_ = PeriodicCubicSpline(nodes, a_prime_values, T);
    delta_spline_ = PeriodicCubicSpline(nodes, delta_values, T);
    delta_prime_spline_ = PeriodicCubicSpline(nodes, delta_prime_values, T);
}

VhcEval VhcProfile::eval(double s) const {
    VhcEval out;
    out.Phi = phi_spline_.value(s);
    const double a = a_spline_.value(s);
    const double ap = a_prime_spline_.value(s);
    const double d = delta_spline_.value(s);
    const double dp = delta_prime_spline_.value(s);
    const double c = std::cos(out.Phi);
    const double sn = std::sin(out.Phi);
    out.Phi_prime = -a * c + d;
    out.Phi_pprime = -ap * c + a * sn * out.Phi_prime + dp;
    return out;
}

double VhcProfile::min_abs_delta() const {
    double m = std::numeric_limits<double>::infinity();
    for (double d : delta_values) m = std::min(m, std::abs(d));
    return m;
}

bool VhcProfile::check_regularity(double tol) const {
    if (delta_values.empty()) return false;
    // delta must not change sign either; a sign change implies a zero between nodes
    bool pos = delta_values.front() > 0.0;
    for (double d : delta_values)
        if ((d > 0.0) != pos) return false;
    return min_abs_delta() > tol;
}

void VhcProfile::write_csv(std::ostream& os) const {
    os << "# T=" << csv::num(T) << " epsilon=" << csv::num(epsilon) << " x0=" << csv::num(x0)
       << "\n";
    os << "s,phi,a,a_prime,delta,delta_prime\n";
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        os << csv::num(nodes[i]) << ',' << csv::num(phi_values[i]) << ',' << csv::num(a_values[i])
           << ',' << csv::num(a_prime_values[i]) << ',' << csv::num(delta_values[i]) << ','
           << csv::num(delta_prime_values[i]) << "\n";
    }
}

VhcProfile VhcProfile::read_csv(std::istream& is) {
    csv::Table table = csv::read(is, {"s", "phi", "a", "a_prime", "delta", "delta_prime"});
    auto need = [&](const char* key) {
        auto it = table.metadata.find(key);
        if (it == table.metadata.end())
            throw ParseError(std::string("VhcProfile::read_csv: missing metadata ") + key);
        return it->second;
    };
    const std::size_t n = table.rows();
    std::vector<double> s(n), phi(n), a(n), ap(n), d(n), dp(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = table.cell(i, 0);
        phi[i] = table.cell(i, 1);
        a[i] = table.cell(i, 2);
        ap[i] = table.cell(i, 3);
        d[i] = table.cell(i, 4);
        dp[i] = table.cell(i, 5);
    }
    return VhcProfile(need("T"), need("epsilon"), need("x0"), std::move(s), std::move(phi),
                      std::move(a), std::move(ap), std::move(d), std::move(dp));
}

VhcProfile build_profile(double epsilon, const GeneratorConfig& cfg, const Curve& curve,
                         const BicycleParams& params) {
    cfg.validate();
    const double T = curve.period();
    const int n = cfg.n_profile_nodes;

    // Node times in integration order starting at t0, wrapped into one period.
    std::vector<double> nodes(n);
    for (int i = 0; i < n; ++i) nodes[i] = T * i / n;
    std::vector<std::pair<double, int>> stops(n);
    for (int i = 0; i < n; ++i) {
        double t = nodes[i];
        if (t < cfg.t0) t += T;
        stops[i] = {t, i};
    }
    std::sort(stops.begin(), stops.end());

    odeint::Rhs rhs = [&](double t, const odeint::State& x, odeint::State& dxdt) {
        dxdt[0] = generator_rhs(t, x[0], curve, params, epsilon, cfg.mu);
    };

    std::vector<double> phi(n);
    const odeint::IntegratorConfig ode = tightened(cfg.ode);
    odeint::State state = {cfg.x0};
    double t_cur = cfg.t0;
    auto advance = [&](double t_to) {
        if (t_to > t_cur) {
            auto res = odeint::integrate(rhs, t_cur, state, t_to, ode);
            if (!res.ok()) throw SynthesisError("build_profile: " + res.message);
            state = res.end_state();
            t_cur = t_to;
        }
    };
    for (const auto& [t_stop, idx] : stops) {
        advance(t_stop);
        phi[idx] = state[0];
    }
    advance(cfg.t0 + T);
    const double defect = state[0] - cfg.x0;
    if (std::abs(defect) > std::max(cfg.shoot_tol, 1e-9))
        throw SynthesisError("build_profile: periodicity defect " + csv::num(defect));

    // Close the seam: the shooting residual, although below shoot_tol, would
    // otherwise enter the node-wise derivative check divided by the grid
    // spacing. Distributing it linearly over the period perturbs each sample
    // by no more than the defect itself.
    for (const auto& [t_stop, idx] : stops) phi[idx] -= defect * (t_stop - cfg.t0) / T;

    std::vector<double> a(n), ap(n), d(n), dp(n);
    for (int i = 0; i < n; ++i) {
        a[i] = curvature_gain(curve, params, nodes[i]);
        ap[i] = curvature_gain_prime(curve, params, nodes[i]);
        d[i] = epsilon * cfg.mu.value(nodes[i], curve, params);
        dp[i] = epsilon * cfg.mu.deriv(nodes[i], curve, params);
    }

    VhcProfile profile(T, epsilon, cfg.x0, std::move(nodes), std::move(phi), std::move(a),
                       std::move(ap), std::move(d), std::move(dp));

    const EpsilonBracket br = epsilon_bracket(cfg, curve, params);
    if (br.valid) {
        profile.K_plus = br.K_plus;
        profile.K_minus = br.K_minus;
        const double ratio = br.K_plus / br.K_minus;
        if (ratio < 1.0 / std::cos(cfg.x0)) {
            RollBounds rb;
            rb.lower = std::acos(std::min(1.0, ratio * std::cos(cfg.x0)));
            rb.upper = std::acos(br.K_minus / br.K_plus * std::cos(cfg.x0));
            profile.roll_bounds = rb;
        }
    }

    // Self-check: the spline derivative must satisfy the generator identity.
    for (int i = 0; i < n; ++i) {
        const double s = profile.nodes[i];
        const double res = profile.phi_spline_deriv(s) +
                           profile.a_values[i] * std::cos(profile.phi_values[i]) -
                           profile.delta_values[i];
        if (std::abs(res) > kResidualTol)
            throw SynthesisError("build_profile: generator residual " + csv::num(res) +
                                 " at node " + std::to_string(i) +
                                 "; increase n_profile_nodes");
    }
    for (double p : profile.phi_values)
        if (!(std::abs(p) < M_PI / 2))
            throw SynthesisError("build_profile: constraint leaves (-pi/2, pi/2)");

    return profile;
}

}  // namespace bikevhc
