#include "bikevhc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "bikevhc/csv.hpp"
#include "bikevhc/errors.hpp"

namespace bikevhc {

namespace {

FullState unpack(const odeint::State& y) { return {y[0], y[1], y[2], y[3]}; }

}  // namespace

double predicted_decay_rate(const Gains& gains) {
    const double disc = gains.K2 * gains.K2 - 4.0 * gains.K1;
    if (disc >= 0.0) return 0.5 * (gains.K2 - std::sqrt(disc));  // slow real root
    return 0.5 * gains.K2;
}

double fit_decay_rate(const std::vector<double>& t, const std::vector<double>& e,
                      const std::vector<double>& e_dot) {
    const std::size_t n = t.size();
    std::vector<double> m(n);
    double m_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = std::abs(e[i]) + std::abs(e_dot[i]);
        m_max = std::max(m_max, m[i]);
    }
    if (m_max < 1e-8) return std::numeric_limits<double>::quiet_NaN();
    const double floor = std::max(1e-9 * m_max, 1e-13);

    // window: from the start until the signal first sinks below the floor
    std::size_t last = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (m[i] < floor) {
            last = i;
            break;
        }
    }

    std::vector<double> ts, ls;
    for (std::size_t i = 1; i + 1 < std::min(last, n); ++i)
        if (m[i] >= m[i - 1] && m[i] >= m[i + 1] && m[i] > floor) {
            ts.push_back(t[i]);
            ls.push_back(std::log(m[i]));
        }
    if (ts.size() < 4) {  // monotone decay: fit every sample in the window
        ts.clear();
        ls.clear();
        for (std::size_t i = 0; i < std::min(last, n); ++i)
            if (m[i] > floor) {
                ts.push_back(t[i]);
                ls.push_back(std::log(m[i]));
            }
    }
    if (ts.size() < 2) return std::numeric_limits<double>::quiet_NaN();

    double st = 0, sl = 0, stt = 0, stl = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        st += ts[i];
        sl += ls[i];
        stt += ts[i] * ts[i];
        stl += ts[i] * ls[i];
    }
    const double k = ts.size();
    const double denom = k * stt - st * st;
    if (std::abs(denom) < 1e-300) return std::numeric_limits<double>::quiet_NaN();
    return -(k * stl - st * sl) / denom;
}

Trajectory simulate_closed_loop(const SimConfig& config, const VhcProfile& profile,
                                const LimitCycle* cycle, const Curve& curve,
                                const BicycleParams& params) {
    params.validate();
    if (!(config.t_end > 0.0)) throw ParseError("simulate_closed_loop: t_end must be positive");
    if (config.controller == SimConfig::Controller::stabilizing &&
        !(config.gains.K1 > 0.0 && config.gains.K2 > 0.0) &&
        !(config.gains.K1 == 0.0 && config.gains.K2 == 0.0))
        throw ParseError("simulate_closed_loop: gains must be positive (or both zero)");

    bool singular_hit = false;
    double singular_t = 0.0;

    auto control = [&](const FullState& st) -> double {
        switch (config.controller) {
            case SimConfig::Controller::stabilizing:
                return stabilizing_feedback(st, profile, curve, params, config.gains).u;
            case SimConfig::Controller::invariance:
                return invariance_feedback(st.s, st.s_dot, profile, curve, params);
            case SimConfig::Controller::none:
                return 0.0;
        }
        return 0.0;
    };

    odeint::Rhs rhs = [&](double t, const odeint::State& y, odeint::State& dydt) {
        const FullState st = unpack(y);
        double u = 0.0;
        try {
            u = control(st);
        } catch (const SingularFeedbackError&) {
            if (!singular_hit) {
                singular_hit = true;
                singular_t = t;
            }
            dydt.assign(4, std::numeric_limits<double>::quiet_NaN());
            return;
        }
        const FullDeriv d = sys_rhs(st, u, curve, params);
        dydt[0] = d.phi_dot;
        dydt[1] = d.phi_ddot;
        dydt[2] = d.s_dot;
        dydt[3] = d.s_ddot;
    };

    std::vector<odeint::EventSpec> events;
    if (config.fall_guard) {
        odeint::EventSpec fall;
        fall.guard = [](double, const odeint::State& y) { return std::abs(y[0]) - M_PI / 2; };
        fall.direction = odeint::Direction::rising;
        fall.terminal = true;
        events.push_back(fall);
    }

    const odeint::State y0 = {config.initial.phi, config.initial.phi_dot, config.initial.s,
                              config.initial.s_dot};
    auto res = odeint::integrate(rhs, 0.0, y0, config.t_end, config.integrator, events);

    Trajectory traj;
    traj.curve_period = curve.period();
    const std::size_t n = res.t.size();
    traj.t.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const FullState st = unpack(res.x[i]);
        traj.t.push_back(res.t[i]);
        traj.phi.push_back(st.phi);
        traj.phi_dot.push_back(st.phi_dot);
        traj.s.push_back(st.s);
        traj.s_dot.push_back(st.s_dot);

        const VhcEval vhc = profile.eval(st.s);
        traj.e.push_back(st.phi - vhc.Phi);
        traj.e_dot.push_back(st.phi_dot - vhc.Phi_prime * st.s_dot);

        double u = std::numeric_limits<double>::quiet_NaN();
        double tau = u, f = u;
        try {
            u = control(st);
            const PhysicalInputs pin = reconstruct_physical(st, u, curve, params);
            tau = pin.tau;
            f = pin.f;
        } catch (const SingularFeedbackError&) {
            // row near the singular surface keeps NaN inputs
        }
        traj.u.push_back(u);
        traj.tau.push_back(tau);
        traj.f.push_back(f);

        if (cycle) {
            const double nu = cycle->nu(st.s);
            traj.nu.push_back(nu);
            traj.dist_R.push_back(std::abs(st.s_dot - nu));
        } else {
            traj.nu.push_back(std::numeric_limits<double>::quiet_NaN());
            traj.dist_R.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }

    if (res.status == odeint::Status::event_terminated && !res.events.empty()) {
        traj.fall_time = res.events.back().t;
    } else if (res.status == odeint::Status::nonfinite_state && singular_hit) {
        traj.singular_time = singular_t;
    } else if (!res.ok()) {
        traj.abort_reason = res.message;
    }

    if (!traj.t.empty()) {
        traj.laps = static_cast<int>(std::floor((traj.s.back() - traj.s.front()) /
                                                traj.curve_period));
        traj.decay_rate = fit_decay_rate(traj.t, traj.e, traj.e_dot);
        if (cycle) traj.terminal_dist_R = traj.dist_R.back();
    }
    return traj;
}

ReducedTrajectory simulate_reduced(double s0, double s_dot0, double t_end,
                                   const ReducedModel& model,
                                   const odeint::IntegratorConfig& integrator) {
    odeint::Rhs rhs = [&model](double, const odeint::State& y, odeint::State& dydt) {
        dydt[0] = y[1];
        dydt[1] = reduced_rhs(y[0], y[1], model);
    };
    auto res = odeint::integrate(rhs, 0.0, {s0, s_dot0}, t_end, integrator);
    if (!res.ok()) throw Error("simulate_reduced: " + res.message);

    ReducedTrajectory out;
    out.t = res.t;
    out.s.reserve(res.x.size());
    out.s_dot.reserve(res.x.size());
    for (const auto& y : res.x) {
        out.s.push_back(y[0]);
        out.s_dot.push_back(y[1]);
    }
    out.raw = std::move(res);
    return out;
}

ReplayResult replay_through_getz(const SimConfig& config, const VhcProfile& profile,
                                 const Curve& curve, const BicycleParams& params) {
    // state: (phi, phi_dot, s, s_dot, kappa_bar, phi_g, phi_dot_g, v_g)
    odeint::Rhs rhs = [&](double, const odeint::State& y, odeint::State& dydt) {
        const FullState st = unpack(y);
        const double u = config.controller == SimConfig::Controller::invariance
                             ? invariance_feedback(st.s, st.s_dot, profile, curve, params)
                             : stabilizing_feedback(st, profile, curve, params, config.gains).u;
        const FullDeriv d = sys_rhs(st, u, curve, params);
        const PhysicalInputs pin = reconstruct_physical(st, u, curve, params);
        GetzState gz;
        gz.kappa_bar = y[4];
        gz.phi = y[5];
        gz.phi_dot = y[6];
        gz.v = y[7];
        const GetzDeriv gd = getz_rhs(gz, pin, params);
        dydt[0] = d.phi_dot;
        dydt[1] = d.phi_ddot;
        dydt[2] = d.s_dot;
        dydt[3] = d.s_ddot;
        dydt[4] = gd.kappa_bar_dot;
        dydt[5] = gd.phi_dot;
        dydt[6] = gd.phi_ddot;
        dydt[7] = gd.v_dot;
    };

    const FullState& init = config.initial;
    const Curvature c0 = curve.curvature(init.s);
    odeint::State y0 = {init.phi,          init.phi_dot, init.s,  init.s_dot,
                        c0.kappa,          init.phi,     init.phi_dot,
                        c0.speed * init.s_dot};

    // stop after one full traversal of the curve (or t_end, whichever first)
    const double s_target = init.s + curve.period();
    odeint::EventSpec lap;
    lap.guard = [s_target](double, const odeint::State& y) { return y[2] - s_target; };
    lap.direction = odeint::Direction::rising;
    lap.terminal = true;

    auto res = odeint::integrate(rhs, 0.0, y0, config.t_end, config.integrator, {lap});
    if (!res.ok()) throw Error("replay_through_getz: " + res.message);

    ReplayResult out;
    out.duration = res.end_time();
    for (std::size_t i = 0; i < res.t.size(); ++i) {
        const auto& y = res.x[i];
        const Curvature c = curve.curvature(y[2]);
        out.max_phi_err = std::max(out.max_phi_err, std::abs(y[5] - y[0]));
        out.max_v_err = std::max(out.max_v_err, std::abs(y[7] - c.speed * y[3]));
        out.max_kappa_err = std::max(out.max_kappa_err, std::abs(y[4] - c.kappa));
    }
    return out;
}

std::vector<double> section_speeds(const Trajectory& traj, double s_star, double T) {
    std::vector<double> speeds;
    if (traj.size() < 2) return speeds;
    // unwrapped s is monotone after convergence; find crossings of s_star + k T
    double target = s_star;
    while (target < traj.s.front()) target += T;
    for (std::size_t i = 1; i < traj.size(); ++i) {
        while (traj.s[i - 1] <= target && traj.s[i] > target) {
            const double w = (target - traj.s[i - 1]) / (traj.s[i] - traj.s[i - 1]);
            speeds.push_back(traj.s_dot[i - 1] + w * (traj.s_dot[i] - traj.s_dot[i - 1]));
            target += T;
        }
    }
    return speeds;
}

void Trajectory::write_csv(std::ostream& os,
                           const std::vector<std::pair<std::string, double>>& meta) const {
    if (!meta.empty()) {
        os << "#";
        for (const auto& [k, v] : meta) os << ' ' << k << '=' << csv::num(v);
        os << "\n";
    }
    os << "t,phi,phidot,s,sdot,u,tau,f,e,edot,nu,dist_R\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
        os << csv::num(t[i]) << ',' << csv::num(phi[i]) << ',' << csv::num(phi_dot[i]) << ','
           << csv::num(s[i]) << ',' << csv::num(s_dot[i]) << ',' << csv::num(u[i]) << ','
           << csv::num(tau[i]) << ',' << csv::num(f[i]) << ',' << csv::num(e[i]) << ','
           << csv::num(e_dot[i]) << ',' << csv::num(nu[i]) << ',' << csv::num(dist_R[i]) << "\n";
    }
}

}  // namespace bikevhc
