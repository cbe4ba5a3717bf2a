#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bikevhc/bicycle.hpp"
#include "bikevhc/odeint.hpp"
#include "bikevhc/reduced_dynamics.hpp"

namespace bikevhc {

struct SimConfig {
    double t_end = 60.0;
    FullState initial;
    Gains gains;
    odeint::IntegratorConfig integrator;
    bool fall_guard = true;

    /// Input law driving the run. Tests exercise the fall guard and the
    /// constrained motion with the non-default laws.
    enum class Controller { stabilizing, invariance, none };
    Controller controller = Controller::stabilizing;
};

/// Time-indexed closed-loop record with inputs, reconstructed physical
/// inputs, tracking errors, distance to the steady-state orbit and events.
struct Trajectory {
    std::vector<double> t, phi, phi_dot, s, s_dot, u, tau, f, e, e_dot, nu, dist_R;

    std::optional<double> fall_time;
    std::optional<double> singular_time;
    std::string abort_reason;  // non-empty when integration did not reach t_end

    double curve_period = 0.0;
    int laps = 0;
    double decay_rate = std::numeric_limits<double>::quiet_NaN();
    double terminal_dist_R = std::numeric_limits<double>::quiet_NaN();

    std::size_t size() const { return t.size(); }
    bool completed() const { return !fall_time && !singular_time && abort_reason.empty(); }

    /// CSV with header t,phi,phidot,s,sdot,u,tau,f,e,edot,nu,dist_R.
    /// Metadata pairs are echoed as "# key=value" lines.
    void write_csv(std::ostream& os,
                   const std::vector<std::pair<std::string, double>>& meta = {}) const;
};

/// Integrates the constrained dynamics under the configured controller with
/// fall detection at |phi| = pi/2. Falls and controller singularities return
/// the partial trajectory tagged with the event instead of throwing.
Trajectory simulate_closed_loop(const SimConfig& config, const VhcProfile& profile,
                                const LimitCycle* cycle, const Curve& curve,
                                const BicycleParams& params);

struct ReducedTrajectory {
    std::vector<double> t, s, s_dot;
    odeint::Integration raw;  // dense-output handle for resampling
};

/// Integrates the reduced motion s'' = Psi1 + Psi2 s'^2.
ReducedTrajectory simulate_reduced(double s0, double s_dot0, double t_end,
                                   const ReducedModel& model,
                                   const odeint::IntegratorConfig& integrator = {});

/// Replays a closed-loop run through the full model: both systems are
/// co-integrated, the full model driven open loop by the reconstructed
/// (tau, f). Error metrics certify that the constrained model and the full
/// model describe the same motion.
struct ReplayResult {
    double max_phi_err = 0.0;
    double max_v_err = 0.0;
    double max_kappa_err = 0.0;
    double duration = 0.0;
};

ReplayResult replay_through_getz(const SimConfig& config, const VhcProfile& profile,
                                 const Curve& curve, const BicycleParams& params);

/// Least-squares exponential decay rate of |e| + |e_dot| (peak envelope when
/// the error rings). NaN when the signal is too small to fit.
double fit_decay_rate(const std::vector<double>& t, const std::vector<double>& e,
                      const std::vector<double>& e_dot);

/// Magnitude of the slow closed-loop error eigenvalue of e'' = -K1 e - K2 e'.
double predicted_decay_rate(const Gains& gains);

/// Interpolated s_dot at successive upward crossings of s = s_star (mod T).
std::vector<double> section_speeds(const Trajectory& traj, double s_star, double T);

}  // namespace bikevhc
