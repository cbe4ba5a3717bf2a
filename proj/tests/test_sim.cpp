#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bikevhc/csv.hpp"
#include "bikevhc/sim.hpp"

using namespace bikevhc;

namespace {

const BicycleParams kParams;  // b = 0.7, h = 1.0

struct EllipseSetup {
    Curve curve = Curve::ellipse(15.0, 10.0);
    VhcProfile profile;
    ReducedModel model;
    LimitCycle cycle;

    EllipseSetup()
        : profile(make_profile(curve)),
          model(profile, curve, kParams),
          cycle(limit_cycle(model)) {}

    static VhcProfile make_profile(const Curve& c) {
        GeneratorConfig cfg;
        cfg.x0 = M_PI / 8;
        cfg.mu = MuSpec::one();
        return build_profile(find_periodic_epsilon(cfg, c, kParams), cfg, c, kParams);
    }
};

const EllipseSetup& ellipse_setup() {
    static const EllipseSetup setup;
    return setup;
}

}  // namespace

TEST_CASE("reference closed-loop run converges to the manifold and the orbit") {
    const auto& es = ellipse_setup();
    SimConfig cfg;
    cfg.t_end = 40.0;
    cfg.gains = {5.0, 2.0};
    cfg.initial = {0.1, 0.0, 0.0, 0.2};

    const Trajectory traj = simulate_closed_loop(cfg, es.profile, &es.cycle, es.curve, kParams);
    REQUIRE(traj.completed());
    CHECK_FALSE(traj.fall_time.has_value());

    CHECK(traj.terminal_dist_R < 1e-3);
    CHECK(traj.laps >= 2);

    // error decay at the rate of the slow closed-loop eigenvalue (1.0 here)
    const double predicted = predicted_decay_rate(cfg.gains);
    CHECK(predicted == doctest::Approx(1.0));
    CHECK(traj.decay_rate == doctest::Approx(predicted).epsilon(0.10));

    // maneuvering certificate: forward motion with bounded speed in the tail
    double nu_max = 0.0;
    for (double v : es.cycle.nu_values) nu_max = std::max(nu_max, v);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj.t[i] < 20.0) continue;
        CHECK(traj.s_dot[i] > 0.0);
        CHECK(traj.s_dot[i] < 2.0 * nu_max);
        CHECK(std::abs(traj.phi[i]) < M_PI / 2);
    }
}

TEST_CASE("runs started on the manifold stay on it") {
    const auto& es = ellipse_setup();
    SimConfig cfg;
    cfg.t_end = 40.0;
    const double s0 = 0.0;
    cfg.initial = {es.profile.eval(s0).Phi, 0.0, s0, 0.0};  // s_dot = 0 rest start

    const Trajectory traj = simulate_closed_loop(cfg, es.profile, &es.cycle, es.curve, kParams);
    REQUIRE(traj.completed());
    double worst = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i)
        worst = std::max(worst, std::abs(traj.e[i]) + std::abs(traj.e_dot[i]));
    CHECK(worst < 1e-6);
    CHECK(traj.terminal_dist_R < 1e-3);
}

TEST_CASE("reduced motion equals the on-manifold closed loop") {
    const auto& es = ellipse_setup();

    const double s0 = 0.3, sd0 = 0.8, t_end = 10.0;
    SimConfig cfg;
    cfg.t_end = t_end;
    cfg.initial = {es.profile.eval(s0).Phi, es.profile.eval(s0).Phi_prime * sd0, s0, sd0};
    cfg.integrator.rtol = 1e-11;
    cfg.integrator.atol = 1e-13;
    const Trajectory full = simulate_closed_loop(cfg, es.profile, nullptr, es.curve, kParams);
    REQUIRE(full.completed());

    odeint::IntegratorConfig icfg;
    icfg.rtol = 1e-11;
    icfg.atol = 1e-13;
    const ReducedTrajectory red = simulate_reduced(s0, sd0, t_end, es.model, icfg);

    for (std::size_t i = 0; i < full.size(); i += 3) {
        const odeint::State zr = red.raw.sample(full.t[i]);
        CHECK(std::abs(zr[0] - full.s[i]) < 1e-6);
        CHECK(std::abs(zr[1] - full.s_dot[i]) < 1e-6);
    }
}

TEST_CASE("steady-state speed is periodic lap over lap") {
    const auto& es = ellipse_setup();
    SimConfig cfg;
    cfg.t_end = 60.0;
    cfg.initial = {0.1, 0.0, 0.0, 0.2};

    const Trajectory traj = simulate_closed_loop(cfg, es.profile, &es.cycle, es.curve, kParams);
    REQUIRE(traj.completed());
    const std::vector<double> speeds = section_speeds(traj, 0.5, traj.curve_period);
    REQUIRE(speeds.size() >= 4);
    // compare consecutive post-convergence crossings
    for (std::size_t i = speeds.size() - 2; i + 1 < speeds.size(); ++i)
        CHECK(std::abs(speeds[i + 1] - speeds[i]) < 1e-5);
}

TEST_CASE("fall guard tags the trajectory instead of erroring") {
    const auto& es = ellipse_setup();
    SimConfig cfg;
    cfg.t_end = 10.0;
    cfg.controller = SimConfig::Controller::none;  // unforced lean must fall
    cfg.initial = {0.3, 0.0, 0.0, 0.0};

    const Trajectory traj = simulate_closed_loop(cfg, es.profile, &es.cycle, es.curve, kParams);
    REQUIRE(traj.fall_time.has_value());
    CHECK(*traj.fall_time < 10.0);
    CHECK(std::abs(traj.phi.back()) == doctest::Approx(M_PI / 2).epsilon(1e-8));
    CHECK_FALSE(traj.completed());

    // rows carry strictly increasing times and finite states up to the event
    for (std::size_t i = 1; i < traj.size(); ++i) {
        CHECK(traj.t[i] > traj.t[i - 1]);
        CHECK(std::isfinite(traj.phi[i]));
        CHECK(std::isfinite(traj.s_dot[i]));
    }
}

TEST_CASE("controller singularity aborts with a tagged trajectory") {
    // zero gains cannot arrest the error growth; before the lean reaches
    // pi/2 the decoupling term Delta crosses zero and the controller aborts
    const auto& es = ellipse_setup();
    SimConfig cfg;
    cfg.t_end = 10.0;
    cfg.gains = {0.0, 0.0};
    cfg.initial = {0.9, 2.0, 0.0, 0.2};

    const Trajectory traj = simulate_closed_loop(cfg, es.profile, &es.cycle, es.curve, kParams);
    CHECK_FALSE(traj.completed());
    REQUIRE(traj.singular_time.has_value());
    CHECK(*traj.singular_time < 1.0);
}

TEST_CASE("flower-curve closed loop converges as well") {
    const Curve flower = arclength_reparam(Curve::polar_flower(5.0, 1.5, 2), 4096);
    GeneratorConfig gcfg;
    gcfg.x0 = 0.35;
    gcfg.mu = MuSpec::one();
    gcfg.n_profile_nodes = 4096;
    const VhcProfile prof =
        build_profile(find_periodic_epsilon(gcfg, flower, kParams), gcfg, flower, kParams);
    const ReducedModel model(prof, flower, kParams);
    REQUIRE(model.hypotheses_ok());
    const LimitCycle cycle = limit_cycle(model);

    SimConfig cfg;
    cfg.t_end = 60.0;
    cfg.gains = {5.0, 2.0};
    cfg.initial = {0.0, 0.0, 0.0, 2.0};
    const Trajectory traj = simulate_closed_loop(cfg, prof, &cycle, flower, kParams);
    REQUIRE(traj.completed());
    CHECK(traj.terminal_dist_R < 1e-3);
    CHECK(traj.laps >= 2);
    CHECK(traj.decay_rate == doctest::Approx(predicted_decay_rate(cfg.gains)).epsilon(0.10));
}

TEST_CASE("error decay rate tracks the slow eigenvalue for overdamped gains") {
    const auto& es = ellipse_setup();
    for (Gains gains : {Gains{0.5, 2.0}, Gains{1.0, 4.0}}) {
        SimConfig cfg;
        cfg.t_end = 40.0;
        cfg.gains = gains;
        cfg.initial = {0.1, 0.0, 0.0, 0.2};
        const Trajectory traj =
            simulate_closed_loop(cfg, es.profile, &es.cycle, es.curve, kParams);
        REQUIRE(traj.completed());
        const double predicted = predicted_decay_rate(gains);
        CHECK(predicted ==
              doctest::Approx(0.5 * (gains.K2 -
                                     std::sqrt(gains.K2 * gains.K2 - 4.0 * gains.K1))));
        CHECK(traj.decay_rate == doctest::Approx(predicted).epsilon(0.10));
    }
}

TEST_CASE("identical configurations produce identical trajectories") {
    const auto& es = ellipse_setup();
    SimConfig cfg;
    cfg.t_end = 15.0;
    cfg.initial = {0.1, 0.0, 0.0, 0.2};

    auto run = [&]() {
        const Trajectory traj =
            simulate_closed_loop(cfg, es.profile, &es.cycle, es.curve, kParams);
        std::ostringstream os;
        traj.write_csv(os, {{"t_end", cfg.t_end}});
        return os.str();
    };
    CHECK(run() == run());
}

TEST_CASE("trajectory CSV carries the documented columns") {
    const auto& es = ellipse_setup();
    SimConfig cfg;
    cfg.t_end = 2.0;
    cfg.initial = {0.1, 0.0, 0.0, 0.2};
    const Trajectory traj = simulate_closed_loop(cfg, es.profile, &es.cycle, es.curve, kParams);

    std::ostringstream os;
    traj.write_csv(os, {{"K1", 5.0}, {"K2", 2.0}});
    std::istringstream is(os.str());
    const csv::Table table = csv::read(
        is, {"t", "phi", "phidot", "s", "sdot", "u", "tau", "f", "e", "edot", "nu", "dist_R"});
    CHECK(table.rows() == traj.size());
    CHECK(table.metadata.at("K1") == 5.0);
    // first row reproduces the initial condition
    CHECK(table.cell(0, 1) == doctest::Approx(0.1));
    CHECK(table.cell(0, 4) == doctest::Approx(0.2));
}
