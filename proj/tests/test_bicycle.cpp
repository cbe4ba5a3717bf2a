#include <doctest.h>

#include <cmath>

#include "bikevhc/bicycle.hpp"
#include "bikevhc/errors.hpp"
#include "bikevhc/reduced_dynamics.hpp"
#include "bikevhc/sim.hpp"

using namespace bikevhc;

namespace {

const BicycleParams kParams;

VhcProfile make_ellipse_profile(const Curve& ell) {
    GeneratorConfig cfg;
    cfg.x0 = M_PI / 8;
    cfg.mu = MuSpec::one();
    return build_profile(find_periodic_epsilon(cfg, ell, kParams), cfg, ell, kParams);
}

}  // namespace

TEST_CASE("general dynamics reduce to the unit-speed form on arc-length curves") {
    const Curve r = arclength_reparam(Curve::ellipse(15.0, 10.0), 2048);
    const double h = kParams.h, b = kParams.b, g = kParams.g;

    // evaluate at stored nodes where the samples are analytically exact
    for (int i = 0; i < 2048; i += 97) {
        const double s = r.period() * i / 2048;
        const Curvature c = r.curvature(s);
        for (double phi : {0.1, 0.45}) {
            for (double sd : {0.0, 1.3}) {
                const FullState st{phi, 0.2, s, sd};
                const double u = 0.7;
                const double general = sys_rhs(st, u, r, kParams).phi_ddot;
                const double reduced =
                    (g * std::sin(phi) -
                     ((1.0 - h * c.kappa * std::sin(phi)) * c.kappa + b * c.kappa_prime) *
                         std::cos(phi) * sd * sd -
                     b * c.kappa * std::cos(phi) * u) /
                    h;
                CHECK(std::abs(general - reduced) < 1e-12 * std::max(1.0, std::abs(general)));
            }
        }
    }
}

TEST_CASE("upright rest is an equilibrium of the roll dynamics") {
    const Curve ell = Curve::ellipse(15.0, 10.0);
    for (double s : {0.0, 1.1, 4.4}) {
        const FullDeriv d = sys_rhs({0.0, 0.0, s, 0.0}, 0.0, ell, kParams);
        CHECK(d.phi_ddot == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
        CHECK(d.s_ddot == 0.0);
    }
}

TEST_CASE("unforced lean falls outward monotonically") {
    const Curve ell = Curve::ellipse(15.0, 10.0);
    for (double phi = 0.05; phi < M_PI / 2; phi += 0.2) {
        const FullDeriv d = sys_rhs({phi, 0.0, 0.7, 0.0}, 0.0, ell, kParams);
        CHECK(d.phi_ddot > 0.0);
    }
}

TEST_CASE("constraint stays invariant under the invariance input") {
    const Curve ell = Curve::ellipse(15.0, 10.0);
    const VhcProfile prof = make_ellipse_profile(ell);

    SimConfig cfg;
    cfg.controller = SimConfig::Controller::invariance;
    cfg.t_end = 5.0;  // the open roll mode amplifies integration noise beyond that
    const double s0 = 0.4, sd0 = 0.9;
    cfg.initial = {prof.eval(s0).Phi, prof.eval(s0).Phi_prime * sd0, s0, sd0};
    cfg.integrator.rtol = 1e-12;
    cfg.integrator.atol = 1e-14;

    const Trajectory traj = simulate_closed_loop(cfg, prof, nullptr, ell, kParams);
    REQUIRE(traj.completed());

    // the defining identity of the constrained motion at every visited
    // (s, s_dot): d/dt(Phi'(s) s_dot) = phi_ddot on the manifold
    for (std::size_t i = 0; i < traj.size(); i += 7) {
        const VhcEval ev = prof.eval(traj.s[i]);
        const FullState st{ev.Phi, ev.Phi_prime * traj.s_dot[i], traj.s[i], traj.s_dot[i]};
        const double u = invariance_feedback(st.s, st.s_dot, prof, ell, kParams);
        const double phi_ddot = sys_rhs(st, u, ell, kParams).phi_ddot;
        const double lhs = ev.Phi_pprime * st.s_dot * st.s_dot + ev.Phi_prime * u;
        CHECK(std::abs(lhs - phi_ddot) < 1e-8);
    }
}

TEST_CASE("tracking output has uniform relative degree two") {
    const Curve ell = Curve::ellipse(15.0, 10.0);
    const VhcProfile prof = make_ellipse_profile(ell);

    // e_ddot depends affinely on u with slope -Delta
    for (double s : {0.2, 1.7, 3.9, 5.8}) {
        for (double phi : {0.05, 0.3, 0.52}) {
            const FullState st{phi, 0.4, s, 1.1};
            const VhcEval ev = prof.eval(s);
            auto e_ddot = [&](double u) {
                const FullDeriv d = sys_rhs(st, u, ell, kParams);
                return d.phi_ddot - ev.Phi_pprime * st.s_dot * st.s_dot - ev.Phi_prime * u;
            };
            const double slope = e_ddot(1.0) - e_ddot(0.0);
            const double delta =
                ev.Phi_prime + curvature_gain(ell, kParams, s) * std::cos(phi);
            CHECK(std::abs(slope + delta) < 1e-10);
        }
    }
}

TEST_CASE("tracking feedback reduces to the invariance input on the manifold") {
    const Curve ell = Curve::ellipse(15.0, 10.0);
    const VhcProfile prof = make_ellipse_profile(ell);

    for (double s : {0.0, 0.9, 2.6, 5.1}) {
        for (double sd : {0.0, 0.8, 2.0}) {
            const VhcEval ev = prof.eval(s);
            const FullState on_gamma{ev.Phi, ev.Phi_prime * sd, s, sd};
            const double u_inv = invariance_feedback(s, sd, prof, ell, kParams);

            const FeedbackResult with_gains =
                stabilizing_feedback(on_gamma, prof, ell, kParams, {5.0, 2.0});
            CHECK(std::abs(with_gains.e) < 1e-15);
            CHECK(std::abs(with_gains.e_dot) < 1e-15);
            CHECK(with_gains.u == doctest::Approx(u_inv).epsilon(1e-12));

            const FeedbackResult no_gains =
                stabilizing_feedback(on_gamma, prof, ell, kParams, {0.0, 0.0});
            CHECK(no_gains.u == doctest::Approx(u_inv).epsilon(1e-12));
        }
    }
}

TEST_CASE("closed-loop tracking error follows the linear design dynamics") {
    const Curve ell = Curve::ellipse(15.0, 10.0);
    const VhcProfile prof = make_ellipse_profile(ell);

    SimConfig cfg;
    cfg.gains = {5.0, 2.0};
    cfg.t_end = 4.0;
    cfg.initial = {prof.eval(0.0).Phi + 0.05, prof.eval(0.0).Phi_prime * 0.5, 0.0, 0.5};
    cfg.integrator.rtol = 1e-11;
    cfg.integrator.atol = 1e-13;
    const Trajectory traj = simulate_closed_loop(cfg, prof, nullptr, ell, kParams);
    REQUIRE(traj.completed());

    // K1 = 5, K2 = 2: lambda = -1 +- 2i, e(t) = exp(-t)(e0 cos 2t + c sin 2t)
    const double e0 = traj.e.front();
    const double ed0 = traj.e_dot.front();
    const double c = (ed0 + e0) / 2.0;
    for (std::size_t i = 0; i < traj.size(); i += 5) {
        const double t = traj.t[i];
        const double ref = std::exp(-t) * (e0 * std::cos(2 * t) + c * std::sin(2 * t));
        CHECK(std::abs(traj.e[i] - ref) < 1e-6);
    }
}

TEST_CASE("tracking feedback is singular far from the manifold") {
    const Curve circ = Curve::circle(5.0);
    GeneratorConfig gcfg;
    gcfg.x0 = M_PI / 8;
    gcfg.mu = MuSpec::proportional_to_a();
    const VhcProfile prof =
        build_profile(find_periodic_epsilon(gcfg, circ, kParams), gcfg, circ, kParams);

    // constant profile: Delta = a cos(phi) vanishes as phi -> pi/2
    const FullState st{M_PI / 2 - 1e-9, 0.0, 0.3, 0.5};
    CHECK_THROWS_AS(stabilizing_feedback(st, prof, circ, kParams, {5.0, 2.0}),
                    SingularFeedbackError);
}

TEST_CASE("full model: upright rest and the inverted-pendulum fall") {
    GetzState rest;
    const GetzDeriv d0 = getz_rhs(rest, {0.0, 0.0}, kParams);
    CHECK(d0.phi_ddot == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
    CHECK(d0.v_dot == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));

    GetzState leaned;
    leaned.phi = 0.4;
    const GetzDeriv d1 = getz_rhs(leaned, {0.0, 0.0}, kParams);
    CHECK(d1.phi_ddot == doctest::Approx(kParams.g * std::sin(0.4) / kParams.h).epsilon(1e-13));
}

TEST_CASE("full-model inertia matrix stays positive definite over the state space") {
    // det M = h^2 ((1 - h k sin phi)^2 + b^2 k^2 sin^2 phi) cannot vanish for b > 0
    for (double k : {-0.5, 0.0, 0.3, 2.0}) {
        for (double phi = -1.5; phi <= 1.5; phi += 0.137) {
            for (double v : {0.0, 1.7, -2.2}) {
                GetzState st;
                st.kappa_bar = k;
                st.phi = phi;
                st.phi_dot = 0.4;
                st.v = v;
                const GetzDeriv d = getz_rhs(st, {0.3, -0.8}, kParams);
                CHECK(std::isfinite(d.phi_ddot));
                CHECK(std::isfinite(d.v_dot));
            }
        }
    }
}

TEST_CASE("physical input reconstruction closed forms") {
    const Curve circ = Curve::circle(5.0);
    // tau = kappa'(s) s_dot vanishes on circles
    const PhysicalInputs on_circle =
        reconstruct_physical({0.3, 0.1, 1.2, 0.8}, 0.4, circ, kParams);
    CHECK(on_circle.tau == doctest::Approx(0.0).scale(1.0).epsilon(1e-13));

    // at rest with no input, the thrust balances the gravity-curvature couple:
    // f = m b kappa g sin(phi) cos(phi)
    const Curve ell = Curve::ellipse(15.0, 10.0);
    for (double s : {0.0, 0.8, 2.9}) {
        for (double phi : {0.1, 0.4}) {
            const PhysicalInputs pin = reconstruct_physical({phi, 0.0, s, 0.0}, 0.0, ell, kParams);
            const double kappa = ell.curvature(s).kappa;
            const double ref =
                kParams.m * kParams.b * kappa * kParams.g * std::sin(phi) * std::cos(phi);
            CHECK(pin.f == doctest::Approx(ref).scale(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("replaying the closed loop through the full model agrees") {
    // The full model follows the reconstructed inputs open loop, so its
    // unstable roll mode amplifies integration noise by exp(sqrt(g/h) t);
    // the horizons below keep that amplification far from the tolerances.

    // partial arc on the large ellipse exercises tau = kappa'(s) s_dot
    const Curve ell = Curve::ellipse(15.0, 10.0);
    const VhcProfile prof = make_ellipse_profile(ell);
    SimConfig cfg;
    cfg.gains = {5.0, 2.0};
    cfg.t_end = 6.0;
    cfg.initial = {0.1, 0.0, 0.0, 0.2};
    cfg.integrator.rtol = 1e-12;
    cfg.integrator.atol = 1e-14;
    const ReplayResult rep = replay_through_getz(cfg, prof, ell, kParams);
    CHECK(rep.max_phi_err < 1e-7);
    CHECK(rep.max_v_err < 1e-7);
    CHECK(rep.max_kappa_err < 1e-8);

    // full lap on a short ellipse (about 3.5 s); errors stay far below 1e-5
    const Curve small = Curve::ellipse(4.0, 3.5);
    GeneratorConfig sg;
    sg.x0 = M_PI / 4;
    sg.mu = MuSpec::one();
    const VhcProfile sprof =
        build_profile(find_periodic_epsilon(sg, small, kParams), sg, small, kParams);
    SimConfig scfg;
    scfg.gains = {5.0, 2.0};
    scfg.t_end = 60.0;  // lap event stops much earlier
    scfg.initial = {0.05 + sprof.eval(0.0).Phi, 0.0, 0.0, 0.5};
    scfg.integrator.rtol = 1e-12;
    scfg.integrator.atol = 1e-14;
    const ReplayResult lap = replay_through_getz(scfg, sprof, small, kParams);
    CHECK(lap.duration < 10.0);  // completed a full traversal
    CHECK(lap.max_phi_err < 1e-5);
    CHECK(lap.max_v_err < 1e-5);
    CHECK(lap.max_kappa_err < 1e-6);
}
