// bikevhc: batch pipeline for roll-stabilized traversal of closed planar
// curves. Stages: curve -> synth -> analyze -> simulate -> report, each
// driven by one JSON config and writing CSV artifacts plus a summary file.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "bikevhc/csv.hpp"
#include "bikevhc/errors.hpp"
#include "bikevhc/geometry.hpp"
#include "bikevhc/reduced_dynamics.hpp"
#include "bikevhc/sim.hpp"
#include "bikevhc/vhc_synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bikevhc;

namespace {

// exit codes, also documented in the README
constexpr int kExitOk = 0;
constexpr int kExitBoundFail = 2;
constexpr int kExitNonConvex = 3;
constexpr int kExitSynthFail = 4;
constexpr int kExitAnalyzeFail = 5;
constexpr int kExitFall = 6;
constexpr int kExitSingular = 7;
constexpr int kExitIntegrator = 8;
constexpr int kExitUsage = 64;

struct RunConfig {
    Curve curve = Curve::circle(1.0);
    bool arclength = false;
    BicycleParams params;
    GeneratorConfig generator;
    Gains gains;
    SimConfig sim;
    fs::path output_dir = "out";
};

odeint::IntegratorConfig parse_integrator(const json& j) {
    odeint::IntegratorConfig cfg;
    if (j.contains("method")) {
        const std::string m = j["method"];
        if (m == "rk45")
            cfg.method = odeint::Method::rk45_adaptive;
        else if (m == "rk4")
            cfg.method = odeint::Method::rk4_fixed;
        else
            throw ParseError("config: unknown integrator method '" + m + "'");
    }
    cfg.rtol = j.value("rtol", cfg.rtol);
    cfg.atol = j.value("atol", cfg.atol);
    cfg.step = j.value("step", cfg.step);
    cfg.max_steps = j.value("max_steps", cfg.max_steps);
    return cfg;
}

Curve parse_curve(const json& j) {
    const std::string kind = j.at("kind");
    if (kind == "ellipse") return Curve::ellipse(j.at("A"), j.at("B"));
    if (kind == "circle") return Curve::circle(j.at("R"));
    if (kind == "polar_flower")
        return Curve::polar_flower(j.at("c0"), j.at("c1"), j.at("lobes"));
    if (kind == "sampled") {
        std::ifstream in(j.at("csv").get<std::string>());
        if (!in) throw ParseError("config: cannot open sampled-curve CSV");
        return Curve::read_csv(in);
    }
    throw ParseError("config: unknown curve kind '" + kind + "'");
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& ex) {
        throw ParseError(std::string("config: ") + ex.what());
    }

    RunConfig cfg;
    cfg.curve = parse_curve(j.at("curve"));
    cfg.arclength = j.value("arclength", false);
    if (cfg.arclength) cfg.curve = arclength_reparam(cfg.curve, j.value("reparam_nodes", 2048));

    if (j.contains("params")) {
        const json& p = j["params"];
        cfg.params.b = p.value("b", cfg.params.b);
        cfg.params.h = p.value("h", cfg.params.h);
        cfg.params.m = p.value("m", cfg.params.m);
        cfg.params.g = p.value("g", cfg.params.g);
    }
    cfg.params.validate();

    if (j.contains("generator")) {
        const json& g = j["generator"];
        cfg.generator.x0 = g.value("x0", cfg.generator.x0);
        cfg.generator.shoot_tol = g.value("shoot_tol", cfg.generator.shoot_tol);
        cfg.generator.n_profile_nodes = g.value("nodes", cfg.generator.n_profile_nodes);
        if (g.contains("mu")) {
            if (g["mu"].is_string()) {
                const std::string m = g["mu"];
                if (m == "one")
                    cfg.generator.mu = MuSpec::one();
                else if (m == "a")
                    cfg.generator.mu = MuSpec::proportional_to_a();
                else
                    throw ParseError("config: unknown mu '" + m + "'");
            } else {
                const json& t = g["mu"];
                std::vector<double> values = t.at("values");
                const double period = t.value("period", cfg.curve.period());
                std::vector<double> knots(values.size());
                for (std::size_t i = 0; i < values.size(); ++i)
                    knots[i] = period * i / values.size();
                cfg.generator.mu = MuSpec::from_table(knots, values, period);
            }
        }
    }
    cfg.generator.validate();

    if (j.contains("gains")) {
        cfg.gains.K1 = j["gains"].value("K1", cfg.gains.K1);
        cfg.gains.K2 = j["gains"].value("K2", cfg.gains.K2);
    }

    if (j.contains("sim")) {
        const json& s = j["sim"];
        cfg.sim.t_end = s.value("t_end", cfg.sim.t_end);
        if (s.contains("initial")) {
            const auto v = s["initial"].get<std::vector<double>>();
            if (v.size() != 4)
                throw ParseError("config: sim.initial must be [phi, phidot, s, sdot]");
            cfg.sim.initial = {v[0], v[1], v[2], v[3]};
        }
        if (s.contains("integrator")) cfg.sim.integrator = parse_integrator(s["integrator"]);
        cfg.sim.fall_guard = s.value("fall_guard", true);
    }
    cfg.sim.gains = cfg.gains;

    cfg.output_dir = j.value("output_dir", std::string("out"));
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    out << text;
}

std::string kv(const std::string& key, double value) {
    return key + " = " + csv::num(value) + "\n";
}

VhcProfile load_or_build_profile(const RunConfig& cfg, const std::optional<fs::path>& profile_path,
                                 bool allow_build) {
    const fs::path path =
        profile_path.value_or(cfg.output_dir / "profile.csv");
    if (fs::exists(path)) {
        std::ifstream in(path);
        return VhcProfile::read_csv(in);
    }
    if (!allow_build)
        throw ParseError("profile file not found: " + path.string() +
                         " (run the synth stage first or pass --profile)");
    const double eps = find_periodic_epsilon(cfg.generator, cfg.curve, cfg.params);
    return build_profile(eps, cfg.generator, cfg.curve, cfg.params);
}

int cmd_curve(const RunConfig& cfg) {
    const CurveMetrics m = check_curvature_bound(cfg.curve, cfg.params);
    std::ostringstream sum;
    sum << "[curve]\n";
    sum << kv("length", m.length);
    sum << "turning_number = " << m.turning_number << "\n";
    sum << kv("mean_curvature_lhs", m.mean_curvature_lhs);
    sum << kv("bound_rhs", m.bound_rhs);
    sum << "convex = " << (m.convex ? "true" : "false") << "\n";
    sum << "bound = " << (m.bound_ok() ? "pass" : "fail") << "\n";
    std::cout << sum.str();

    fs::create_directories(cfg.output_dir);
    write_text(cfg.output_dir / "curve_summary.txt", sum.str());
    if (cfg.curve.is_sampled()) {
        std::ofstream os(cfg.output_dir / "curve.csv");
        cfg.curve.write_csv(os);
    }
    if (!m.bound_ok()) return kExitBoundFail;
    if (!m.convex) {
        std::cout << "warning: curve is not convex; the traversal gate does not apply "
                     "directly, synthesis falls back to bracket expansion\n";
        return kExitNonConvex;
    }
    return kExitOk;
}

int cmd_synth(const RunConfig& cfg) {
    try {
        const double eps = find_periodic_epsilon(cfg.generator, cfg.curve, cfg.params);
        const VhcProfile prof = build_profile(eps, cfg.generator, cfg.curve, cfg.params);
        const EpsilonBracket br = epsilon_bracket(cfg.generator, cfg.curve, cfg.params);

        std::ostringstream sum;
        sum << "[synth]\n";
        sum << kv("epsilon", eps);
        sum << kv("x0", cfg.generator.x0);
        if (br.valid) {
            sum << kv("eps_minus", br.eps_minus);
            sum << kv("eps_plus", br.eps_plus);
            sum << kv("K_plus", br.K_plus);
            sum << kv("K_minus", br.K_minus);
        } else {
            sum << "bracket = expanded (non-convex curve)\n";
        }
        if (prof.roll_bounds) {
            sum << kv("roll_lower", prof.roll_bounds->lower);
            sum << kv("roll_upper", prof.roll_bounds->upper);
        }
        sum << kv("min_abs_delta", prof.min_abs_delta());
        sum << "regular = " << (prof.check_regularity() ? "true" : "false") << "\n";
        std::cout << sum.str();

        fs::create_directories(cfg.output_dir);
        write_text(cfg.output_dir / "synth_summary.txt", sum.str());
        std::ofstream os(cfg.output_dir / "profile.csv");
        prof.write_csv(os);
        return kExitOk;
    } catch (const SynthesisError& ex) {
        std::cerr << "synthesis failed: " << ex.what() << "\n";
        return kExitSynthFail;
    }
}

int cmd_analyze(const RunConfig& cfg, const std::optional<fs::path>& profile_path) {
    VhcProfile prof = load_or_build_profile(cfg, profile_path, false);
    try {
        if (!prof.check_regularity())
            throw RegularityError("profile fails the regularity check (delta ~ 0)");
        const ReducedModel model(prof, cfg.curve, cfg.params);
        const HypothesesReport rep = check_hypotheses(model);

        std::ostringstream sum;
        sum << "[analyze]\n";
        sum << kv("psi1_min", rep.psi1_min);
        sum << kv("psi2_integral", rep.psi2_integral);
        sum << "hypotheses = " << (rep.ok() ? "pass" : "fail") << "\n";

        if (!rep.ok()) {
            std::cout << sum.str();
            fs::create_directories(cfg.output_dir);
            write_text(cfg.output_dir / "analyze_summary.txt", sum.str());
            return kExitAnalyzeFail;
        }

        const LimitCycle cycle = limit_cycle(model);
        sum << kv("z0", cycle.z0_bar);
        sum << kv("phiT", cycle.contraction);
        sum << kv("log_phiT", cycle.log_contraction);
        sum << "domain_of_attraction = { sdot > -nu(s) } (diagnostic)\n";
        std::cout << sum.str();

        fs::create_directories(cfg.output_dir);
        write_text(cfg.output_dir / "analyze_summary.txt", sum.str());
        std::ofstream os(cfg.output_dir / "cycle.csv");
        cycle.write_csv(os);
        return kExitOk;
    } catch (const RegularityError& ex) {
        std::cerr << "analysis failed: " << ex.what() << "\n";
        return kExitAnalyzeFail;
    } catch (const Error& ex) {
        std::cerr << "analysis failed: " << ex.what() << "\n";
        return kExitAnalyzeFail;
    }
}

int cmd_simulate(const RunConfig& cfg, const std::optional<fs::path>& profile_path) {
    VhcProfile prof = load_or_build_profile(cfg, profile_path, false);

    std::optional<LimitCycle> cycle;
    try {
        const ReducedModel model(prof, cfg.curve, cfg.params);
        if (model.hypotheses_ok()) cycle = limit_cycle(model);
    } catch (const Error&) {
        // distance to the orbit is simply not reported
    }

    SimConfig scfg = cfg.sim;
    scfg.gains = cfg.gains;
    const Trajectory traj =
        simulate_closed_loop(scfg, prof, cycle ? &*cycle : nullptr, cfg.curve, cfg.params);

    std::ostringstream sum;
    sum << "[simulate]\n";
    sum << kv("t_end", traj.t.empty() ? 0.0 : traj.t.back());
    sum << "laps = " << traj.laps << "\n";
    sum << kv("decay_rate", traj.decay_rate);
    sum << kv("decay_rate_predicted", predicted_decay_rate(cfg.gains));
    sum << kv("terminal_dist_R", traj.terminal_dist_R);
    if (traj.fall_time) sum << kv("fall_time", *traj.fall_time);
    if (traj.singular_time) sum << kv("singular_time", *traj.singular_time);
    if (!traj.abort_reason.empty()) sum << "abort = " << traj.abort_reason << "\n";
    std::cout << sum.str();

    fs::create_directories(cfg.output_dir);
    write_text(cfg.output_dir / "simulate_summary.txt", sum.str());
    std::ofstream os(cfg.output_dir / "trajectory.csv");
    traj.write_csv(os, {{"K1", cfg.gains.K1},
                        {"K2", cfg.gains.K2},
                        {"t_end", cfg.sim.t_end},
                        {"phi0", cfg.sim.initial.phi},
                        {"phidot0", cfg.sim.initial.phi_dot},
                        {"s0", cfg.sim.initial.s},
                        {"sdot0", cfg.sim.initial.s_dot}});

    if (traj.fall_time) {
        std::cerr << "fall detected at t = " << csv::num(*traj.fall_time) << "\n";
        return kExitFall;
    }
    if (traj.singular_time) {
        std::cerr << "controller singular at t = " << csv::num(*traj.singular_time) << "\n";
        return kExitSingular;
    }
    if (!traj.abort_reason.empty()) {
        std::cerr << "integration aborted: " << traj.abort_reason << "\n";
        return kExitIntegrator;
    }
    return kExitOk;
}

int cmd_report(const RunConfig& cfg) {
    std::ostringstream all;
    for (const char* name :
         {"curve_summary.txt", "synth_summary.txt", "analyze_summary.txt",
          "simulate_summary.txt"}) {
        const fs::path p = cfg.output_dir / name;
        if (!fs::exists(p)) continue;
        std::ifstream in(p);
        all << in.rdbuf() << "\n";
    }
    if (all.str().empty()) {
        std::cerr << "report: no stage summaries found in " << cfg.output_dir << "\n";
        return kExitUsage;
    }
    write_text(cfg.output_dir / "report.txt", all.str());
    std::cout << all.str();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"VHC-based roll stabilization of Getz's bicycle on closed curves"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::string profile_path;

    auto add_common = [&](CLI::App* sub, bool with_profile) {
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--out", out_override, "override the configured output directory");
        if (with_profile)
            sub->add_option("--profile", profile_path, "constraint profile CSV to load");
    };

    CLI::App* c_curve = app.add_subcommand("curve", "geometry metrics and traversal gate");
    CLI::App* c_synth = app.add_subcommand("synth", "generate the roll constraint profile");
    CLI::App* c_analyze = app.add_subcommand("analyze", "reduced dynamics and speed orbit");
    CLI::App* c_sim = app.add_subcommand("simulate", "closed-loop run with fall detection");
    CLI::App* c_report = app.add_subcommand("report", "concatenate stage summaries");
    add_common(c_curve, false);
    add_common(c_synth, false);
    add_common(c_analyze, true);
    add_common(c_sim, true);
    add_common(c_report, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kExitUsage : kExitUsage;
    }

    try {
        RunConfig cfg = load_config(config_path);
        if (!out_override.empty()) cfg.output_dir = out_override;
        std::optional<fs::path> prof;
        if (!profile_path.empty()) prof = profile_path;

        if (c_curve->parsed()) return cmd_curve(cfg);
        if (c_synth->parsed()) return cmd_synth(cfg);
        if (c_analyze->parsed()) return cmd_analyze(cfg, prof);
        if (c_sim->parsed()) return cmd_simulate(cfg, prof);
        if (c_report->parsed()) return cmd_report(cfg);
        return kExitUsage;
    } catch (const ParseError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const Error& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitUsage;
    }
}
