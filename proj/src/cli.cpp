#include "sre/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sre/config.hpp"
#include "sre/io.hpp"

#include "CLI11.hpp"

namespace sre::cli {

namespace {

using nlohmann::json;

constexpr int kExitPass = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfigError = 2;

struct Invocation {
    std::string config_path;
    std::string out_dir;      // overrides output.directory when set
    int threads = 1;
    bool override_checks = false;
};

class Stopwatch {
public:
    double elapsed_ms() const {
        const auto now = std::chrono::steady_clock::now();
        return std::chrono::duration<double, std::milli>(now - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::filesystem::path prepare_out_dir(const RunConfig& cfg, const Invocation& inv) {
    std::filesystem::path dir =
        inv.out_dir.empty() ? cfg.output.directory : inv.out_dir;
    std::filesystem::create_directories(dir);
    return dir;
}

void write_report(const std::filesystem::path& dir, const RunConfig& cfg,
                  json checks, json summary, json diagnostics, double elapsed_ms) {
    json report;
    report["config_echo"] = cfg.echo;
    report["checks"] = std::move(checks);
    report["solution_summary"] = std::move(summary);
    report["diagnostics"] = std::move(diagnostics);
    report["timings"] = {{"total_ms", elapsed_ms}};
    std::ofstream out(dir / "report.json", std::ios::binary);
    out << report.dump(2) << "\n";
}

void write_iterates_csv(const std::filesystem::path& file, const IterationReport& it) {
    std::ofstream out(file, std::ios::binary);
    out << "iter,sup_diff,monotonicity_margin\n";
    for (std::size_t k = 0; k < it.sup_diff_per_iter.size(); ++k) {
        // margins start at the second iterate
        const double margin = k >= 1 && k - 1 < it.monotonicity_margin_per_iter.size()
                                  ? it.monotonicity_margin_per_iter[k - 1]
                                  : std::numeric_limits<double>::quiet_NaN();
        out << (k + 1) << "," << format_double(it.sup_diff_per_iter[k]) << ","
            << format_double(margin) << "\n";
    }
}

const SREProblem& require_problem(const RunConfig& cfg) {
    if (!cfg.problem) throw ConfigError("this command needs a 'problem' section");
    return *cfg.problem;
}

int cmd_check(const RunConfig& cfg, const Invocation& inv) {
    Stopwatch clock;
    const SREProblem& p = require_problem(cfg);
    const TransformedProblem tp = transform(p);

    const AssumptionIReport rep_i = check_assumption_i(tp, cfg.solver.check_tol);
    const double delta = cfg.solver.delta > 0.0
                             ? cfg.solver.delta
                             : (tp.X_T ? assumption_ii_delta(tp.K_T) : 1.0);
    const AssumptionIIReport rep_ii = check_assumption_ii_terminal(tp.K_T, delta);
    const bool pass = rep_i.pass && rep_ii.pass;

    const auto dir = prepare_out_dir(cfg, inv);
    json checks = {{"assumption_i", to_json(rep_i)},
                   {"assumption_ii", to_json(rep_ii)},
                   {"pass", pass}};
    json diagnostics = {{"check_tol", cfg.solver.check_tol},
                        {"delta", delta},
                        {"K_T", mat_to_json(tp.K_T.mat())}};
    write_report(dir, cfg, std::move(checks), json::object(), std::move(diagnostics),
                 clock.elapsed_ms());

    std::cout << (pass ? "check: pass" : "check: FAIL") << " (max ||Rtil|| = "
              << rep_i.max_rtil_norm << ", min eig Qtil = " << rep_i.min_eig_qtil
              << ", eig(K_T) in [" << rep_ii.min_eig_kt << ", " << rep_ii.max_eig_kt
              << "])\n";
    return pass ? kExitPass : kExitCheckFailed;
}

int cmd_solve(const RunConfig& cfg, const Invocation& inv) {
    Stopwatch clock;
    const SREProblem& p = require_problem(cfg);
    SolveOptions opts = cfg.solver.solve_options();
    if (inv.override_checks) opts.override_checks = true;

    const auto dir = prepare_out_dir(cfg, inv);
    SRESolution sol;
    try {
        sol = solve_sre(p, opts);
    } catch (const Error& e) {
        json checks = {{"pass", false}};
        json diagnostics = {{"failure", e.what()}};
        if (const auto* blow = dynamic_cast<const BlowUpDetected*>(&e)) {
            diagnostics["blow_up_last_finite_node"] = blow->last_finite_node();
        }
        if (const auto* lost = dynamic_cast<const LostPositivity*>(&e)) {
            diagnostics["lost_positivity_node"] = lost->node();
        }
        if (const auto* npd = dynamic_cast<const NotPositiveDefinite*>(&e)) {
            diagnostics["not_positive_definite_node"] = npd->node();
        }
        write_report(dir, cfg, std::move(checks), json::object(),
                     std::move(diagnostics), clock.elapsed_ms());
        std::cerr << "solve failed: " << e.what() << "\n";
        return kExitCheckFailed;
    }

    const SolveReport& rep = sol.report;
    if (cfg.output.csv) {
        write_mat_path_csv((dir / "P.csv").string(), sol.P);
        write_mat_path_csv((dir / "K.csv").string(), sol.K);
        write_mat_path_csv((dir / "X.csv").string(), sol.X);
        write_mat_path_csv((dir / "Lambda.csv").string(), sol.Lambda);
        write_mat_path_csv((dir / "R.csv").string(),
                           build_gauge_path(p.gauge, p.grid()));
        write_iterates_csv(dir / "iterates.csv", rep.iteration);
    }

    json summary = {
        {"P0", mat_to_json(sol.P[0])},
        {"K0", mat_to_json(sol.K[0])},
        {"X0", mat_to_json(sol.X[0])},
        {"P_T", mat_to_json(sol.P[sol.P.nodes() - 1])},
        {"grid_steps", sol.P.grid().steps()},
    };
    json checks = {{"assumption_i", to_json(rep.assumption_i)},
                   {"assumption_ii", to_json(rep.assumption_ii)},
                   {"pass", rep.all_pass()}};
    json diagnostics = to_json(rep);
    diagnostics["sym_drift"] = sol.X.sym_drift;
    write_report(dir, cfg, std::move(checks), std::move(summary), std::move(diagnostics),
                 clock.elapsed_ms());

    std::cout << (rep.all_pass() ? "solve: pass" : "solve: FAIL")
              << " (residual " << rep.sre_residual_max << ", identity "
              << rep.inverse_identity_max << ", iterations "
              << rep.iteration.iterations << ")\n";
    if (!rep.all_pass()) {
        if (!rep.residual_pass) std::cerr << "failed: residual tolerance\n";
        if (!rep.identity_pass) std::cerr << "failed: inverse identity tolerance\n";
        if (!rep.bound_pass) std::cerr << "failed: exponential lower bound\n";
        if (!rep.positivity_ok) std::cerr << "failed: K positivity constraint\n";
        if (!rep.terminal_exact) std::cerr << "failed: terminal condition\n";
        return kExitCheckFailed;
    }
    return kExitPass;
}

int cmd_oracle(const RunConfig& cfg, const Invocation& inv) {
    Stopwatch clock;
    if (!cfg.oracle) throw ConfigError("this command needs an 'oracle' section");
    const OracleConfig& oc = *cfg.oracle;
    const TimeGrid grid(oc.T, oc.grid_steps);
    const MatPath y = solve_linear_bsde(oc.data, grid);
    const BrownianEnsemble ensemble(oc.seed, oc.n_paths, grid, oc.antithetic);
    const double bias_allowance = oc.bias_coeff * grid.dt();

    bool all_pass = true;
    json probes = json::array();
    for (const Vec& pvec : oc.probes) {
        const double ode_value = pvec.dot(y[0] * pvec);
        const McEstimate est = mc_representation(oc.data, pvec, ensemble, inv.threads);
        const double gap = std::abs(est.value - ode_value);
        const double budget = 3.0 * est.std_error + bias_allowance;
        const bool pass = gap <= budget;
        all_pass = all_pass && pass;
        json pj;
        for (Eigen::Index i = 0; i < pvec.size(); ++i) pj.push_back(pvec(i));
        probes.push_back({{"p", pj},
                          {"ode_value", ode_value},
                          {"mc_value", est.value},
                          {"std_error", est.std_error},
                          {"gap", gap},
                          {"budget", budget},
                          {"pass", pass}});
    }

    const auto dir = prepare_out_dir(cfg, inv);
    json checks = {{"pass", all_pass}};
    json diagnostics = {{"probes", probes},
                        {"n_paths", oc.n_paths},
                        {"seed", oc.seed},
                        {"antithetic", oc.antithetic},
                        {"bias_allowance", bias_allowance},
                        {"bias_coeff", oc.bias_coeff}};
    write_report(dir, cfg, std::move(checks), json::object(), std::move(diagnostics),
                 clock.elapsed_ms());

    std::cout << (all_pass ? "oracle: pass" : "oracle: FAIL") << " ("
              << oc.probes.size() << " probe(s), " << oc.n_paths << " paths)\n";
    return all_pass ? kExitPass : kExitCheckFailed;
}

int cmd_explode(const RunConfig& cfg, const Invocation& inv) {
    Stopwatch clock;
    if (!cfg.explode) throw ConfigError("this command needs an 'explode' section");
    const ExplodeConfig& ec = *cfg.explode;
    const TimeGrid grid(ec.T, ec.grid_steps);
    const ExplosionResult res =
        explosion_probe(ec.Qtil, ec.X_T, grid, ec.overflow_guard);

    const auto dir = prepare_out_dir(cfg, inv);
    if (cfg.output.csv) {
        write_mat_path_csv((dir / "X.csv").string(), res.path);
    }
    json summary;
    if (res.blow_up_time) {
        summary = {{"status", "blow_up"},
                   {"blow_up_time", *res.blow_up_time},
                   {"blow_up_node", res.path.blow_up_node()}};
        std::cout << "explode: blow-up at t = " << *res.blow_up_time << "\n";
    } else {
        summary = {{"status", "completed"}, {"X0", mat_to_json(res.path[0])}};
        std::cout << "explode: completed without blow-up\n";
    }
    json diagnostics = {{"overflow_guard", ec.overflow_guard},
                        {"grid_steps", ec.grid_steps}};
    write_report(dir, cfg, json::object(), std::move(summary), std::move(diagnostics),
                 clock.elapsed_ms());
    return kExitPass;   // blow-up is a finding, not an error
}

int cmd_genr(const RunConfig& cfg, const Invocation& inv) {
    Stopwatch clock;
    if (!cfg.genr) throw ConfigError("this command needs a 'genr' section");
    const GenrConfig& gc = *cfg.genr;

    const SlopeReport slope = gauge_refinement_slope(
        gc.B, gc.C, gc.F, gc.S0, gc.seed, gc.ladder, gc.T, gc.flip_compensator);
    const bool pass = slope.slope >= gc.slope_min;

    const auto dir = prepare_out_dir(cfg, inv);
    if (cfg.output.csv) {
        const int finest = *std::max_element(gc.ladder.begin(), gc.ladder.end());
        const TimeGrid grid(gc.T, finest);
        const std::vector<double> w = BrownianEnsemble(gc.seed, 1, grid).nodes(0);
        const MatPath r = generate_gauge(gc.B, gc.C, gc.F, gc.S0, w, grid);
        write_mat_path_csv((dir / "R.csv").string(), r);
    }

    json checks = {{"pass", pass}, {"slope_min", gc.slope_min}};
    json summary = {{"slope", slope.slope},
                    {"ladder", slope.ladder},
                    {"max_defects", slope.max_defects},
                    {"max_defect_over_dt", slope.max_defect_over_dt}};
    json diagnostics = {{"seed", gc.seed},
                        {"flip_compensator", gc.flip_compensator}};
    write_report(dir, cfg, std::move(checks), std::move(summary), std::move(diagnostics),
                 clock.elapsed_ms());

    std::cout << (pass ? "genr: pass" : "genr: FAIL") << " (slope " << slope.slope
              << ")\n";
    return pass ? kExitPass : kExitCheckFailed;
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Indefinite stochastic Riccati equation solver and verifier"};
    app.require_subcommand(1);

    Invocation inv;
    app.add_option("--config", inv.config_path, "Path to the JSON config file")
        ->required();
    app.add_option("--out", inv.out_dir, "Output directory (overrides config)");
    app.add_option("--threads", inv.threads, "Worker threads for path simulation")
        ->check(CLI::PositiveNumber);
    app.add_flag("--override-checks", inv.override_checks,
                 "Run the solver even when assumption checks fail");

    auto* check = app.add_subcommand("check", "Evaluate the solvability assumptions");
    auto* solve = app.add_subcommand("solve", "Solve the SRE and verify guarantees");
    auto* oracle = app.add_subcommand(
        "oracle", "Cross-check the linear solver against Monte Carlo");
    auto* explode = app.add_subcommand("explode", "Probe the unconstrained cubic equation");
    auto* genr = app.add_subcommand("genr", "Generate a pathwise gauge and verify it");
    for (auto* sub : {check, solve, oracle, explode, genr}) {
        sub->fallthrough();   // global flags are valid after the subcommand
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            // --help
            std::cout << app.help();
            return kExitPass;
        }
        std::cerr << "argument error: " << e.what() << "\n";
        return kExitConfigError;
    }

    try {
        const RunConfig cfg = load_config(inv.config_path);
        if (check->parsed()) return cmd_check(cfg, inv);
        if (solve->parsed()) return cmd_solve(cfg, inv);
        if (oracle->parsed()) return cmd_oracle(cfg, inv);
        if (explode->parsed()) return cmd_explode(cfg, inv);
        if (genr->parsed()) return cmd_genr(cfg, inv);
        std::cerr << "no subcommand given\n";
        return kExitConfigError;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckFailed;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kExitCheckFailed;
    }
}

} // namespace sre::cli
