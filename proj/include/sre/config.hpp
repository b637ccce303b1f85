#pragma once

#include <optional>
#include <string>

#include "sre/problem.hpp"
#include "sre/riccati.hpp"
#include "sre/stochastic.hpp"

#include "json.hpp"

namespace sre {

struct SolverConfig {
    int grid_steps = 2000;
    double picard_tol = 1e-10;
    int max_iter = 200;
    double overflow_guard = 1e12;
    bool override_checks = false;
    double check_tol = 1e-9;
    double delta = 0.0;          // 0 = derive the sharpest constant from K(T)
    double residual_tol = 1e-3;
    double identity_tol = 1e-5;
    double bound_tol = 1e-6;

    SolveOptions solve_options() const;
};

struct OracleConfig {
    std::uint64_t seed = 1;
    int n_paths = 100000;
    bool antithetic = false;
    double bias_coeff = 4.0;     // bias allowance c in |mc - ode| <= 3*stderr + c*dt
    double T = 1.0;
    int grid_steps = 200;
    LinearBSDEData data;
    std::vector<Vec> probes;
};

struct ExplodeConfig {
    double T = 1.0;
    int grid_steps = 2000;
    SymMat Qtil;
    SymMat X_T;
    double overflow_guard = 1e12;
};

struct GenrConfig {
    double T = 1.0;
    std::uint64_t seed = 1;
    Mat B, C;
    MatFn F;
    SymMat S0;
    std::vector<int> ladder = {200, 800, 3200};
    bool flip_compensator = false;
    double slope_min = 0.9;
};

struct OutputConfig {
    std::string directory = ".";
    bool json = true;
    bool csv = true;
};

/// Parsed run configuration. Sections are optional; each CLI subcommand
/// demands the ones it needs. `echo` keeps the normalized document for
/// self-contained reports.
struct RunConfig {
    nlohmann::json echo;
    std::optional<SREProblem> problem;
    SolverConfig solver;
    std::optional<OracleConfig> oracle;
    std::optional<ExplodeConfig> explode;
    std::optional<GenrConfig> genr;
    OutputConfig output;
};

/// Parses the JSON document; throws ConfigError with the offending field
/// named.
RunConfig parse_config(const nlohmann::json& doc);

/// Reads and parses a config file.
RunConfig load_config(const std::string& path);

} // namespace sre
