#pragma once

#include <optional>

#include "sre/grid.hpp"

namespace sre {

/// Coefficient processes A, B, C, Q of the state equation on [0, T].
/// Each is a constant matrix or a sampled table with piecewise-linear
/// evaluation; Q must be symmetric at every sample.
struct CoefficientSet {
    Eigen::Index n = 0;
    MatFn A, B, C;
    MatFn Q;
};

enum class GaugeMode { deterministic, pathwise };

/// The gauge process R as an Ito process R(t) = R(0) + int F ds + int G dW.
/// In deterministic mode G must vanish identically and R is produced by
/// quadrature of F; pathwise gauges are produced by the gauge generator in
/// the stochastic layer.
struct GaugeSpec {
    GaugeMode mode = GaugeMode::deterministic;
    SymMat R0;
    MatFn F;
    MatFn G;
};

/// A full problem instance: state coefficients, gauge, terminal weight H,
/// horizon T and the solver grid resolution.
struct SREProblem {
    CoefficientSet coeffs;
    GaugeSpec gauge;
    SymMat H;
    double T = 0.0;
    int grid_steps = 0;

    TimeGrid grid() const { return TimeGrid(T, grid_steps); }

    /// Dimension/finiteness/symmetry/bound validation; throws Error.
    void validate(double coeff_bound = 1e3) const;
};

/// Node-sampled transformed data for the change of variables K = R + P:
///   Qtil = Q + F + C'RC + R(BC - A) + (C'B' - A')R
///   Atil = A - BC
///   Rtil = RB + C'R + G
/// together with the terminal pair K(T) = R(T) + H and X(T) = K(T)^{-1}.
/// B is carried along because the inverse- and K-equation drifts need it.
struct TransformedProblem {
    TimeGrid grid;
    MatFn Qtil;
    MatFn Atil;
    MatFn Rtil;
    MatFn Bfun;
    MatPath Rpath;
    SymMat K_T;
    std::optional<SymMat> X_T;   // absent when K(T) is not positive definite
};

/// Report of condition (i): Rtil = 0 and Qtil >= 0 on the grid.
struct AssumptionIReport {
    double max_rtil_norm = 0.0;   // max over nodes of ||Rtil||_inf
    double min_eig_qtil = 0.0;    // min over nodes of the smallest eigenvalue
    double tol = 0.0;
    bool rtil_pass = false;
    bool qtil_pass = false;
    bool pass = false;
};

/// Report of condition (ii): R(T) + H > 0 and (R(T)+H)^{-1} >= delta*I,
/// tested as min_eig > 0 and max_eig <= 1/delta.
struct AssumptionIIReport {
    double min_eig_kt = 0.0;
    double max_eig_kt = 0.0;
    double delta = 0.0;
    bool pass = false;
};

/// Deterministic gauge path R(t_i) = R0 + cumulative trapezoidal quadrature
/// of F on the grid. Throws ModeMismatch for pathwise gauges.
MatPath build_gauge_path(const GaugeSpec& gauge, const TimeGrid& grid);

/// Change of variables on the problem's own grid (deterministic mode).
TransformedProblem transform(const SREProblem& p);

/// Same, with an externally supplied gauge path and diffusion coefficient
/// (used to close the loop on generated pathwise gauges).
TransformedProblem transform_with_gauge(const SREProblem& p, const MatPath& Rpath,
                                        const MatFn& G);

AssumptionIReport check_assumption_i(const TransformedProblem& tp, double tol = 1e-9);

AssumptionIIReport check_assumption_ii(const SREProblem& p, double delta);

/// The check applied to a known terminal K(T) = R(T) + H.
AssumptionIIReport check_assumption_ii_terminal(const SymMat& K_T, double delta);

/// Sharpest constant for which condition (ii) holds, 1/max_eig(K_T);
/// requires K_T positive definite.
double assumption_ii_delta(const SymMat& K_T);

} // namespace sre
