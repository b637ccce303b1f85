#pragma once

#include <optional>
#include <utility>

#include "sre/backward_ode.hpp"
#include "sre/problem.hpp"

namespace sre {

/// Per-iteration record of the monotone Picard scheme for the inverse
/// equation. monotonicity_margin_per_iter[k] is the most negative
/// eigenvalue of X^(k+1) - X^(k+2) over all nodes (differences of
/// successive iterates are only ordered from the second iterate on).
struct IterationReport {
    int iterations = 0;
    std::vector<double> sup_diff_per_iter;
    std::vector<double> monotonicity_margin_per_iter;
    bool converged = false;
};

struct PicardOptions {
    double picard_tol = 1e-10;
    int max_iter = 200;
    double overflow_guard = 1e12;
};

/// One step of the iteration: backward-integrates the linear equation
///   dX/dt = Atil*X + X*Atil' - B*X*B' + X*Qtil*Xp + Xp*Qtil*X - Xp*Qtil*Xp
/// with X(T) = X_T, where Xp is the previous iterate (interpolated at RK4
/// half-steps). Requires Rtil == 0 and a positive definite terminal.
MatPath picard_step(const MatPath& X_prev, const TransformedProblem& tp,
                    const TimeGrid& grid, double overflow_guard = 1e12);

/// Runs the iteration from X^(0) == 0 until the sup-node Frobenius
/// distance between successive iterates drops below tol. Throws
/// NoConvergence at max_iter, LostPositivity if the converged path has a
/// non-positive node, BlowUpDetected if the guard trips.
std::pair<MatPath, IterationReport>
solve_inverse_equation(const TransformedProblem& tp, const TimeGrid& grid,
                       const PicardOptions& opts = {});

/// Aggregated guarantees of a completed solve.
struct SolveReport {
    double sre_residual_max = 0.0;
    double inverse_identity_max = 0.0;
    std::vector<double> min_eig_k_over_time;
    double lower_bound_margin = 0.0;
    double lower_bound_delta = 0.0;
    double lower_bound_beta0 = 0.0;
    bool terminal_exact = false;
    bool positivity_ok = false;
    AssumptionIReport assumption_i;
    AssumptionIIReport assumption_ii;
    IterationReport iteration;

    double residual_tol = 0.0;
    double identity_tol = 0.0;
    double bound_tol = 0.0;
    bool residual_pass = false;
    bool identity_pass = false;
    bool bound_pass = false;

    bool all_pass() const {
        return residual_pass && identity_pass && bound_pass && positivity_ok &&
               terminal_exact;
    }
};

/// Full solution: P, K = P + R, X = K^{-1} and the martingale integrand
/// Lambda (identically zero in the deterministic reduction, stored
/// explicitly so consumers always see the full pair (P, Lambda)).
struct SRESolution {
    MatPath P;
    MatPath K;
    MatPath X;
    MatPath Lambda;
    SolveReport report;
};

/// P = X^{-1} - R and Lambda = -K Z K - G with Z == 0. The terminal node is
/// taken from the problem data (K(T) = R(T) + H, P(T) = H) so the terminal
/// condition holds exactly. Throws NotPositiveDefinite with the node index
/// when X is not invertible somewhere.
SRESolution recover_solution(const MatPath& Xpath, const SREProblem& p,
                             const TransformedProblem& tp);

/// Independent route for K via
///   dK/dt = -[K*Atil + Atil'*K + Qtil] + (K*B)*(X*B')*K,  K(T) = R(T) + H,
/// treating the solved X as a known parameter (no inversion involved).
MatPath solve_k_equation(const MatPath& Xpath, const TransformedProblem& tp,
                         const TimeGrid& grid, double overflow_guard = 1e12);

/// max over nodes of ||K(t)*X(t) - I||_F.
double check_inverse_identity(const MatPath& Kpath, const MatPath& Xpath);

/// Max Frobenius norm over grid nodes of the residual of
///   -dP/dt = PA + A'P + C'PC + Q - (PB + C'P)(R+P)^{-1}(B'P + PC),
/// with dP/dt from centered differences (second-order one-sided at the
/// endpoints). Throws NotPositiveDefinite if R + P loses definiteness.
double sre_residual(const SRESolution& sol, const SREProblem& p, const TimeGrid& grid);

/// A-posteriori decay rate for the inverse-equation lower bound:
/// beta0 = max(0, sup over nodes of max_eig(sym(2*Atil + X*Qtil))).
/// The converged X satisfies min_eig(X(t)) >= delta * exp(-beta0*T).
double beta0_rate(const MatPath& Xpath, const TransformedProblem& tp);

/// Direct backward integration of the P-equation, inverting K = R + P at
/// every stage point. Definiteness loss or blow-up is a probe result, not
/// an exception; the returned path is marked failed at the node.
struct DirectSolveOutcome {
    enum class Status { ok, lost_definiteness, blow_up };
    MatPath path;
    Status status = Status::ok;
    int fail_node = -1;
};
DirectSolveOutcome solve_p_direct(const SREProblem& p, const TimeGrid& grid,
                                  double overflow_guard = 1e12);

/// Unconstrained cubic probe dX/dt = X*Qtil*X - X*X*X backward from X_T,
/// with the blow-up time sharpened by bisection inside the tripping step.
struct ExplosionResult {
    MatPath path;
    std::optional<double> blow_up_time;
};
ExplosionResult explosion_probe(const SymMat& Qtil, const SymMat& X_T,
                                const TimeGrid& grid, double overflow_guard = 1e12);

/// End-to-end pipeline: transform, assumption checks, inverse-equation
/// solve, recovery, independent K route, residual and bound verification.
struct SolveOptions {
    PicardOptions picard;
    double check_tol = 1e-9;      // assumption (i) tolerance
    double delta = 0.0;           // assumption (ii) constant; 0 = derive from K(T)
    double residual_tol = 1e-3;
    double identity_tol = 1e-5;
    double bound_tol = 1e-6;
    bool override_checks = false;
};
SRESolution solve_sre(const SREProblem& p, const SolveOptions& opts = {});

} // namespace sre
