#include "sre/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sre {

namespace {

void require_rtil_zero(const TransformedProblem& tp, double tol = 1e-7) {
    double worst = 0.0;
    for (int i = 0; i <= tp.grid.steps(); ++i) {
        worst = std::max(worst, max_abs(tp.Rtil(tp.grid.node(i))));
    }
    if (worst > tol) {
        std::ostringstream os;
        os << "inverse equation requires Rtil == 0 (condition (c-a)); max norm "
           << worst;
        throw Error(os.str());
    }
}

const SymMat& require_terminal(const TransformedProblem& tp) {
    if (!tp.X_T) {
        throw NotPositiveDefinite(
            "inverse equation: K(T) = R(T) + H is not positive definite, "
            "terminal X(T) does not exist");
    }
    return *tp.X_T;
}

} // namespace

MatPath picard_step(const MatPath& X_prev, const TransformedProblem& tp,
                    const TimeGrid& grid, double overflow_guard) {
    if (!(X_prev.grid() == grid)) {
        throw GridMismatch("picard_step: previous iterate lives on a different grid");
    }
    require_rtil_zero(tp);
    const SymMat& eta = require_terminal(tp);

    const auto rhs = [&](double t, const Mat& x) -> Mat {
        const Mat a = tp.Atil(t);
        const Mat b = tp.Bfun(t);
        const Mat q = tp.Qtil(t);
        const Mat xp = X_prev.interpolate(t);
        const Mat xq = x * q;
        const Mat xpq = xp * q;
        return a * x + x * a.transpose() - b * x * b.transpose() + xq * xp +
               xpq * x - xpq * xp;
    };
    IntegrateOptions opts;
    opts.overflow_guard = overflow_guard;
    MatPath next = integrate_backward(rhs, eta.mat(), grid, opts);
    if (next.blown_up()) {
        std::ostringstream os;
        os << "picard_step: overflow guard tripped at node " << next.blow_up_node();
        throw BlowUpDetected(os.str(), next.blow_up_node() + 1);
    }
    return next;
}

std::pair<MatPath, IterationReport>
solve_inverse_equation(const TransformedProblem& tp, const TimeGrid& grid,
                       const PicardOptions& opts) {
    const SymMat& eta = require_terminal(tp);
    MatPath current(grid, eta.dim());   // X^(0) == 0
    IterationReport report;

    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        MatPath next = picard_step(current, tp, grid, opts.overflow_guard);
        const double diff = sup_frobenius_distance(current, next);
        report.sup_diff_per_iter.push_back(diff);
        if (iter >= 2) {
            // X^(n) - X^(n+1) should be PSD from the second iterate on.
            double worst = std::numeric_limits<double>::infinity();
            for (int i = 0; i < next.nodes(); ++i) {
                worst = std::min(worst, min_eig(symmetrize(current[i] - next[i])));
            }
            report.monotonicity_margin_per_iter.push_back(worst);
        }
        current = std::move(next);
        report.iterations = iter;
        if (diff <= opts.picard_tol) {
            report.converged = true;
            break;
        }
    }
    if (!report.converged) {
        std::ostringstream os;
        os << "solve_inverse_equation: no convergence after " << opts.max_iter
           << " iterations (last diff " << report.sup_diff_per_iter.back() << ")";
        throw NoConvergence(os.str());
    }
    for (int i = 0; i < current.nodes(); ++i) {
        const double lam = min_eig(symmetrize(current[i]));
        if (!(lam > 0.0)) {
            std::ostringstream os;
            os << "solve_inverse_equation: X lost positive definiteness at node "
               << i << " (min eigenvalue " << lam << ")";
            throw LostPositivity(os.str(), i);
        }
    }
    return {std::move(current), std::move(report)};
}

SRESolution recover_solution(const MatPath& Xpath, const SREProblem& p,
                             const TransformedProblem& tp) {
    const TimeGrid grid = Xpath.grid();
    if (!(grid == tp.Rpath.grid())) {
        throw GridMismatch("recover_solution: X path and gauge path grids differ");
    }
    const int n_last = grid.steps();

    SRESolution sol;
    sol.X = Xpath;
    sol.K = MatPath(grid, Xpath.dim());
    sol.P = MatPath(grid, Xpath.dim());
    sol.Lambda = MatPath(grid, Xpath.dim());

    for (int i = 0; i < n_last; ++i) {
        SymMat k;
        try {
            k = inv_pd(symmetrize(Xpath[i]));
        } catch (const NotPositiveDefinite&) {
            std::ostringstream os;
            os << "recover_solution: X not positive definite at node " << i
               << ", constraint K > 0 cannot be recovered";
            throw NotPositiveDefinite(os.str(), i);
        }
        sol.K[i] = k.mat();
        sol.P[i] = k.mat() - tp.Rpath[i];
        sol.Lambda[i] = -p.gauge.G(grid.node(i));
    }
    // Terminal node from the problem data itself so that P(T) = H exactly.
    sol.K[n_last] = tp.K_T.mat();
    sol.P[n_last] = p.H.mat();
    sol.Lambda[n_last] = -p.gauge.G(grid.horizon());

    sol.report.min_eig_k_over_time.resize(static_cast<std::size_t>(n_last) + 1);
    sol.report.positivity_ok = true;
    for (int i = 0; i <= n_last; ++i) {
        const double lam = min_eig(symmetrize(sol.K[i]));
        sol.report.min_eig_k_over_time[static_cast<std::size_t>(i)] = lam;
        if (!(lam > 0.0)) sol.report.positivity_ok = false;
    }
    sol.report.terminal_exact =
        (sol.P[n_last].array() == p.H.mat().array()).all();
    return sol;
}

MatPath solve_k_equation(const MatPath& Xpath, const TransformedProblem& tp,
                         const TimeGrid& grid, double overflow_guard) {
    if (!(Xpath.grid() == grid)) {
        throw GridMismatch("solve_k_equation: X path lives on a different grid");
    }
    const auto rhs = [&](double t, const Mat& k) -> Mat {
        const Mat a = tp.Atil(t);
        const Mat b = tp.Bfun(t);
        const Mat q = tp.Qtil(t);
        const Mat x = Xpath.interpolate(t);
        return -(k * a + a.transpose() * k + q) +
               (k * b) * (x * b.transpose()) * k;
    };
    IntegrateOptions opts;
    opts.overflow_guard = overflow_guard;
    MatPath path = integrate_backward(rhs, tp.K_T.mat(), grid, opts);
    if (path.blown_up()) {
        std::ostringstream os;
        os << "solve_k_equation: overflow guard tripped at node " << path.blow_up_node();
        throw BlowUpDetected(os.str(), path.blow_up_node() + 1);
    }
    return path;
}

double check_inverse_identity(const MatPath& Kpath, const MatPath& Xpath) {
    if (!(Kpath.grid() == Xpath.grid()) || Kpath.dim() != Xpath.dim()) {
        throw GridMismatch("check_inverse_identity: paths must be co-located");
    }
    const Mat eye = Mat::Identity(Kpath.dim(), Kpath.dim());
    double worst = 0.0;
    for (int i = 0; i < Kpath.nodes(); ++i) {
        worst = std::max(worst, (Kpath[i] * Xpath[i] - eye).norm());
    }
    return worst;
}

double sre_residual(const SRESolution& sol, const SREProblem& p, const TimeGrid& grid) {
    const MatPath& P = sol.P;
    if (!(P.grid() == grid)) {
        throw GridMismatch("sre_residual: solution grid differs");
    }
    const int n = grid.steps();
    const double dt = grid.dt();

    const auto dpdt = [&](int i) -> Mat {
        if (i == 0) return (-3.0 * P[0] + 4.0 * P[1] - P[2]) / (2.0 * dt);
        if (i == n) return (3.0 * P[n] - 4.0 * P[n - 1] + P[n - 2]) / (2.0 * dt);
        return (P[i + 1] - P[i - 1]) / (2.0 * dt);
    };

    double worst = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = grid.node(i);
        const Mat A = p.coeffs.A(t);
        const Mat B = p.coeffs.B(t);
        const Mat C = p.coeffs.C(t);
        const Mat Q = p.coeffs.Q(t);
        const Mat K = sol.K[i];
        SymMat kinv;
        try {
            kinv = inv_pd(symmetrize(K));
        } catch (const NotPositiveDefinite&) {
            std::ostringstream os;
            os << "sre_residual: K = R + P not positive definite at node " << i;
            throw NotPositiveDefinite(os.str(), i);
        }
        const Mat& Pt = P[i];
        const Mat left = Pt * B + C.transpose() * Pt;
        const Mat res = dpdt(i) + Pt * A + A.transpose() * Pt +
                        C.transpose() * Pt * C + Q -
                        left * kinv.mat() * left.transpose();
        worst = std::max(worst, res.norm());
    }
    return worst;
}

double beta0_rate(const MatPath& Xpath, const TransformedProblem& tp) {
    double beta0 = 0.0;
    for (int i = 0; i < Xpath.nodes(); ++i) {
        const double t = Xpath.grid().node(i);
        const Mat m = 2.0 * tp.Atil(t) + Xpath[i] * tp.Qtil(t);
        beta0 = std::max(beta0, max_eig(symmetrize(m)));
    }
    return beta0;
}

DirectSolveOutcome solve_p_direct(const SREProblem& p, const TimeGrid& grid,
                                  double overflow_guard) {
    const MatPath rpath = build_gauge_path(p.gauge, grid);
    // Definiteness loss inside an RK4 stage aborts via exception; the
    // integrator's caller maps it to a marked node below.
    const auto rhs = [&](double t, const Mat& pt) -> Mat {
        const Mat A = p.coeffs.A(t);
        const Mat B = p.coeffs.B(t);
        const Mat C = p.coeffs.C(t);
        const Mat Q = p.coeffs.Q(t);
        const Mat K = rpath.interpolate(t) + pt;
        const SymMat kinv = inv_pd(symmetrize(K));
        const Mat left = pt * B + C.transpose() * pt;
        return -(pt * A + A.transpose() * pt + C.transpose() * pt * C + Q) +
               left * kinv.mat() * left.transpose();
    };

    DirectSolveOutcome out;
    const SymMat k_term = symmetrize(rpath[grid.steps()] + p.H.mat());
    if (!is_pd(k_term, 0.0)) {
        out.path = MatPath(grid, p.coeffs.n);
        out.status = DirectSolveOutcome::Status::lost_definiteness;
        out.fail_node = grid.steps();
        return out;
    }

    // Step node by node so a failure can be pinned to the node being
    // produced; integrate_backward would lose that attribution.
    MatPath path(grid, p.coeffs.n);
    path[grid.steps()] = p.H.mat();
    const double dt = grid.dt();
    for (int i = grid.steps() - 1; i >= 0; --i) {
        Mat y;
        try {
            const double t_hi = grid.node(i + 1);
            const Mat k1 = rhs(t_hi, path[i + 1]);
            const Mat k2 = rhs(t_hi - 0.5 * dt, path[i + 1] - (0.5 * dt) * k1);
            const Mat k3 = rhs(t_hi - 0.5 * dt, path[i + 1] - (0.5 * dt) * k2);
            const Mat k4 = rhs(t_hi - dt, path[i + 1] - dt * k3);
            y = path[i + 1] - (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        } catch (const NotPositiveDefinite&) {
            out.path = std::move(path);
            out.status = DirectSolveOutcome::Status::lost_definiteness;
            out.fail_node = i;
            return out;
        }
        if (!all_finite(y) || max_abs(y) > overflow_guard) {
            out.path = std::move(path);
            out.status = DirectSolveOutcome::Status::blow_up;
            out.fail_node = i;
            return out;
        }
        path[i] = symmetrize(y).mat();
        // The recovered P itself must keep K = R + P definite at nodes.
        if (!is_pd(symmetrize(rpath[i] + path[i]), 0.0)) {
            out.path = std::move(path);
            out.status = DirectSolveOutcome::Status::lost_definiteness;
            out.fail_node = i;
            return out;
        }
    }
    out.path = std::move(path);
    return out;
}

ExplosionResult explosion_probe(const SymMat& Qtil, const SymMat& X_T,
                                const TimeGrid& grid, double overflow_guard) {
    const Mat q = Qtil.mat();
    const auto rhs = [&q](double, const Mat& x) -> Mat {
        return x * q * x - x * x * x;
    };
    IntegrateOptions opts;
    opts.overflow_guard = overflow_guard;
    opts.refine_blow_up = true;
    ExplosionResult res;
    res.path = integrate_backward(rhs, X_T.mat(), grid, opts);
    if (res.path.blown_up()) {
        res.blow_up_time = res.path.blow_up_time();
    }
    return res;
}

SRESolution solve_sre(const SREProblem& p, const SolveOptions& opts) {
    p.validate();
    const TimeGrid grid = p.grid();
    TransformedProblem tp = transform(p);

    SolveReport partial;
    partial.assumption_i = check_assumption_i(tp, opts.check_tol);
    double delta = opts.delta;
    if (delta <= 0.0) {
        delta = tp.X_T ? assumption_ii_delta(tp.K_T)
                       : 1.0;   // placeholder; the check below fails anyway
    }
    partial.assumption_ii = check_assumption_ii_terminal(tp.K_T, delta);

    if (!opts.override_checks) {
        if (!partial.assumption_ii.pass) {
            throw NotPositiveDefinite(
                "solve_sre: assumption (ii) failed: R(T) + H must be positive "
                "definite with (R(T)+H)^{-1} >= delta*I");
        }
        if (!partial.assumption_i.pass) {
            std::ostringstream os;
            os << "solve_sre: assumption (i) failed (max ||Rtil|| = "
               << partial.assumption_i.max_rtil_norm
               << ", min eig Qtil = " << partial.assumption_i.min_eig_qtil << ")";
            throw Error(os.str());
        }
    }

    auto [xpath, iteration] = solve_inverse_equation(tp, grid, opts.picard);
    SRESolution sol = recover_solution(xpath, p, tp);
    sol.report.assumption_i = partial.assumption_i;
    sol.report.assumption_ii = partial.assumption_ii;
    sol.report.iteration = std::move(iteration);

    const MatPath kpath = solve_k_equation(sol.X, tp, grid, opts.picard.overflow_guard);
    sol.report.inverse_identity_max = check_inverse_identity(kpath, sol.X);
    sol.report.sre_residual_max = sre_residual(sol, p, grid);

    sol.report.lower_bound_delta = delta;
    sol.report.lower_bound_beta0 = beta0_rate(sol.X, tp);
    const double uniform_bound =
        delta * std::exp(-sol.report.lower_bound_beta0 * grid.horizon());
    const BoundReport bound =
        verify_lower_bound(sol.X, uniform_bound, 0.0, opts.bound_tol);
    sol.report.lower_bound_margin = bound.worst_margin;

    sol.report.residual_tol = opts.residual_tol;
    sol.report.identity_tol = opts.identity_tol;
    sol.report.bound_tol = opts.bound_tol;
    sol.report.residual_pass = sol.report.sre_residual_max <= opts.residual_tol;
    sol.report.identity_pass = sol.report.inverse_identity_max <= opts.identity_tol;
    sol.report.bound_pass = bound.pass;
    return sol;
}

} // namespace sre
