#pragma once

#include <functional>

#include "sre/grid.hpp"

namespace sre {

/// dY/dt as a function of (t, Y).
using MatrixRhs = std::function<Mat(double, const Mat&)>;

struct IntegrateOptions {
    double overflow_guard = 1e12;
    bool symmetrize_steps = true;
    /// Bisect into the step where the guard trips to sharpen the recorded
    /// blow-up time (used by the explosion probe).
    bool refine_blow_up = false;
};

/// Classical fourth-order Runge-Kutta from t_N = T down to t_0 = 0 with
/// fixed step. Accepted values are symmetrized when requested and the
/// largest correction is recorded in the returned path's sym_drift. When
/// any entry exceeds the overflow guard (or goes non-finite) the path is
/// marked blown up at that node and integration stops; callers that treat
/// blow-up as an error, not a result, must check and throw.
MatPath integrate_backward(const MatrixRhs& rhs, const Mat& terminal,
                           const TimeGrid& grid, const IntegrateOptions& opts = {});

/// Data of the linear matrix equation
///   dY/dt = -[Y*Ahat + Ahat'*Y + Chat'*Y*Chat + Qhat],  Y(T) = Hhat.
struct LinearBSDEData {
    MatFn Ahat;
    MatFn Chat;
    MatFn Qhat;
    SymMat Hhat;
};

/// Backward-integrated solution path; symmetric at every node.
/// Throws BlowUpDetected if the guard trips (bounded data never does at
/// desk scale).
MatPath solve_linear_bsde(const LinearBSDEData& data, const TimeGrid& grid,
                          double overflow_guard = 1e12);

/// Uniform decay rate beta = max over the grid of
/// max(-2 * min_eig(sym(Ahat(t))), 0); the inner infimum over unit
/// vectors of x'*Ahat*x equals the smallest eigenvalue of the symmetric part.
double beta_rate(const MatFn& Ahat, const TimeGrid& grid);

struct BoundReport {
    bool pass = false;
    double worst_margin = 0.0;
    int worst_node = -1;
    double delta = 0.0;
    double beta = 0.0;
    double tol = 0.0;
};

/// Checks Y(t) >= delta * exp(-beta*(T-t)) * I node-wise: margin(t) is
/// min_eig(Y(t)) minus the bound, pass iff margin >= -tol everywhere.
BoundReport verify_lower_bound(const MatPath& path, double delta, double beta,
                               double tol);

} // namespace sre
