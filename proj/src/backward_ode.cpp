#include "sre/backward_ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sre {

namespace {

bool under_guard(const Mat& m, double guard) {
    return all_finite(m) && max_abs(m) <= guard;
}

/// One RK4 step of size h (h < 0 when stepping backward in time).
Mat rk4_step(const MatrixRhs& rhs, double t, const Mat& y, double h) {
    const Mat k1 = rhs(t, y);
    const Mat k2 = rhs(t + 0.5 * h, y + (0.5 * h) * k1);
    const Mat k3 = rhs(t + 0.5 * h, y + (0.5 * h) * k2);
    const Mat k4 = rhs(t + h, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Walk backward from (t_hi, y) toward t_lo with step halving at the
/// guard, homing in on the time where the trajectory escapes.
double refine_blow_up_time(const MatrixRhs& rhs, double t_hi, Mat y, double t_lo,
                           double guard) {
    double t = t_hi;
    double h = 0.5 * (t_hi - t_lo);
    const double h_min = (t_hi - t_lo) / 1048576.0;  // 2^20 halvings
    int budget = 200;
    while (h > h_min && t - h > t_lo && budget-- > 0) {
        const Mat trial = rk4_step(rhs, t, y, -h);
        if (under_guard(trial, guard)) {
            t -= h;
            y = trial;
        } else {
            h *= 0.5;
        }
    }
    return t;
}

} // namespace

MatPath integrate_backward(const MatrixRhs& rhs, const Mat& terminal,
                           const TimeGrid& grid, const IntegrateOptions& opts) {
    MatPath path(grid, terminal.rows());
    const int n = grid.steps();
    const double dt = grid.dt();

    if (!under_guard(terminal, opts.overflow_guard)) {
        path.mark_blow_up(n, grid.horizon());
        return path;
    }
    path[n] = opts.symmetrize_steps ? symmetrize(terminal).mat() : terminal;

    double drift = 0.0;
    for (int i = n - 1; i >= 0; --i) {
        const double t_hi = grid.node(i + 1);
        Mat y = rk4_step(rhs, t_hi, path[i + 1], -dt);
        if (!under_guard(y, opts.overflow_guard)) {
            double when = grid.node(i);
            if (opts.refine_blow_up) {
                when = refine_blow_up_time(rhs, t_hi, path[i + 1], grid.node(i),
                                           opts.overflow_guard);
            }
            path.mark_blow_up(i, when);
            path.sym_drift = drift;
            return path;
        }
        if (opts.symmetrize_steps) {
            drift = std::max(drift, 0.5 * max_abs(y - y.transpose()));
            y = symmetrize(y).mat();
        }
        path[i] = std::move(y);
    }
    path.sym_drift = drift;
    return path;
}

MatPath solve_linear_bsde(const LinearBSDEData& data, const TimeGrid& grid,
                          double overflow_guard) {
    const auto rhs = [&data](double t, const Mat& y) -> Mat {
        const Mat a = data.Ahat(t);
        const Mat c = data.Chat(t);
        return -(y * a + a.transpose() * y + c.transpose() * y * c + data.Qhat(t));
    };
    IntegrateOptions opts;
    opts.overflow_guard = overflow_guard;
    MatPath path = integrate_backward(rhs, data.Hhat.mat(), grid, opts);
    if (path.blown_up()) {
        std::ostringstream os;
        os << "solve_linear_bsde: overflow guard tripped at node " << path.blow_up_node();
        throw BlowUpDetected(os.str(), path.blow_up_node() + 1);
    }
    return path;
}

double beta_rate(const MatFn& Ahat, const TimeGrid& grid) {
    double beta = 0.0;
    for (int i = 0; i <= grid.steps(); ++i) {
        const double lam = min_eig(symmetrize(Ahat(grid.node(i))));
        beta = std::max(beta, -2.0 * lam);
    }
    return beta;
}

BoundReport verify_lower_bound(const MatPath& path, double delta, double beta,
                               double tol) {
    BoundReport rep;
    rep.delta = delta;
    rep.beta = beta;
    rep.tol = tol;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    const double horizon = path.grid().horizon();
    for (int i = 0; i < path.nodes(); ++i) {
        const double t = path.grid().node(i);
        const double bound = delta * std::exp(-beta * (horizon - t));
        const double margin = min_eig(symmetrize(path[i])) - bound;
        if (margin < rep.worst_margin) {
            rep.worst_margin = margin;
            rep.worst_node = i;
        }
    }
    rep.pass = rep.worst_margin >= -tol;
    return rep;
}

} // namespace sre
