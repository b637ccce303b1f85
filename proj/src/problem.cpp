#include "sre/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sre {

namespace {

void require_dim(const MatFn& f, Eigen::Index n, const char* name) {
    if (!f.valid()) {
        std::ostringstream os;
        os << "SREProblem: coefficient " << name << " is unset";
        throw Error(os.str());
    }
    if (f.dim() != n) {
        std::ostringstream os;
        os << "SREProblem: coefficient " << name << " has dim " << f.dim()
           << ", expected " << n;
        throw Error(os.str());
    }
}

void require_symmetric_samples(const MatFn& f, const TimeGrid& grid, const char* name) {
    for (int i = 0; i <= grid.steps(); ++i) {
        const Mat v = f(grid.node(i));
        if (max_abs(v - v.transpose()) > kSymTol * (1.0 + max_abs(v))) {
            std::ostringstream os;
            os << "SREProblem: " << name << " is not symmetric at t=" << grid.node(i);
            throw NonSymmetric(os.str());
        }
    }
}

} // namespace

void SREProblem::validate(double coeff_bound) const {
    const Eigen::Index n = coeffs.n;
    if (n < 1) throw Error("SREProblem: dimension must be >= 1");
    if (!(T > 0.0) || !std::isfinite(T)) throw Error("SREProblem: horizon must be positive");
    if (grid_steps < 2) throw Error("SREProblem: need at least two grid steps");

    const TimeGrid g = grid();
    require_dim(coeffs.A, n, "A");
    require_dim(coeffs.B, n, "B");
    require_dim(coeffs.C, n, "C");
    require_dim(coeffs.Q, n, "Q");
    require_dim(gauge.F, n, "F");
    require_dim(gauge.G, n, "G");
    if (gauge.R0.dim() != n) throw Error("SREProblem: R0 has wrong dimension");
    if (H.dim() != n) throw Error("SREProblem: H has wrong dimension");

    for (const auto* f : {&coeffs.A, &coeffs.B, &coeffs.C, &coeffs.Q, &gauge.F, &gauge.G}) {
        for (int i = 0; i <= g.steps(); ++i) {
            if (!all_finite((*f)(g.node(i)))) {
                throw NonFinite("SREProblem: coefficient has non-finite entries on the grid");
            }
        }
        if (f->sup_norm() > coeff_bound) {
            std::ostringstream os;
            os << "SREProblem: coefficient exceeds the boundedness assumption ("
               << f->sup_norm() << " > " << coeff_bound << ")";
            throw Error(os.str());
        }
    }
    require_symmetric_samples(coeffs.Q, g, "Q");
    require_symmetric_samples(gauge.F, g, "F");
    require_symmetric_samples(gauge.G, g, "G");

    if (gauge.mode == GaugeMode::deterministic && gauge.G.sup_norm() > 0.0) {
        throw Error("SREProblem: deterministic gauge requires G == 0");
    }
}

MatPath build_gauge_path(const GaugeSpec& gauge, const TimeGrid& grid) {
    if (gauge.mode != GaugeMode::deterministic) {
        throw ModeMismatch("build_gauge_path: pathwise gauges are built by the "
                           "stochastic layer, not by quadrature");
    }
    const Eigen::Index n = gauge.R0.dim();
    MatPath path(grid, n);
    const double dt = grid.dt();
    Mat r = gauge.R0.mat();
    Mat f_prev = gauge.F(grid.node(0));
    path[0] = r;
    for (int i = 1; i <= grid.steps(); ++i) {
        const Mat f_next = gauge.F(grid.node(i));
        r += 0.5 * dt * (f_prev + f_next);
        path[i] = symmetrize(r).mat();
        f_prev = f_next;
    }
    return path;
}

namespace {

TransformedProblem transform_impl(const SREProblem& p, MatPath Rpath, const MatFn& G) {
    const TimeGrid g = Rpath.grid();
    const int nodes = g.steps() + 1;
    std::vector<double> times(static_cast<std::size_t>(nodes));
    std::vector<Mat> qtil(static_cast<std::size_t>(nodes));
    std::vector<Mat> atil(static_cast<std::size_t>(nodes));
    std::vector<Mat> rtil(static_cast<std::size_t>(nodes));
    std::vector<Mat> bsmp(static_cast<std::size_t>(nodes));

    for (int i = 0; i < nodes; ++i) {
        const double t = g.node(i);
        const Mat A = p.coeffs.A(t);
        const Mat B = p.coeffs.B(t);
        const Mat C = p.coeffs.C(t);
        const Mat Q = p.coeffs.Q(t);
        const Mat F = p.gauge.F(t);
        const Mat Gt = G(t);
        const Mat& R = Rpath[i];

        const Mat q = Q + F + C.transpose() * R * C + R * (B * C - A) +
                      (C.transpose() * B.transpose() - A.transpose()) * R;
        times[static_cast<std::size_t>(i)] = t;
        qtil[static_cast<std::size_t>(i)] = symmetrize(q).mat();
        atil[static_cast<std::size_t>(i)] = A - B * C;
        rtil[static_cast<std::size_t>(i)] = R * B + C.transpose() * R + Gt;
        bsmp[static_cast<std::size_t>(i)] = B;
    }

    TransformedProblem tp;
    tp.grid = g;
    tp.Qtil = MatFn::table(times, std::move(qtil));
    tp.Atil = MatFn::table(times, std::move(atil));
    tp.Rtil = MatFn::table(times, std::move(rtil));
    tp.Bfun = MatFn::table(times, std::move(bsmp));
    tp.K_T = symmetrize(Rpath[g.steps()] + p.H.mat());
    tp.Rpath = std::move(Rpath);
    if (is_pd(tp.K_T, 0.0)) {
        tp.X_T = inv_pd(tp.K_T);
    }
    return tp;
}

} // namespace

TransformedProblem transform(const SREProblem& p) {
    return transform_impl(p, build_gauge_path(p.gauge, p.grid()), p.gauge.G);
}

TransformedProblem transform_with_gauge(const SREProblem& p, const MatPath& Rpath,
                                        const MatFn& G) {
    if (Rpath.dim() != p.coeffs.n) {
        throw GridMismatch("transform_with_gauge: gauge path dimension mismatch");
    }
    return transform_impl(p, Rpath, G);
}

AssumptionIReport check_assumption_i(const TransformedProblem& tp, double tol) {
    AssumptionIReport rep;
    rep.tol = tol;
    double max_rtil = 0.0;
    double min_q = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= tp.grid.steps(); ++i) {
        const double t = tp.grid.node(i);
        max_rtil = std::max(max_rtil, max_abs(tp.Rtil(t)));
        min_q = std::min(min_q, min_eig(symmetrize(tp.Qtil(t))));
    }
    rep.max_rtil_norm = max_rtil;
    rep.min_eig_qtil = min_q;
    rep.rtil_pass = max_rtil <= tol;
    rep.qtil_pass = min_q >= -tol;
    rep.pass = rep.rtil_pass && rep.qtil_pass;
    return rep;
}

AssumptionIIReport check_assumption_ii_terminal(const SymMat& K_T, double delta) {
    if (!(delta > 0.0)) throw Error("check_assumption_ii: delta must be positive");
    AssumptionIIReport rep;
    rep.delta = delta;
    rep.min_eig_kt = min_eig(K_T);
    rep.max_eig_kt = max_eig(K_T);
    // 1-ulp slack so delta = 1/max_eig(K_T) passes despite double rounding
    rep.pass = rep.min_eig_kt > 0.0 &&
               rep.max_eig_kt <= (1.0 / delta) * (1.0 + 4e-16);
    return rep;
}

AssumptionIIReport check_assumption_ii(const SREProblem& p, double delta) {
    const MatPath r = build_gauge_path(p.gauge, p.grid());
    const SymMat kt = symmetrize(r[r.grid().steps()] + p.H.mat());
    return check_assumption_ii_terminal(kt, delta);
}

double assumption_ii_delta(const SymMat& K_T) {
    if (!is_pd(K_T, 0.0)) {
        throw NotPositiveDefinite("assumption_ii_delta: K(T) is not positive definite");
    }
    return 1.0 / max_eig(K_T);
}

} // namespace sre
