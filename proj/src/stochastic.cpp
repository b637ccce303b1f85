#include "sre/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

namespace sre {

namespace {

// splitmix64: per-path substreams start at widely strided states so the
// additive orbits of distinct paths cannot overlap at desk-scale draws.
struct Splitmix64 {
    std::uint64_t state;

    explicit Splitmix64(std::uint64_t s) : state(s) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in (0, 1]: never 0, so log() below is safe.
    double next_open_unit() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }
};

Splitmix64 path_stream(std::uint64_t seed, int path) {
    const std::uint64_t stride = 0x9E3779B97F4A7C15ULL << 32;
    return Splitmix64(seed + stride * (static_cast<std::uint64_t>(path) + 1));
}

/// Standard normal pairs via Box-Muller; both values are consumed.
void fill_normals(Splitmix64& rng, std::span<double> out) {
    for (std::size_t i = 0; i < out.size(); i += 2) {
        const double u1 = rng.next_open_unit();
        const double u2 = rng.next_open_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        out[i] = r * std::cos(theta);
        if (i + 1 < out.size()) out[i + 1] = r * std::sin(theta);
    }
}

void run_partitioned(int count, int threads, const std::function<void(int)>& body) {
    threads = std::clamp(threads, 1, count == 0 ? 1 : count);
    if (threads == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < count; i += threads) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace

double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 32) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

BrownianEnsemble::BrownianEnsemble(std::uint64_t seed, int n_paths, TimeGrid grid,
                                   bool antithetic)
    : seed_(seed), n_paths_(n_paths), grid_(grid), antithetic_(antithetic) {
    if (n_paths < 1) throw Error("BrownianEnsemble: need at least one path");
}

std::vector<double> BrownianEnsemble::increments(int path) const {
    if (path < 0 || path >= n_paths_) throw Error("BrownianEnsemble: path out of range");
    const int base = antithetic_ ? path / 2 : path;
    const bool negate = antithetic_ && (path % 2 == 1);

    std::vector<double> dw(static_cast<std::size_t>(grid_.steps()));
    Splitmix64 rng = path_stream(seed_, base);
    fill_normals(rng, dw);
    const double scale = std::sqrt(grid_.dt()) * (negate ? -1.0 : 1.0);
    for (double& x : dw) x *= scale;
    return dw;
}

std::vector<double> BrownianEnsemble::nodes(int path) const {
    const std::vector<double> dw = increments(path);
    std::vector<double> w(dw.size() + 1);
    w[0] = 0.0;
    for (std::size_t i = 0; i < dw.size(); ++i) w[i + 1] = w[i] + dw[i];
    return w;
}

std::vector<Vec> simulate_forward_sde(const MatFn& Ahat, const MatFn& Chat,
                                      const Vec& p, std::span<const double> dW,
                                      const TimeGrid& grid) {
    if (dW.size() != static_cast<std::size_t>(grid.steps())) {
        throw GridMismatch("simulate_forward_sde: increment count does not match grid");
    }
    if (!p.allFinite()) throw NonFinite("simulate_forward_sde: start vector not finite");
    std::vector<Vec> xi(static_cast<std::size_t>(grid.steps()) + 1);
    xi[0] = p;
    const double dt = grid.dt();
    for (int i = 0; i < grid.steps(); ++i) {
        const double t = grid.node(i);
        const std::size_t k = static_cast<std::size_t>(i);
        xi[k + 1] = xi[k] + dt * (Ahat(t) * xi[k]) + dW[k] * (Chat(t) * xi[k]);
    }
    return xi;
}

namespace {

/// Fused Euler walk and trapezoidal accumulation; no per-step allocation
/// when the coefficients are constant.
double representation_payoff(const LinearBSDEData& data, const Vec& p,
                             std::span<const double> dW, const TimeGrid& grid) {
    const Mat* a_const = data.Ahat.constant_ptr();
    const Mat* c_const = data.Chat.constant_ptr();
    const Mat* q_const = data.Qhat.constant_ptr();
    const double dt = grid.dt();
    const Eigen::Index n = p.size();

    Vec xi = p;
    Vec ax(n), cx(n), qx(n);
    const auto quad_form = [&](double t) {
        if (q_const) {
            qx.noalias() = (*q_const) * xi;
        } else {
            qx.noalias() = data.Qhat(t) * xi;
        }
        return xi.dot(qx);
    };

    double integral = 0.0;
    double prev = quad_form(0.0);
    for (int i = 0; i < grid.steps(); ++i) {
        const double t = grid.node(i);
        if (a_const) {
            ax.noalias() = (*a_const) * xi;
        } else {
            ax.noalias() = data.Ahat(t) * xi;
        }
        if (c_const) {
            cx.noalias() = (*c_const) * xi;
        } else {
            cx.noalias() = data.Chat(t) * xi;
        }
        xi += dt * ax + dW[static_cast<std::size_t>(i)] * cx;
        const double cur = quad_form(grid.node(i + 1));
        integral += 0.5 * dt * (prev + cur);
        prev = cur;
    }
    qx.noalias() = data.Hhat.mat() * xi;
    return xi.dot(qx) + integral;
}

} // namespace

std::vector<double> mc_payoffs(const LinearBSDEData& data, const Vec& p,
                               const BrownianEnsemble& ensemble, int threads) {
    if (data.Hhat.dim() != p.size()) {
        throw GridMismatch("mc_representation: probe vector dimension mismatch");
    }
    std::vector<double> payoffs(static_cast<std::size_t>(ensemble.n_paths()));
    run_partitioned(ensemble.n_paths(), threads, [&](int i) {
        payoffs[static_cast<std::size_t>(i)] =
            representation_payoff(data, p, ensemble.increments(i), ensemble.grid());
    });
    return payoffs;
}

McEstimate mc_representation(const LinearBSDEData& data, const Vec& p,
                             const BrownianEnsemble& ensemble, int threads) {
    const std::vector<double> payoffs = mc_payoffs(data, p, ensemble, threads);
    const auto n = static_cast<double>(payoffs.size());
    const double mean = pairwise_sum(payoffs) / n;

    std::vector<double> sq(payoffs.size());
    for (std::size_t i = 0; i < payoffs.size(); ++i) {
        const double d = payoffs[i] - mean;
        sq[i] = d * d;
    }
    const double var = payoffs.size() > 1 ? pairwise_sum(sq) / (n - 1.0) : 0.0;

    McEstimate est;
    est.value = mean;
    est.std_error = std::sqrt(var / n);
    est.n_paths = ensemble.n_paths();
    return est;
}

MatPath generate_gauge(const Mat& B, const Mat& C, const MatFn& F, const SymMat& S0,
                       std::span<const double> w_nodes, const TimeGrid& grid,
                       double overflow_guard) {
    const Eigen::Index n = S0.dim();
    if (B.rows() != n || B.cols() != n || C.rows() != n || C.cols() != n ||
        F.dim() != n) {
        throw Error("generate_gauge: dimension mismatch");
    }
    if (w_nodes.size() != static_cast<std::size_t>(grid.steps()) + 1) {
        throw GridMismatch("generate_gauge: Brownian path does not match grid");
    }

    const Mat Ct = C.transpose();
    const Mat CtCt = Ct * Ct;
    const Mat BB = B * B;
    const double dt = grid.dt();

    // W is frozen piecewise-linear within steps; this is a pathwise ODE,
    // not an SDE discretization, so no Ito correction enters here.
    const auto w_at = [&](int i, double frac) {
        const std::size_t k = static_cast<std::size_t>(i);
        return (1.0 - frac) * w_nodes[k] + frac * w_nodes[k + 1];
    };
    const auto deriv = [&](double t, double w, const Mat& s) -> Mat {
        return mat_exp(Ct * w) * F(t) * mat_exp(B * w) - Ct * s * B - CtCt * s -
               s * BB;
    };

    MatPath rpath(grid, n);
    Mat s = S0.mat();
    rpath[0] = mat_exp(-Ct * w_nodes[0]) * s * mat_exp(-B * w_nodes[0]);
    for (int i = 0; i < grid.steps(); ++i) {
        const double t = grid.node(i);
        const Mat k1 = deriv(t, w_at(i, 0.0), s);
        const Mat k2 = deriv(t + 0.5 * dt, w_at(i, 0.5), s + (0.5 * dt) * k1);
        const Mat k3 = deriv(t + 0.5 * dt, w_at(i, 0.5), s + (0.5 * dt) * k2);
        const Mat k4 = deriv(t + dt, w_at(i, 1.0), s + dt * k3);
        s += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!all_finite(s) || max_abs(s) > overflow_guard) {
            std::ostringstream os;
            os << "generate_gauge: overflow guard tripped at node " << (i + 1);
            throw BlowUpDetected(os.str(), i);
        }
        const double w = w_nodes[static_cast<std::size_t>(i) + 1];
        rpath[i + 1] = mat_exp(-Ct * w) * s * mat_exp(-B * w);
    }
    return rpath;
}

DiffusionReport verify_gauge_diffusion(const MatPath& Rpath, const Mat& B, const Mat& C,
                                       std::span<const double> w_nodes,
                                       bool flip_compensator) {
    if (w_nodes.size() != static_cast<std::size_t>(Rpath.nodes())) {
        throw GridMismatch("verify_gauge_diffusion: Brownian path does not match grid");
    }
    const Mat Ct = C.transpose();
    const double sign = flip_compensator ? -1.0 : 1.0;
    const double dt = Rpath.grid().dt();

    DiffusionReport rep;
    for (int i = 0; i + 1 < Rpath.nodes(); ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        const double dw = w_nodes[k + 1] - w_nodes[k];
        const Mat& r = Rpath[i];
        const Mat defect = (Rpath[i + 1] - r) + sign * (r * B + Ct * r) * dw;
        rep.max_defect = std::max(rep.max_defect, max_abs(defect));
    }
    rep.max_defect_over_dt = rep.max_defect / dt;
    return rep;
}

SlopeReport gauge_refinement_slope(const Mat& B, const Mat& C, const MatFn& F,
                                   const SymMat& S0, std::uint64_t seed,
                                   const std::vector<int>& ladder, double horizon,
                                   bool flip_compensator) {
    if (ladder.size() < 2) throw Error("gauge_refinement_slope: need >= 2 levels");
    const int finest = *std::max_element(ladder.begin(), ladder.end());
    for (int n : ladder) {
        if (n < 1 || finest % n != 0) {
            throw Error("gauge_refinement_slope: every level must divide the finest");
        }
    }

    // One Brownian path at the finest level; coarser levels restrict it,
    // so the whole ladder sees the same underlying W.
    const TimeGrid fine_grid(horizon, finest);
    const std::vector<double> w_fine = BrownianEnsemble(seed, 1, fine_grid).nodes(0);

    SlopeReport rep;
    rep.ladder = ladder;
    for (int n : ladder) {
        const int stride = finest / n;
        std::vector<double> w(static_cast<std::size_t>(n) + 1);
        for (int i = 0; i <= n; ++i) {
            w[static_cast<std::size_t>(i)] = w_fine[static_cast<std::size_t>(i * stride)];
        }
        const TimeGrid grid(horizon, n);
        const MatPath r = generate_gauge(B, C, F, S0, w, grid);
        const DiffusionReport d = verify_gauge_diffusion(r, B, C, w, flip_compensator);
        rep.max_defects.push_back(d.max_defect);
        rep.max_defect_over_dt.push_back(d.max_defect_over_dt);
    }

    // Least-squares slope of log(defect) against log(dt).
    const auto m = static_cast<double>(ladder.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        const double x = std::log(horizon / ladder[i]);
        const double y = std::log(std::max(rep.max_defects[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return rep;
}

} // namespace sre
