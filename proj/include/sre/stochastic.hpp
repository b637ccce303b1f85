#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sre/backward_ode.hpp"
#include "sre/grid.hpp"

namespace sre {

/// Ensemble of one-dimensional Brownian increments on a grid. Increments
/// are materialized on demand from per-path substreams keyed by
/// (seed, path_index), so results are bit-identical for a given
/// (seed, n_paths, grid) regardless of evaluation order or worker count.
/// With antithetic pairing enabled, odd paths are the negations of their
/// even predecessors.
class BrownianEnsemble {
public:
    BrownianEnsemble(std::uint64_t seed, int n_paths, TimeGrid grid,
                     bool antithetic = false);

    std::uint64_t seed() const { return seed_; }
    int n_paths() const { return n_paths_; }
    const TimeGrid& grid() const { return grid_; }
    bool antithetic() const { return antithetic_; }

    /// N increments ~ Normal(0, dt) for one path.
    std::vector<double> increments(int path) const;

    /// W at the N+1 grid nodes (cumulative sums, W(0) = 0).
    std::vector<double> nodes(int path) const;

private:
    std::uint64_t seed_ = 0;
    int n_paths_ = 0;
    TimeGrid grid_;
    bool antithetic_ = false;
};

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    int n_paths = 0;
};

/// Euler-Maruyama for d(xi) = Ahat*xi dt + Chat*xi dW from xi(0) = p.
/// Returns the state at every grid node.
std::vector<Vec> simulate_forward_sde(const MatFn& Ahat, const MatFn& Chat,
                                      const Vec& p, std::span<const double> dW,
                                      const TimeGrid& grid);

/// Monte Carlo estimate of p'Y(0)p via the quadratic-functional
/// representation: per path, xi_T' Hhat xi_T plus the trapezoidal
/// integral of xi' Qhat xi. Accumulation is pairwise so the reduction is
/// independent of worker count.
McEstimate mc_representation(const LinearBSDEData& data, const Vec& p,
                             const BrownianEnsemble& ensemble, int threads = 1);

/// Per-path payoffs behind mc_representation (used by the positivity
/// property test: with PSD data every payoff is >= 0 path by path).
std::vector<double> mc_payoffs(const LinearBSDEData& data, const Vec& p,
                               const BrownianEnsemble& ensemble, int threads = 1);

/// Pathwise gauge generator: solves the sample-wise ODE
///   dS/dt = e^{C'W} F e^{BW} - C'SB - C'C'S - SBB
/// by RK4 along the frozen Brownian path (W linear within steps), then
/// conjugates R(t_i) = e^{-C'W_i} S(t_i) e^{-B W_i}. B and C constant.
MatPath generate_gauge(const Mat& B, const Mat& C, const MatFn& F, const SymMat& S0,
                       std::span<const double> w_nodes, const TimeGrid& grid,
                       double overflow_guard = 1e12);

/// Per-step defect of the gauge Ito equation: with the martingale part
/// removed, D_i = dR_i + (R_i B + C' R_i) dW_i is drift-sized. The
/// flipped-compensator mode adds the martingale part instead of removing
/// it (a sensitivity control: the defect then scales like sqrt(dt)).
struct DiffusionReport {
    double max_defect = 0.0;
    double max_defect_over_dt = 0.0;
};
DiffusionReport verify_gauge_diffusion(const MatPath& Rpath, const Mat& B, const Mat& C,
                                       std::span<const double> w_nodes,
                                       bool flip_compensator = false);

/// Runs the generator on a refinement ladder sharing one Brownian path
/// (simulated at the finest level, aggregated to the coarser ones) and
/// regresses log max-defect against log dt. Slope near 1 confirms the
/// martingale part -(RB + C'R) dW; a flipped compensator yields ~0.5.
struct SlopeReport {
    std::vector<int> ladder;
    std::vector<double> max_defects;
    std::vector<double> max_defect_over_dt;
    double slope = 0.0;
};
SlopeReport gauge_refinement_slope(const Mat& B, const Mat& C, const MatFn& F,
                                   const SymMat& S0, std::uint64_t seed,
                                   const std::vector<int>& ladder, double horizon,
                                   bool flip_compensator = false);

/// Order-insensitive sum (recursive pairwise).
double pairwise_sum(std::span<const double> xs);

} // namespace sre
