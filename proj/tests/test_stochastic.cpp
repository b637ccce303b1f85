#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "sre/problem.hpp"
#include "sre/stochastic.hpp"

using namespace sre;

namespace {

Mat scalar(double v) {
    Mat m(1, 1);
    m(0, 0) = v;
    return m;
}

LinearBSDEData scalar_data(double a, double c, double q, double h) {
    LinearBSDEData d;
    d.Ahat = MatFn::constant(scalar(a));
    d.Chat = MatFn::constant(scalar(c));
    d.Qhat = MatFn::constant(scalar(q));
    d.Hhat = SymMat(scalar(h));
    return d;
}

Vec vec1(double v) {
    Vec p(1);
    p(0) = v;
    return p;
}

} // namespace

TEST_CASE("ensembles are reproducible and order-independent") {
    const TimeGrid grid(1.0, 50);
    const BrownianEnsemble a(42, 100, grid);
    const BrownianEnsemble b(42, 100, grid);
    CHECK(a.increments(17) == b.increments(17));
    CHECK(a.increments(0) == b.increments(0));
    // reading paths in any order gives the same streams
    const auto last_first = a.increments(99);
    const auto first = a.increments(0);
    CHECK(last_first == b.increments(99));
    CHECK(first == b.increments(0));
    // different seeds decorrelate
    const BrownianEnsemble c(43, 100, grid);
    CHECK(a.increments(0) != c.increments(0));
}

TEST_CASE("W(T) has mean ~0 and variance ~T") {
    const TimeGrid grid(1.0, 50);
    const int n_paths = 100000;
    const BrownianEnsemble ens(7, n_paths, grid);
    std::vector<double> w_t(n_paths);
    for (int i = 0; i < n_paths; ++i) {
        w_t[static_cast<std::size_t>(i)] = ens.nodes(i).back();
    }
    const double mean = pairwise_sum(w_t) / n_paths;
    CHECK(std::abs(mean) <= 4.0 * std::sqrt(1.0 / n_paths));

    std::vector<double> sq(w_t.size());
    for (std::size_t i = 0; i < w_t.size(); ++i) sq[i] = (w_t[i] - mean) * (w_t[i] - mean);
    const double var = pairwise_sum(sq) / (n_paths - 1);
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("antithetic pairing negates odd paths") {
    const TimeGrid grid(1.0, 20);
    const BrownianEnsemble ens(5, 10, grid, true);
    const auto even = ens.increments(4);
    const auto odd = ens.increments(5);
    for (std::size_t i = 0; i < even.size(); ++i) {
        CHECK(odd[i] == -even[i]);
    }
}

TEST_CASE("forward SDE with frozen dynamics stays put") {
    const TimeGrid grid(1.0, 100);
    const BrownianEnsemble ens(11, 1, grid);
    const auto xi = simulate_forward_sde(MatFn::constant(scalar(0.0)),
                                         MatFn::constant(scalar(0.0)), vec1(3.0),
                                         ens.increments(0), grid);
    for (const Vec& x : xi) CHECK(x(0) == 3.0);
}

TEST_CASE("geometric Brownian motion is a martingale in the mean") {
    const TimeGrid grid(1.0, 200);
    const int n_paths = 100000;
    const BrownianEnsemble ens(101, n_paths, grid);
    const MatFn a = MatFn::constant(scalar(0.0));
    const MatFn c = MatFn::constant(scalar(1.0));
    std::vector<double> xt(n_paths);
    for (int i = 0; i < n_paths; ++i) {
        xt[static_cast<std::size_t>(i)] =
            simulate_forward_sde(a, c, vec1(1.0), ens.increments(i), grid).back()(0);
    }
    const double mean = pairwise_sum(xt) / n_paths;
    std::vector<double> sq(xt.size());
    for (std::size_t i = 0; i < xt.size(); ++i) sq[i] = (xt[i] - mean) * (xt[i] - mean);
    const double stderr_ = std::sqrt(pairwise_sum(sq) / (n_paths - 1) / n_paths);
    CHECK(std::abs(mean - 1.0) <= 4.0 * stderr_);
}

TEST_CASE("geometric Brownian second moment approaches e") {
    const TimeGrid grid(1.0, 200);
    const int n_paths = 100000;
    const BrownianEnsemble ens(202, n_paths, grid);
    const MatFn a = MatFn::constant(scalar(0.0));
    const MatFn c = MatFn::constant(scalar(1.0));
    std::vector<double> sq(static_cast<std::size_t>(n_paths));
    for (int i = 0; i < n_paths; ++i) {
        const double x =
            simulate_forward_sde(a, c, vec1(1.0), ens.increments(i), grid).back()(0);
        sq[static_cast<std::size_t>(i)] = x * x;
    }
    const double mean = pairwise_sum(sq) / n_paths;
    std::vector<double> dev(sq.size());
    for (std::size_t i = 0; i < sq.size(); ++i) dev[i] = (sq[i] - mean) * (sq[i] - mean);
    const double stderr_ = std::sqrt(pairwise_sum(dev) / (n_paths - 1) / n_paths);
    // Euler weak bias is O(dt); budget it alongside the statistical band
    CHECK(std::abs(mean - std::exp(1.0)) <= 4.0 * stderr_ + 4.0 * grid.dt());
}

TEST_CASE("deterministic payoff is exact with zero spread") {
    const TimeGrid grid(1.0, 50);
    const BrownianEnsemble ens(3, 1000, grid);
    LinearBSDEData d;
    d.Ahat = MatFn::constant(Mat::Zero(2, 2));
    d.Chat = MatFn::constant(Mat::Zero(2, 2));
    d.Qhat = MatFn::constant(Mat::Zero(2, 2));
    d.Hhat = symmetrize(2.0 * Mat::Identity(2, 2));
    Vec p(2);
    p << 1.0, 0.0;
    const McEstimate est = mc_representation(d, p, ens);
    CHECK(est.value == 2.0);
    CHECK(est.std_error == 0.0);
}

TEST_CASE("deterministic integrand gives qT exactly up to quadrature") {
    const TimeGrid grid(1.0, 100);
    const BrownianEnsemble ens(9, 10, grid);
    const McEstimate est =
        mc_representation(scalar_data(0.0, 0.0, 2.0, 0.0), vec1(1.0), ens);
    CHECK(est.value == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(est.std_error <= 1e-15);
}

TEST_CASE("Feynman-Kac oracle agrees with the ODE closed form") {
    const TimeGrid grid(1.0, 200);
    const int n_paths = 100000;
    const BrownianEnsemble ens(404, n_paths, grid);
    const LinearBSDEData d = scalar_data(0.0, 1.0, 0.0, 1.0);
    const McEstimate est = mc_representation(d, vec1(1.0), ens);
    // Y(0) = e for dY/dt = -Y, Y(1) = 1
    CHECK(std::abs(est.value - std::exp(1.0)) <= 3.0 * est.std_error + 4.0 * grid.dt());
}

TEST_CASE("thread fan-out does not change the estimate") {
    const TimeGrid grid(1.0, 100);
    const BrownianEnsemble ens(77, 5000, grid);
    const LinearBSDEData d = scalar_data(0.3, 0.8, 0.5, 1.0);
    const McEstimate one = mc_representation(d, vec1(1.0), ens, 1);
    const McEstimate four = mc_representation(d, vec1(1.0), ens, 4);
    CHECK(one.value == four.value);
    CHECK(one.std_error == four.std_error);
}

TEST_CASE("PSD data keeps every per-path payoff nonnegative") {
    const TimeGrid grid(1.0, 100);
    const BrownianEnsemble ens(55, 2000, grid);
    LinearBSDEData d;
    Mat qhat(2, 2), hhat(2, 2);
    qhat << 1.0, 0.5, 0.5, 1.0;   // eigenvalues 0.5, 1.5
    hhat << 2.0, -1.0, -1.0, 1.0; // eigenvalues ~0.38, 2.62
    d.Ahat = MatFn::constant((Mat(2, 2) << 0.2, -0.3, 0.4, 0.1).finished());
    d.Chat = MatFn::constant((Mat(2, 2) << 0.5, 0.2, -0.1, 0.3).finished());
    d.Qhat = MatFn::constant(qhat);
    d.Hhat = symmetrize(hhat);
    Vec p(2);
    p << 0.7, -0.4;
    for (double payoff : mc_payoffs(d, p, ens)) {
        CHECK(payoff >= 0.0);
    }
}

TEST_CASE("gauge generator with frozen dynamics") {
    const TimeGrid grid(1.0, 100);
    const BrownianEnsemble ens(8, 1, grid);
    const auto w = ens.nodes(0);
    const Mat zero = Mat::Zero(2, 2);
    const SymMat s0 = symmetrize((Mat(2, 2) << 1.0, 0.2, 0.2, -0.5).finished());

    const MatPath r = generate_gauge(zero, zero, MatFn::constant(zero), s0, w, grid);
    for (int i = 0; i <= 100; ++i) CHECK(max_abs(r[i] - s0.mat()) == 0.0);

    const Mat f0 = (Mat(2, 2) << 0.3, 0.1, 0.1, -0.2).finished();
    const MatPath drift =
        generate_gauge(zero, zero, MatFn::constant(f0), s0, w, grid);
    for (int i = 0; i <= 100; i += 10) {
        CHECK(max_abs(drift[i] - (s0.mat() + grid.node(i) * f0)) <= 1e-12);
    }
}

TEST_CASE("scalar gauge generator matches s0 * exp(-t - W)") {
    const TimeGrid grid(1.0, 3200);
    const BrownianEnsemble ens(21, 1, grid);
    const auto w = ens.nodes(0);
    const double s0 = 0.8;
    const MatPath r = generate_gauge(scalar(1.0), scalar(0.0),
                                     MatFn::constant(scalar(0.0)), SymMat(scalar(s0)),
                                     w, grid);
    for (int i = 0; i <= grid.steps(); i += 100) {
        const double expected =
            s0 * std::exp(-grid.node(i) - w[static_cast<std::size_t>(i)]);
        CHECK(std::abs(r[i](0, 0) - expected) <= 1e-6);
    }
}

TEST_CASE("defect without diffusion equals the drift") {
    const TimeGrid grid(1.0, 100);
    const BrownianEnsemble ens(13, 1, grid);
    const auto w = ens.nodes(0);
    const Mat zero = Mat::Zero(1, 1);
    const Mat f0 = scalar(0.7);
    const MatPath r =
        generate_gauge(zero, zero, MatFn::constant(f0), SymMat(scalar(1.0)), w, grid);
    const DiffusionReport rep = verify_gauge_diffusion(r, zero, zero, w);
    CHECK(rep.max_defect_over_dt == doctest::Approx(0.7).epsilon(1e-10));
}

TEST_CASE("refinement slope confirms the martingale part") {
    const SlopeReport rep =
        gauge_refinement_slope(scalar(1.0), scalar(0.0), MatFn::constant(scalar(0.0)),
                               SymMat(scalar(1.0)), 7, {200, 800, 3200}, 1.0);
    CHECK(rep.slope >= 0.9);
}

TEST_CASE("flipped compensator is detected by the slope") {
    const SlopeReport rep =
        gauge_refinement_slope(scalar(1.0), scalar(0.0), MatFn::constant(scalar(0.0)),
                               SymMat(scalar(1.0)), 7, {200, 800, 3200}, 1.0, true);
    CHECK(rep.slope < 0.8);
    CHECK(rep.slope == doctest::Approx(0.5).epsilon(0.5));
}

TEST_CASE("slope gate holds on the C-only and matrix-valued fixtures") {
    // diffusion through C instead of B
    const SlopeReport conly =
        gauge_refinement_slope(scalar(0.0), scalar(1.0), MatFn::constant(scalar(0.0)),
                               SymMat(scalar(1.0)), 7, {200, 800, 3200}, 1.0);
    CHECK(conly.slope >= 0.9);

    // n = 2 with symmetric B = C and an indefinite initial state
    Mat b(2, 2), s0(2, 2), f0(2, 2);
    b << 0.4, 0.1, 0.1, -0.2;
    s0 << 1.0, 0.3, 0.3, -0.6;
    f0 << 0.2, 0.0, 0.0, 0.1;
    const SlopeReport n2 = gauge_refinement_slope(b, b, MatFn::constant(f0),
                                                  symmetrize(s0), 7, {200, 800, 3200},
                                                  1.0);
    CHECK(n2.slope >= 0.9);
    const SlopeReport n2_flipped = gauge_refinement_slope(
        b, b, MatFn::constant(f0), symmetrize(s0), 7, {200, 800, 3200}, 1.0, true);
    CHECK(n2_flipped.slope < 0.8);
}

TEST_CASE("generated gauges satisfy condition (c-a) through the transform") {
    // n = 2 with symmetric B = C keeps S and R symmetric along the path.
    const TimeGrid grid(1.0, 400);
    const BrownianEnsemble ens(67, 1, grid);
    const auto w = ens.nodes(0);
    const Mat b = (Mat(2, 2) << 0.4, 0.1, 0.1, -0.2).finished();
    const SymMat s0 = symmetrize((Mat(2, 2) << 1.0, 0.3, 0.3, -0.6).finished());
    const Mat f0 = (Mat(2, 2) << 0.2, 0.0, 0.0, 0.1).finished();
    const MatPath r = generate_gauge(b, b, MatFn::constant(f0), s0, w, grid);

    // read G off the path and feed the transform
    std::vector<double> times;
    std::vector<Mat> gvals;
    for (int i = 0; i <= grid.steps(); ++i) {
        times.push_back(grid.node(i));
        gvals.push_back(-(r[i] * b + b.transpose() * r[i]));
    }
    const MatFn g = MatFn::table(times, gvals);

    SREProblem p;
    p.coeffs.n = 2;
    p.coeffs.A = MatFn::constant(Mat::Zero(2, 2));
    p.coeffs.B = MatFn::constant(b);
    p.coeffs.C = MatFn::constant(b);
    p.coeffs.Q = MatFn::constant(5.0 * Mat::Identity(2, 2));
    p.gauge.mode = GaugeMode::pathwise;
    p.gauge.R0 = symmetrize(r[0]);
    p.gauge.F = MatFn::constant(f0);
    p.gauge.G = g;
    p.H = SymMat(5.0 * Mat::Identity(2, 2));
    p.T = 1.0;
    p.grid_steps = grid.steps();

    const TransformedProblem tp = transform_with_gauge(p, r, g);
    const AssumptionIReport rep = check_assumption_i(tp, 1e-9);
    CHECK(rep.max_rtil_norm <= 1e-12);
    CHECK(rep.rtil_pass);
}

TEST_CASE("pairwise summation is stable on permutations") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> xs(1000);
    for (double& x : xs) x = dist(rng);
    const double base = pairwise_sum(xs);
    std::shuffle(xs.begin(), xs.end(), rng);
    CHECK(std::abs(pairwise_sum(xs) - base) <= 1e-12);
}
