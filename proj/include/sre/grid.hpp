#pragma once

#include <optional>
#include <vector>

#include "sre/matops.hpp"

namespace sre {

/// Uniform time grid t_i = i*T/N on [0, T]. node(N) is exactly T.
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(double horizon, int steps);

    double horizon() const { return horizon_; }
    int steps() const { return steps_; }
    double dt() const { return horizon_ / steps_; }
    double node(int i) const {
        return i == steps_ ? horizon_ : horizon_ * static_cast<double>(i) / steps_;
    }

    bool operator==(const TimeGrid&) const = default;

private:
    double horizon_ = 0.0;
    int steps_ = 0;
};

/// Time-indexed matrix-valued coefficient on [0, T]: either a constant
/// matrix or a sampled table with piecewise-linear evaluation. Evaluation
/// outside the table's time range clamps to the nearest endpoint.
class MatFn {
public:
    MatFn() = default;

    static MatFn constant(Mat m);
    static MatFn table(std::vector<double> times, std::vector<Mat> values);

    bool valid() const { return dim_ > 0; }
    bool is_constant() const { return times_.empty(); }
    Eigen::Index dim() const { return dim_; }

    Mat operator()(double t) const;

    /// Stable pointer to the constant value, null for tables (fast path
    /// for per-step hot loops).
    const Mat* constant_ptr() const {
        return valid() && is_constant() ? &values_.front() : nullptr;
    }

    /// Max over sample nodes of the entrywise infinity norm (for a constant,
    /// the norm of the constant).
    double sup_norm() const;

private:
    Eigen::Index dim_ = 0;
    std::vector<double> times_;  // empty <=> constant
    std::vector<Mat> values_;    // size 1 (constant) or times_.size()
};

/// A time grid paired with one matrix per node. Used for every trajectory
/// in the library (P, K, X, R, Y, Picard iterates). A path may be marked
/// blown up at a node, in which case only nodes > blow_up_node hold
/// meaningful values (backward integration stops at the guard).
class MatPath {
public:
    MatPath() = default;
    MatPath(TimeGrid grid, Eigen::Index dim);              // zero-filled
    MatPath(TimeGrid grid, std::vector<Mat> values);

    const TimeGrid& grid() const { return grid_; }
    Eigen::Index dim() const { return dim_; }
    int nodes() const { return grid_.steps() + 1; }

    Mat& operator[](int i) { return values_[static_cast<std::size_t>(i)]; }
    const Mat& operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }

    /// Piecewise-linear evaluation at arbitrary t in [0, T].
    Mat interpolate(double t) const;

    /// View the path as a table-backed MatFn (copies the values).
    MatFn as_fn() const;

    void mark_blow_up(int node, double time);
    bool blown_up() const { return blow_up_node_.has_value(); }
    int blow_up_node() const { return *blow_up_node_; }
    double blow_up_time() const { return *blow_up_time_; }

    /// Largest symmetrization correction applied by an integrator while
    /// producing this path (0 when not produced by one).
    double sym_drift = 0.0;

private:
    TimeGrid grid_;
    Eigen::Index dim_ = 0;
    std::vector<Mat> values_;
    std::optional<int> blow_up_node_;
    std::optional<double> blow_up_time_;
};

/// Max over co-located nodes of the Frobenius distance between two paths.
double sup_frobenius_distance(const MatPath& a, const MatPath& b);

} // namespace sre
