#include "sre/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sre {

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw Error("TimeGrid: horizon must be positive and finite");
    }
    if (steps < 1) {
        throw Error("TimeGrid: need at least one step");
    }
}

MatFn MatFn::constant(Mat m) {
    if (m.rows() != m.cols() || m.rows() < 1) {
        throw Error("MatFn::constant: matrix must be square with dim >= 1");
    }
    MatFn f;
    f.dim_ = m.rows();
    f.values_.push_back(std::move(m));
    return f;
}

MatFn MatFn::table(std::vector<double> times, std::vector<Mat> values) {
    if (times.size() != values.size() || times.size() < 2) {
        throw Error("MatFn::table: need matching times/values with at least two samples");
    }
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) {
            throw Error("MatFn::table: sample times must be strictly increasing");
        }
    }
    const Eigen::Index n = values.front().rows();
    for (const Mat& v : values) {
        if (v.rows() != n || v.cols() != n || n < 1) {
            throw Error("MatFn::table: all samples must be square with a common dim");
        }
    }
    MatFn f;
    f.dim_ = n;
    f.times_ = std::move(times);
    f.values_ = std::move(values);
    return f;
}

Mat MatFn::operator()(double t) const {
    if (!valid()) {
        throw Error("MatFn: evaluating a default-constructed function");
    }
    if (is_constant()) return values_.front();
    if (t <= times_.front()) return values_.front();
    if (t >= times_.back()) return values_.back();
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - times_.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
    return (1.0 - w) * values_[lo] + w * values_[hi];
}

double MatFn::sup_norm() const {
    double s = 0.0;
    for (const Mat& v : values_) s = std::max(s, max_abs(v));
    return s;
}

MatPath::MatPath(TimeGrid grid, Eigen::Index dim)
    : grid_(grid), dim_(dim),
      values_(static_cast<std::size_t>(grid.steps()) + 1, Mat::Zero(dim, dim)) {}

MatPath::MatPath(TimeGrid grid, std::vector<Mat> values) : grid_(grid) {
    if (values.size() != static_cast<std::size_t>(grid.steps()) + 1) {
        throw Error("MatPath: need exactly N+1 node values");
    }
    dim_ = values.front().rows();
    values_ = std::move(values);
}

Mat MatPath::interpolate(double t) const {
    const double dt = grid_.dt();
    const double clamped = std::clamp(t, 0.0, grid_.horizon());
    int lo = static_cast<int>(std::floor(clamped / dt));
    lo = std::clamp(lo, 0, grid_.steps() - 1);
    const double w = std::clamp((clamped - grid_.node(lo)) / dt, 0.0, 1.0);
    if (w == 0.0) return values_[static_cast<std::size_t>(lo)];
    if (w == 1.0) return values_[static_cast<std::size_t>(lo) + 1];
    return (1.0 - w) * values_[static_cast<std::size_t>(lo)] +
           w * values_[static_cast<std::size_t>(lo) + 1];
}

MatFn MatPath::as_fn() const {
    std::vector<double> times(static_cast<std::size_t>(nodes()));
    for (int i = 0; i < nodes(); ++i) times[static_cast<std::size_t>(i)] = grid_.node(i);
    return MatFn::table(std::move(times), values_);
}

void MatPath::mark_blow_up(int node, double time) {
    blow_up_node_ = node;
    blow_up_time_ = time;
}

double sup_frobenius_distance(const MatPath& a, const MatPath& b) {
    if (!(a.grid() == b.grid()) || a.dim() != b.dim()) {
        throw GridMismatch("sup_frobenius_distance: paths must share grid and dim");
    }
    double s = 0.0;
    for (int i = 0; i < a.nodes(); ++i) {
        s = std::max(s, (a[i] - b[i]).norm());
    }
    return s;
}

} // namespace sre
