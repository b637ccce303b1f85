#pragma once

#include <Eigen/Dense>

#include "sre/errors.hpp"

namespace sre {

/// Dense square real matrix, not necessarily symmetric. Row-major
/// conventions apply at I/O boundaries; internally Eigen's storage is
/// opaque to callers.
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Symmetry tolerance: absolute plus relative, ||M - M'||_inf <= tol*(1+||M||_inf).
inline constexpr double kSymTol = 1e-12;

/// Library default threshold for positive-definiteness tests.
inline constexpr double kPdTol = 1e-10;

/// Max absolute entry (the entrywise infinity norm used throughout).
double max_abs(const Mat& m);

/// True if every entry is finite.
bool all_finite(const Mat& m);

/// Symmetric n x n matrix. Constructors enforce the symmetry invariant:
/// the checked constructor rejects inputs beyond tolerance, and the stored
/// matrix is exactly (M + M')/2 so downstream eigensolves never see
/// asymmetry.
class SymMat {
public:
    SymMat() = default;

    /// Checked: throws NonSymmetric if ||M - M'||_inf > tol*(1+||M||_inf).
    explicit SymMat(const Mat& m, double tol = kSymTol);

    static SymMat identity(Eigen::Index n);
    static SymMat zero(Eigen::Index n);

    const Mat& mat() const { return m_; }
    Eigen::Index dim() const { return m_.rows(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

private:
    struct Unchecked {};
    SymMat(Mat m, Unchecked) : m_(std::move(m)) {}

    Mat m_;

    friend SymMat symmetrize(const Mat& m);
};

/// (M + M')/2. Requires M square; never throws on asymmetry.
SymMat symmetrize(const Mat& m);

/// Smallest eigenvalue (symmetric eigensolve only).
double min_eig(const SymMat& s);
/// Largest eigenvalue.
double max_eig(const SymMat& s);

/// Overloads taking a raw matrix; throw NonSymmetric beyond tolerance.
double min_eig(const Mat& m);
double max_eig(const Mat& m);

/// min_eig(S) > tol.
bool is_pd(const SymMat& s, double tol = kPdTol);
/// min_eig(S) >= -tol.
bool is_psd(const SymMat& s, double tol = kPdTol);

/// Inverse of a positive definite matrix via symmetric eigendecomposition;
/// result symmetrized. Throws NotPositiveDefinite when min_eig(S) <= tol.
SymMat inv_pd(const SymMat& s, double tol = 1e-12);

/// Matrix exponential (scaling-and-squaring, Pade core). Throws NonFinite
/// on NaN/Inf input.
Mat mat_exp(const Mat& m);

} // namespace sre
