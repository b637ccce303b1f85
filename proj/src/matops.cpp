#include "sre/matops.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <sstream>

namespace sre {

double max_abs(const Mat& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().maxCoeff();
}

bool all_finite(const Mat& m) {
    return m.allFinite();
}

namespace {

void require_square(const Mat& m, const char* who) {
    if (m.rows() != m.cols() || m.rows() < 1) {
        std::ostringstream os;
        os << who << ": expected a square matrix with dim >= 1, got "
           << m.rows() << "x" << m.cols();
        throw Error(os.str());
    }
}

double asymmetry(const Mat& m) {
    return max_abs(m - m.transpose());
}

} // namespace

SymMat::SymMat(const Mat& m, double tol) {
    require_square(m, "SymMat");
    const double defect = asymmetry(m);
    if (defect > tol * (1.0 + max_abs(m))) {
        std::ostringstream os;
        os << "SymMat: asymmetry " << defect << " exceeds tolerance " << tol;
        throw NonSymmetric(os.str());
    }
    m_ = 0.5 * (m + m.transpose());
}

SymMat SymMat::identity(Eigen::Index n) {
    return SymMat(Mat::Identity(n, n), Unchecked{});
}

SymMat SymMat::zero(Eigen::Index n) {
    return SymMat(Mat::Zero(n, n), Unchecked{});
}

SymMat symmetrize(const Mat& m) {
    require_square(m, "symmetrize");
    return SymMat(0.5 * (m + m.transpose()), SymMat::Unchecked{});
}

namespace {

Eigen::SelfAdjointEigenSolver<Mat> eig_solve(const SymMat& s, bool vectors) {
    Eigen::SelfAdjointEigenSolver<Mat> es;
    es.compute(s.mat(), vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw Error("symmetric eigensolve failed to converge");
    }
    return es;
}

} // namespace

double min_eig(const SymMat& s) {
    return eig_solve(s, false).eigenvalues().minCoeff();
}

double max_eig(const SymMat& s) {
    return eig_solve(s, false).eigenvalues().maxCoeff();
}

double min_eig(const Mat& m) {
    return min_eig(SymMat(m));
}

double max_eig(const Mat& m) {
    return max_eig(SymMat(m));
}

bool is_pd(const SymMat& s, double tol) {
    return min_eig(s) > tol;
}

bool is_psd(const SymMat& s, double tol) {
    return min_eig(s) >= -tol;
}

SymMat inv_pd(const SymMat& s, double tol) {
    auto es = eig_solve(s, true);
    const double lam_min = es.eigenvalues().minCoeff();
    if (!(lam_min > tol)) {
        std::ostringstream os;
        os << "inv_pd: matrix is not positive definite (min eigenvalue "
           << lam_min << ")";
        throw NotPositiveDefinite(os.str());
    }
    const Mat inv = es.eigenvectors() *
                    es.eigenvalues().cwiseInverse().asDiagonal() *
                    es.eigenvectors().transpose();
    return symmetrize(inv);
}

Mat mat_exp(const Mat& m) {
    require_square(m, "mat_exp");
    if (!all_finite(m)) {
        throw NonFinite("mat_exp: input has NaN or Inf entries");
    }
    return m.exp();
}

} // namespace sre
