#include "gmlab/regress.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace gmlab {

DesignMatrix::DesignMatrix(Eigen::MatrixXd entries, double rank_tol)
    : entries_(std::move(entries)) {
    const Eigen::Index n = entries_.rows();
    const Eigen::Index k = entries_.cols();
    if (k < 1 || k >= n) {
        throw DimensionMismatchError("design must satisfy 1 <= k < n, got n=" +
                                     std::to_string(n) + " k=" + std::to_string(k));
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(entries_);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(k - 1);
    if (!(smax > 0.0) || smin <= rank_tol * smax) {
        throw RankDeficientError("design matrix is rank deficient (smin/smax=" +
                                 std::to_string(smax > 0.0 ? smin / smax : 0.0) + ")");
    }
    qr_.compute(entries_);
    ols_map_ = qr_.solve(Eigen::MatrixXd::Identity(n, n));
}

bool DesignMatrix::is_location_model(double tol) const {
    if (k() != 1) return false;
    const double first = entries_(0, 0);
    if (first == 0.0) return false;
    return ((entries_.col(0).array() - first).abs() < tol * std::abs(first)).all();
}

bool LinearEstimator::unbiased_for(const DesignMatrix& design, double tol) const {
    if (A.rows() != design.k() || A.cols() != design.n()) {
        throw DimensionMismatchError("estimator map must be k x n");
    }
    const Eigen::MatrixXd residual =
        A * design.matrix() - Eigen::MatrixXd::Identity(design.k(), design.k());
    return residual.cwiseAbs().maxCoeff() <= tol;
}

CovarianceSpec::CovarianceSpec(double sigma2, Eigen::MatrixXd sigma) : sigma2_(sigma2) {
    if (!(sigma2 > 0.0)) {
        throw NotPositiveDefiniteError("sigma2 must be positive");
    }
    if (sigma.rows() != sigma.cols()) {
        throw DimensionMismatchError("covariance shape must be square");
    }
    sigma_ = require_symmetric(sigma);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefiniteError("covariance shape is not positive definite");
    }
}

CovarianceSpec CovarianceSpec::identity(Eigen::Index n, double sigma2) {
    return CovarianceSpec(sigma2, Eigen::MatrixXd::Identity(n, n));
}

Eigen::VectorXd ols(const DesignMatrix& design, const Eigen::VectorXd& y) {
    if (y.size() != design.n()) {
        throw DimensionMismatchError("response length must equal n");
    }
    return design.solve(y);
}

Eigen::MatrixXd gls_map(const DesignMatrix& design, const CovarianceSpec& cov) {
    if (cov.n() != design.n()) {
        throw DimensionMismatchError("covariance order must equal n");
    }
    // Whiten: with Sigma = L L', GLS on (X, y) equals OLS on (L^{-1} X, L^{-1} y).
    Eigen::LLT<Eigen::MatrixXd> llt(cov.sigma());
    const Eigen::MatrixXd white_x =
        llt.matrixL().solve(design.matrix());
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(white_x);
    const Eigen::MatrixXd white_map =
        qr.solve(Eigen::MatrixXd::Identity(design.n(), design.n()));
    // Map acts on raw y, so post-compose the whitening.
    return white_map * llt.matrixL()
                           .solve(Eigen::MatrixXd::Identity(design.n(), design.n()));
}

Eigen::VectorXd gls(const DesignMatrix& design, const CovarianceSpec& cov,
                    const Eigen::VectorXd& y) {
    if (y.size() != design.n()) {
        throw DimensionMismatchError("response length must equal n");
    }
    return gls_map(design, cov) * y;
}

Eigen::MatrixXd linear_estimator_variance(const LinearEstimator& est,
                                          const CovarianceSpec& cov) {
    if (est.A.cols() != cov.n()) {
        throw DimensionMismatchError("estimator map width must equal covariance order");
    }
    Eigen::MatrixXd v = cov.sigma2() * est.A * cov.sigma() * est.A.transpose();
    return 0.5 * (v + v.transpose());
}

double asymmetry(const Eigen::MatrixXd& m) {
    return (m - m.transpose()).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd require_symmetric(const Eigen::MatrixXd& m, double tol) {
    if (m.rows() != m.cols()) {
        throw DimensionMismatchError("matrix must be square");
    }
    const double gap = asymmetry(m);
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (gap > tol * scale) {
        throw NotSymmetricError("matrix asymmetry " + std::to_string(gap) +
                                " exceeds tolerance");
    }
    return 0.5 * (m + m.transpose());
}

LoewnerVerdict loewner_compare(const Eigen::MatrixXd& m1, const Eigen::MatrixXd& m2,
                               double loewner_tol) {
    if (m1.rows() != m2.rows() || m1.cols() != m2.cols()) {
        throw DimensionMismatchError("comparison requires matching shapes");
    }
    const Eigen::MatrixXd diff = require_symmetric(m1) - require_symmetric(m2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(diff);
    const double min_eig = es.eigenvalues()(0);
    const double scale = std::max(1.0, std::abs(diff.trace()));
    LoewnerVerdict verdict;
    verdict.dominated = min_eig >= -loewner_tol * scale;
    verdict.min_eigenvalue = min_eig;
    verdict.witness_direction = es.eigenvectors().col(0);
    return verdict;
}

}  // namespace gmlab
