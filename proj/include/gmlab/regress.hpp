#pragma once

#include <Eigen/Core>
#include <Eigen/QR>

#include "gmlab/errors.hpp"
#include "gmlab/tolerances.hpp"

namespace gmlab {

/// Fixed n x k regressor matrix with full column rank and 1 <= k < n.
/// Validated on construction; rejects rank deficiency via SVD with a
/// relative cutoff of rank_tol on the singular values.
class DesignMatrix {
public:
    explicit DesignMatrix(Eigen::MatrixXd entries, double rank_tol = tol::rank_tol);

    Eigen::Index n() const { return entries_.rows(); }
    Eigen::Index k() const { return entries_.cols(); }
    const Eigen::MatrixXd& matrix() const { return entries_; }

    /// The least-squares coefficient map (X'X)^{-1} X', assembled from the
    /// stored orthogonal decomposition rather than an explicit inverse.
    const Eigen::MatrixXd& ols_map() const { return ols_map_; }

    /// Least-squares solve against the stored decomposition.
    Eigen::VectorXd solve(const Eigen::VectorXd& y) const { return qr_.solve(y); }

    /// True when the design is the location model (single all-ones column
    /// up to scale), where i.i.d. errors make every admissible quadratic
    /// perturbation covariance-neutral.
    bool is_location_model(double tol = 1e-12) const;

private:
    Eigen::MatrixXd entries_;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
    Eigen::MatrixXd ols_map_;
};

/// A linear estimator y -> A y, A of shape k x n.
struct LinearEstimator {
    Eigen::MatrixXd A;

    /// Unbiased over the whole model class iff A X = I_k (entrywise).
    bool unbiased_for(const DesignMatrix& design, double tol = tol::unbiased_tol) const;
};

/// Error second-moment specification E ee' = sigma2 * Sigma with Sigma
/// symmetric positive definite.
class CovarianceSpec {
public:
    CovarianceSpec(double sigma2, Eigen::MatrixXd sigma);

    double sigma2() const { return sigma2_; }
    const Eigen::MatrixXd& sigma() const { return sigma_; }
    Eigen::MatrixXd scaled() const { return sigma2_ * sigma_; }
    Eigen::Index n() const { return sigma_.rows(); }

    static CovarianceSpec identity(Eigen::Index n, double sigma2 = 1.0);

private:
    double sigma2_;
    Eigen::MatrixXd sigma_;  // symmetrized, PD-checked
};

struct LoewnerVerdict {
    bool dominated;            // M1 - M2 is PSD up to tolerance
    double min_eigenvalue;     // smallest eigenvalue of M1 - M2
    Eigen::VectorXd witness_direction;  // unit vector attaining it
};

/// Ordinary least squares, (X'X)^{-1} X' y via QR.
Eigen::VectorXd ols(const DesignMatrix& design, const Eigen::VectorXd& y);

/// Generalized least squares (X' Sigma^{-1} X)^{-1} X' Sigma^{-1} y,
/// computed by Cholesky whitening followed by a QR solve.
Eigen::VectorXd gls(const DesignMatrix& design, const CovarianceSpec& cov,
                    const Eigen::VectorXd& y);

/// The GLS coefficient map as a k x n matrix.
Eigen::MatrixXd gls_map(const DesignMatrix& design, const CovarianceSpec& cov);

/// Var(A Y) = sigma2 * A Sigma A', symmetrized.
Eigen::MatrixXd linear_estimator_variance(const LinearEstimator& est,
                                          const CovarianceSpec& cov);

/// Loewner comparison M1 vs M2: dominated iff M1 - M2 is PSD within
/// loewner_tol relative to max(1, |tr(M1 - M2)|). Inputs must be symmetric
/// within sym_tol; they are averaged with their transposes before the
/// eigen-analysis.
LoewnerVerdict loewner_compare(const Eigen::MatrixXd& m1, const Eigen::MatrixXd& m2,
                               double loewner_tol = tol::loewner_tol);

/// max |M - M'| entrywise, the asymmetry a symmetrize step must absorb.
double asymmetry(const Eigen::MatrixXd& m);

/// (M + M') / 2 when within sym_tol, otherwise NotSymmetricError.
Eigen::MatrixXd require_symmetric(const Eigen::MatrixXd& m, double tol = tol::sym_tol);

}  // namespace gmlab
