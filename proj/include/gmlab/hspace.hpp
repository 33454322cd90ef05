#pragma once

#include <Eigen/Core>

#include <vector>

#include "gmlab/moments.hpp"
#include "gmlab/regress.hpp"
#include "gmlab/tolerances.hpp"

namespace gmlab {

/// Linear-plus-quadratic estimator y -> A y + alpha (y'H_1 y, ..., y'H_k y)'.
/// Unbiased over all mean-Xb models with covariance sigma^2 I exactly when
/// A X = I_k, tr(H_i) = 0, and X'H_iX = 0; make_perturbed_ols enforces that.
struct QuadraticEstimator {
    Eigen::MatrixXd A;              // k x n
    std::vector<Eigen::MatrixXd> H; // k symmetric n x n matrices
    double alpha = 0.0;

    Eigen::Index n() const { return A.cols(); }
    Eigen::Index k() const { return A.rows(); }

    Eigen::VectorXd estimate(const Eigen::VectorXd& y) const;
};

/// Orthonormal basis (under <H, G> = tr(H G)) of the admissible perturbation
/// space {H symmetric : tr(H) = 0, X'HX = 0} for a fixed design.
class HBasis {
public:
    HBasis(DesignMatrix design, std::vector<Eigen::MatrixXd> basis,
           Eigen::Index constraint_rank);

    const DesignMatrix& design() const { return design_; }
    const std::vector<Eigen::MatrixXd>& basis() const { return basis_; }
    Eigen::Index dim() const { return static_cast<Eigen::Index>(basis_.size()); }

    /// Numerical rank of the stacked constraint map; dim() + constraint_rank()
    /// always equals n(n+1)/2.
    Eigen::Index constraint_rank() const { return constraint_rank_; }

    /// Linear combination sum_i coeffs[i] * basis[i].
    Eigen::MatrixXd combine(const Eigen::VectorXd& coeffs) const;

    /// Frobenius distance from a symmetric matrix to its projection onto the
    /// span; ~0 certifies membership.
    double span_residual(const Eigen::MatrixXd& h) const;

private:
    DesignMatrix design_;
    std::vector<Eigen::MatrixXd> basis_;
    Eigen::Index constraint_rank_;
};

/// Isometric half-vectorization: diagonal entries as-is, each off-diagonal
/// pair folded into one coordinate scaled by sqrt(2), so the Euclidean inner
/// product of images equals tr(H G).
Eigen::VectorXd svec(const Eigen::MatrixXd& h);
Eigen::MatrixXd unsvec(const Eigen::VectorXd& v, Eigen::Index n);

/// Computes the admissible perturbation space for a design by assembling the
/// trace and X'HX constraint functionals on half-vectorized symmetric
/// matrices and extracting an orthonormal null-space basis via SVD. The
/// constraint rank is determined numerically with a relative 1e-10 cutoff.
HBasis solve_h_space(const DesignMatrix& design);

/// OLS perturbed by quadratic forms: A = (X'X)^{-1}X'. Each h is symmetrized
/// on input; the trace and X'HX constraints are then checked within
/// constraint_tol and violations raise ConstraintViolatedError naming the
/// constraint and its residual.
QuadraticEstimator make_perturbed_ols(const DesignMatrix& design,
                                      std::vector<Eigen::MatrixXd> h, double alpha);

/// True iff the estimator is unbiased for every error law with mean zero and
/// covariance proportional to the identity: checks the algebraic constraints,
/// then cross-validates by exact enumeration of the bias on 5 random
/// finite-support laws with covariance I and random mean parameters.
bool verify_unbiased_f2zero(const QuadraticEstimator& est, const DesignMatrix& design);

/// One detected probe of the covariance sweep: sigma = I + eps e_j e_j'
/// (j == l) or I + eps (e_j e_l' + e_l e_j') (j < l), with the per-component
/// unbiasedness defect tr(H_i sigma) and its alpha-scaled bias contribution.
struct SigmaProbe {
    Eigen::Index j;
    Eigen::Index l;
    Eigen::MatrixXd sigma;
    Eigen::VectorXd trace_bias;  // component i: tr(H_i sigma)
    Eigen::VectorXd bias;        // component i: alpha * tr(H_i sigma)
};

/// Sweeps the probe family over all j <= l and returns the probes where
/// max_i |tr(H_i sigma)| > 1e-8. The result is empty exactly when every H_i
/// vanishes: unbiasedness under one covariance shape buys nothing once the
/// shape is allowed to vary, and the probes constructively locate the
/// failure. eps may be any value in (0, 1) keeping the probes positive
/// definite; the detected set does not depend on it.
std::vector<SigmaProbe> sigma_sweep_bias(const QuadraticEstimator& est, double eps = 0.5);

/// Eigenvalues of each H_i, ascending. All zero iff the estimator is linear;
/// any nonzero eigenvalue makes E||est(y)||^2 sensitive to fourth moments of
/// the error law, which is what rules such estimators out of classes with
/// only second-moment guarantees.
std::vector<Eigen::VectorXd> eigen_diagnostic(const QuadraticEstimator& est);

}  // namespace gmlab
