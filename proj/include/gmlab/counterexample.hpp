#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gmlab/hspace.hpp"
#include "gmlab/mc.hpp"
#include "gmlab/moments.hpp"
#include "gmlab/regress.hpp"
#include "gmlab/rng.hpp"

namespace gmlab {

/// Exact variance comparison for the scalar functional c'b between OLS and
/// its quadratically perturbed version, all moments taken under a mean-zero
/// error law (reports for shifted data are only valid after recentering,
/// which optimize_alpha cross-checks by enumeration whenever the law is
/// finite-support). The decomposition
///   Var(c' est_alpha) = var_ols + 2 alpha cov_term + alpha^2 quad_var
/// is exact; alpha_star minimizes it.
struct ComparisonReport {
    Eigen::VectorXd c;
    double cov_term = 0.0;        // Cov(c' OLS, c' quadratic part)
    double quad_var = 0.0;        // Var(c' quadratic part)
    double alpha_star = 0.0;
    double var_ols = 0.0;
    double var_alpha_star = 0.0;
    double improvement = 0.0;     // var_ols - var_alpha_star >= 0
    std::string note;             // non-empty when the quadratic part is degenerate
    std::optional<McConfirmation> mc_confirmation;
};

/// A fully materialized beats-OLS instance: design, the perturbed estimator
/// at its optimal scaling, the functional direction, the error law (as a
/// finite support when small enough to store, and as marginals whenever the
/// law is an independent product), and the variance report.
struct CounterexampleCase {
    DesignMatrix design;
    QuadraticEstimator estimator;
    Eigen::VectorXd c;
    std::optional<FiniteSupportDistribution> errors;
    std::optional<std::vector<SkewedTwoPoint>> error_marginals;
    ComparisonReport report;
};

enum class SearchStrategy { RuleI, RuleII, Tensor };

/// d = X (X'X)^{-1} c, the weights through which the error vector enters
/// c' OLS. Always lies in the column span of X.
Eigen::VectorXd functional_weights(const DesignMatrix& design, const Eigen::VectorXd& c);

/// Cov(c' OLS, c' quadratic part) = sum_{j,l,m} d_j (sum_i c_i h_lm(i))
/// E(e_j e_l e_m) for any mean-zero law with third cross-moment information
/// (tensor, source distribution, or independence).
double cov_general(const Eigen::VectorXd& c, const std::vector<Eigen::MatrixXd>& h,
                   const DesignMatrix& design, const MomentModel& model);

/// Independent-coordinates specialization:
/// sum_j d_j (sum_i c_i h_jj(i)) mu3_j.
double cov_independent(const Eigen::VectorXd& c, const std::vector<Eigen::MatrixXd>& h,
                       const DesignMatrix& design, const Eigen::VectorXd& mu3);

/// Builds the full comparison report. Requires a positive-definite error law
/// and fourth-moment information (finite support or independent marginals);
/// throws FourthMomentsUnavailableError otherwise. A quadratic part with
/// variance <= 1e-14 is reported with alpha_star = 0 and an explanatory
/// note rather than an error. When the law is finite-support the analytic
/// var_ols and var_alpha_star are cross-checked against exact enumeration.
ComparisonReport optimize_alpha(const Eigen::VectorXd& c,
                                const std::vector<Eigen::MatrixXd>& h,
                                const DesignMatrix& design, const MomentModel& model);

/// Location design of size n with H_1 = diag(1, -1, 0, ...), first error
/// coordinate a skewed two-point law with third moment gamma, the rest
/// symmetric. cov_term = gamma / n, and any gamma != 0 strictly beats OLS.
CounterexampleCase example_ex1(Eigen::Index n, double gamma);

/// Balanced one-way layout with n = 4, k = 2: both quadratic forms equal the
/// block matrix with blocks [[1,-1],[-1,1]] and [[-1,1],[1,-1]], c = (1,0)',
/// errors i.i.d. from the given two-point base. cov_term equals the base's
/// third moment.
CounterexampleCase example_ex2(SkewedTwoPoint base = SkewedTwoPoint{1.0, 0.2});

/// Randomized search for a beats-OLS triple (H, c, F) on a given design.
/// Candidates are drawn from per-candidate counter streams, so the outcome
/// is reproducible and independent of evaluation order; ties in improvement
/// resolve to the earliest candidate index.
///
/// Strategies:
///  - RuleI: one common H for all coefficients, i.i.d. skewed errors
///    (effective when sum_i c_i != 0 and sum_j d_j h_jj != 0).
///  - RuleII: independent H_i, skewness concentrated on the coordinate j0
///    maximizing |d_j (sum_i c_i h_jj(i))|.
///  - Tensor: correlated finite-support laws whitened to identity
///    covariance, exercising the general third-moment tensor formula.
///
/// skew sets the third moment of skewed marginals; 0 forces symmetric laws
/// (then every candidate has cov_term = 0 and the search returns nullopt).
/// Returns nullopt when every candidate has |cov_term| <= 1e-10.
std::optional<CounterexampleCase> search_counterexample(
    const DesignMatrix& design, SearchStrategy strategy, int budget,
    std::uint64_t seed = kDefaultSeed, double skew = 1.5);

/// Simulates Var(c' OLS) and Var(c' est_alpha*) for a materialized case,
/// stores the confirmation in the report, and returns it. within_tolerance
/// is the 4-standard-error agreement check for both quantities.
McConfirmation confirm_by_simulation(CounterexampleCase& found, std::int64_t reps,
                                     std::uint64_t seed);

}  // namespace gmlab
