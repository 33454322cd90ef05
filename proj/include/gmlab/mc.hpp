#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <vector>

#include "gmlab/moments.hpp"
#include "gmlab/rng.hpp"

namespace gmlab {

struct MonteCarloSummary {
    double estimate = 0.0;
    double std_error = 0.0;   // sd of the per-replication statistic / sqrt(reps)
    std::int64_t reps = 0;    // >= 2
    std::uint64_t seed = 0;
};

/// Monte Carlo confirmation attached to a variance-comparison report: the
/// simulated counterparts of var_ols and var_alpha_star, and whether both
/// landed within 4 standard errors of the analytic values.
struct McConfirmation {
    MonteCarloSummary var_ols;
    MonteCarloSummary var_alpha_star;
    bool within_tolerance = false;
};

/// One draw of the error vector. Finite-support laws draw a weighted atom;
/// marginal lists draw each coordinate independently. Replication r of a
/// simulation uses its own counter stream (seed, r), so results do not
/// depend on scheduling.
Eigen::VectorXd sample_error(const FiniteSupportDistribution& errors, CounterRng& rng);
Eigen::VectorXd sample_error(const std::vector<SkewedTwoPoint>& marginals, CounterRng& rng);

/// Estimates Var(f(e)) by simulation: the estimate is the (reps - 1)
/// denominator sample variance of the replicated values, and the standard
/// error is sd((f_r - mean)^2) / sqrt(reps), the delta-method error of a
/// variance estimate. Sums are reduced pairwise in fixed index order, so the
/// result is a pure function of (seed, reps, inputs). Throws on reps < 2.
MonteCarloSummary simulate_scalar_variance(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const FiniteSupportDistribution& errors, std::int64_t reps, std::uint64_t seed);

MonteCarloSummary simulate_scalar_variance(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const std::vector<SkewedTwoPoint>& marginals, std::int64_t reps, std::uint64_t seed);

/// Deterministic pairwise-tree sum; identical result for any worker count
/// because the tree shape depends only on the index range.
double pairwise_sum(const std::vector<double>& values);

}  // namespace gmlab
