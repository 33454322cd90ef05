#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gmlab/moments.hpp"
#include "gmlab/regress.hpp"
#include "gmlab/rng.hpp"

namespace gmlab {

/// An estimator visible only through evaluation. eval must be deterministic;
/// everything the refuter concludes comes from finitely many evaluations.
struct BlackBoxEstimator {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eval;
    std::string label;
};

/// Validated bundle of refuter probes: every member has mean zero and
/// full-rank support, so each corresponds to an admissible error law with
/// positive-definite covariance and zero parameter.
struct ProbeFamily {
    explicit ProbeFamily(std::vector<FiniteSupportDistribution> members);
    std::vector<FiniteSupportDistribution> probes;
};

/// The two stage-one probes for a direction z: atoms (I, -I) with uniform
/// weights 1/(2n), and atoms (I, -I, z, -z) with uniform weights 1/(2(n+1)).
/// The second is the convex mixture (n/(n+1)) * first + (1/(n+1)) * fair
/// coin on {z, -z}; an estimator with zero expectation under both therefore
/// satisfies est(z) + est(-z) = 0.
std::pair<FiniteSupportDistribution, FiniteSupportDistribution> step1_probes(
    const Eigen::VectorXd& z);

/// The stage-two probe for a pair (y, z): atoms ((y_1+z_1)e_1, ...,
/// (y_n+z_n)e_n, -y, -z, I, -I) with uniform weights 1/(3n+2). Zero
/// expectation under it forces est(y) + est(z) = est(y + z) for odd est.
FiniteSupportDistribution step2_probe(const Eigen::VectorXd& y, const Eigen::VectorXd& z);

/// est(z) + est(-z); zero for every estimator unbiased over laws with
/// arbitrary positive-definite covariance.
Eigen::VectorXd oddness_deficit(const BlackBoxEstimator& est, const Eigen::VectorXd& z);

/// est(y) + est(z) - est(y + z); zero for additive maps.
Eigen::VectorXd additivity_deficit(const BlackBoxEstimator& est, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& z);

inline const std::vector<std::pair<int, int>>& default_homogeneity_ratios() {
    static const std::vector<std::pair<int, int>> ratios{
        {2, 1}, {3, 1}, {1, 2}, {1, 3}, {-1, 1}, {5, 7}};
    return ratios;
}

/// max over ratios p/q of |est((p/q) z) - (p/q) est(z)| (max norm); zero for
/// additive maps at every rational ratio.
double homogeneity_deficit(
    const BlackBoxEstimator& est, const Eigen::VectorXd& z,
    const std::vector<std::pair<int, int>>& ratios = default_homogeneity_ratios());

/// A witness that an estimator is not unbiased over the probed class: under
/// the recorded data law (already shifted to mean X beta), the exact
/// expectation differs from beta by `norm` in max norm. Reproducible by
/// summation from the stored support and weights.
struct Refutation {
    FiniteSupportDistribution probe;
    Eigen::VectorXd beta;
    Eigen::VectorXd expectation;
    double norm;
};

/// Probes unbiasedness over error laws with arbitrary covariance shape.
/// Deterministic probe schedule from (seed): stage-one probes at targeted
/// directions z = e_j and z = e_j + e_l first (these alone pin down any
/// quadratic deviation), then random stage-one and stage-two probes with
/// integer atoms; the mean parameter alternates between zero and random.
/// Returns the first probe whose exact expectation misses its beta by more
/// than 1e-8, or nullopt (Pass) when the budget is exhausted. Pass is "no
/// refutation within budget", never a proof.
std::optional<Refutation> refute_f2_unbiasedness(const BlackBoxEstimator& est,
                                                 const DesignMatrix& design, int budget,
                                                 std::uint64_t seed = kDefaultSeed);

/// OLS plus the data-dependent correction y_i (y_j - x_j' b_loo(i)) a, where
/// b_loo(i) is OLS with observation i deleted. Unbiased whenever the error
/// coordinates are independent, yet generally biased once coordinates i and
/// j may be dependent. Throws LeaveOneOutRankDeficientError when deleting
/// row i destroys full column rank. Collapses to OLS exactly when n = k + 1
/// (the leave-one-out fit interpolates) and when k = 1 with x = e_1, j = 0,
/// i != 0 (the residual at row j vanishes identically).
BlackBoxEstimator hansen_tilde(const DesignMatrix& design, Eigen::Index i, Eigen::Index j,
                               const Eigen::VectorXd& a);

struct FStarCheck {
    bool fstar_pass = false;          // no bias found under independent laws
    double max_independent_bias = 0;  // largest enumerated bias seen
    std::optional<Refutation> fstar_refutation;  // witness if fstar_pass is false
    std::optional<Refutation> f2_refutation;     // witness under dependent laws, if found
};

/// Exact-enumeration unbiasedness check against the independent-coordinates
/// class: `budget` random product laws (random per-coordinate two-point
/// marginals) with random mean parameters must all give bias < 1e-10.
/// Independently, dependent-coordinate laws are probed for a refutation via
/// refute_f2_unbiasedness; finding one does not affect fstar_pass.
FStarCheck check_fstar_unbiasedness(const BlackBoxEstimator& est, const DesignMatrix& design,
                                    int budget, std::uint64_t seed = kDefaultSeed);

}  // namespace gmlab
