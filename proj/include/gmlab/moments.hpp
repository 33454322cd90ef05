#pragma once

#include <Eigen/Core>

#include <memory>
#include <optional>
#include <vector>

#include "gmlab/errors.hpp"
#include "gmlab/rng.hpp"
#include "gmlab/tolerances.hpp"

namespace gmlab {

/// Mean-zero two-point marginal: takes the high value with probability
/// skew_weight and the low value otherwise. The two support points are
/// pinned by the zero-mean and variance conditions, so the third moment is
/// controlled entirely through skew_weight.
struct SkewedTwoPoint {
    double variance = 1.0;
    double skew_weight = 0.2;  // probability of the high point

    double high() const;
    double low() const;
    double third_moment() const;
    double fourth_moment() const;

    /// Fair coin on +/- sqrt(variance); third moment is exactly zero.
    static SkewedTwoPoint symmetric(double variance = 1.0);

    /// Unit-variance marginal whose third moment equals gamma.
    static SkewedTwoPoint with_third_moment(double gamma);
};

/// Discrete distribution on finitely many points of R^n. Columns of the
/// support matrix are the atoms; weights are strictly positive and sum to
/// one. All expectations against such a distribution are finite sums, so
/// moment claims made from one are exact up to rounding.
class FiniteSupportDistribution {
public:
    FiniteSupportDistribution(Eigen::MatrixXd support, Eigen::VectorXd weights);

    Eigen::Index dimension() const { return support_.rows(); }
    Eigen::Index size() const { return support_.cols(); }
    const Eigen::MatrixXd& support() const { return support_; }
    const Eigen::VectorXd& weights() const { return weights_; }

    Eigen::VectorXd mean() const;
    Eigen::MatrixXd covariance() const;  // about the mean

    /// Same weights, every atom translated by delta. Product-form marginal
    /// metadata does not survive the shift.
    FiniteSupportDistribution shifted(const Eigen::VectorXd& delta) const;

    /// Non-null only for distributions built as products of two-point
    /// marginals; coordinate j is then distributed as (*marginals())[j].
    const std::vector<SkewedTwoPoint>* marginals() const {
        return marginals_ ? marginals_.get() : nullptr;
    }

    friend FiniteSupportDistribution product_distribution(std::vector<SkewedTwoPoint> marginals);

private:
    Eigen::MatrixXd support_;   // dimension x size
    Eigen::VectorXd weights_;
    std::shared_ptr<const std::vector<SkewedTwoPoint>> marginals_;
};

/// Product of independent two-point marginals: 2^n atoms. Throws
/// SupportTooLargeError when 2^n would exceed the enumeration cap.
FiniteSupportDistribution product_distribution(std::vector<SkewedTwoPoint> marginals);

/// n i.i.d. copies of a single marginal.
FiniteSupportDistribution product_iid(const SkewedTwoPoint& base, Eigen::Index n);

/// Random finite support with mean exactly centered and covariance whitened
/// to the identity (so the result lies in the sigma = I model class without
/// being a product distribution). Needs atoms > n; retries internally until
/// the sample covariance is invertible.
FiniteSupportDistribution random_whitened_support(CounterRng& rng, Eigen::Index n,
                                                  Eigen::Index atoms);

/// Exact expectation of f under a finite-support distribution. f receives
/// each atom as a column vector; results are weight-averaged, so f may
/// return anything supporting scalar multiplication and addition.
template <typename F>
auto exact_expectation(const FiniteSupportDistribution& dist, F&& f) {
    auto acc = [&] {
        auto first = f(Eigen::VectorXd(dist.support().col(0)));
        return decltype(first)(dist.weights()[0] * first);
    }();
    for (Eigen::Index i = 1; i < dist.size(); ++i) {
        acc = acc + dist.weights()[i] * f(Eigen::VectorXd(dist.support().col(i)));
    }
    return acc;
}

/// Moment summary of a mean-zero error distribution: second-moment matrix,
/// diagonal third and fourth moments, and, when available, the full third
/// moment tensor or the generating finite-support distribution itself.
///
/// `independent` records that coordinates are independent, which licenses
/// the closed-form covariance and quadratic-variance formulas; it is set
/// only by constructors that can guarantee it (product form or explicit
/// diagonal data), never inferred numerically.
class MomentModel {
public:
    Eigen::Index n() const { return second_.rows(); }
    const Eigen::MatrixXd& second() const { return second_; }
    bool independent() const { return independent_; }
    const Eigen::VectorXd& third_diag() const { return third_diag_; }
    bool has_third_tensor() const { return !third_tensor_.empty(); }

    /// E(e_j e_l e_m). Off-diagonal entries require either independence
    /// (where they vanish unless j = l = m) or a stored tensor.
    double third(Eigen::Index j, Eigen::Index l, Eigen::Index m) const;

    const std::optional<Eigen::VectorXd>& fourth_diag() const { return fourth_diag_; }

    /// The generating distribution when this model came from one.
    const FiniteSupportDistribution* source() const {
        return source_ ? source_.get() : nullptr;
    }

    /// Throws NotPositiveDefiniteError unless the second-moment matrix is
    /// positive definite. Degenerate models are legitimate probe inputs for
    /// the unbiasedness refuter but are inadmissible as error laws in the
    /// variance-comparison machinery, which calls this first.
    void require_positive_definite() const;

    /// Exact moments of a mean-zero finite-support distribution. The full
    /// third tensor is stored for n <= 32; the source is always retained.
    static MomentModel from_distribution(const FiniteSupportDistribution& dist);

    /// Independent coordinates with analytic two-point marginals. No
    /// enumeration, so this scales to any n.
    static MomentModel from_marginals(const std::vector<SkewedTwoPoint>& marginals);

    /// Independent coordinates specified by raw per-coordinate moments.
    static MomentModel independent(Eigen::VectorXd second_diag, Eigen::VectorXd third_diag,
                                   std::optional<Eigen::VectorXd> fourth_diag = std::nullopt);

private:
    MomentModel() = default;

    Eigen::MatrixXd second_;
    bool independent_ = false;
    Eigen::VectorXd third_diag_;
    std::vector<double> third_tensor_;  // flat n^3, empty when unavailable
    std::optional<Eigen::VectorXd> fourth_diag_;
    std::shared_ptr<const FiniteSupportDistribution> source_;
};

/// Shorthand for MomentModel::from_distribution. Requires the distribution
/// to be centered within 1e-12 of zero (NotCenteredError otherwise).
MomentModel moments_of(const FiniteSupportDistribution& dist);

struct QuadraticFormMoments {
    double mean;                     // E(e' H e) = tr(H Sigma2)
    std::optional<double> variance;  // absent when fourth moments are unknown
};

/// Mean and, when computable, variance of e' H e. Variance comes from the
/// source distribution by enumeration when one is stored; otherwise from
/// the independent-coordinates formula
///   Var(e' H e) = sum_j h_jj^2 (mu4_j - mu2_j^2)
///               + 2 sum_{j != l} h_jl^2 mu2_j mu2_l
/// when the model is independent with fourth moments.
QuadraticFormMoments quadratic_form_moments(const Eigen::MatrixXd& h,
                                            const MomentModel& model);

/// Cov(d'e, e'He) = sum_{j,l,m} d_j h_lm E(e_j e_l e_m). Exact for any
/// mean-zero model: the product's expectation is a pure third-moment
/// contraction because E(d'e) = 0. Independent models reduce this to
/// sum_j d_j h_jj mu3_j without needing the full tensor.
double quadratic_linear_covariance(const Eigen::VectorXd& d, const Eigen::MatrixXd& h,
                                   const MomentModel& model);

}  // namespace gmlab
