#include "gmlab/moments.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>
#include <utility>

#include "gmlab/regress.hpp"

namespace gmlab {

namespace {

void ensure_valid_marginal(const SkewedTwoPoint& m) {
    if (!(m.variance > 0.0)) {
        throw Error("two-point marginal needs positive variance");
    }
    if (!(m.skew_weight > 0.0) || !(m.skew_weight < 1.0)) {
        throw Error("two-point marginal needs skew_weight strictly inside (0, 1)");
    }
}

// Tensor storage is an access optimization; past this many atoms the
// on-demand source enumeration in MomentModel::third is used instead.
constexpr Eigen::Index kTensorAtomCap = 4096;
constexpr Eigen::Index kTensorDimCap = 32;

}  // namespace

double SkewedTwoPoint::high() const {
    ensure_valid_marginal(*this);
    return std::sqrt(variance) * std::sqrt((1.0 - skew_weight) / skew_weight);
}

double SkewedTwoPoint::low() const {
    ensure_valid_marginal(*this);
    return -std::sqrt(variance) * std::sqrt(skew_weight / (1.0 - skew_weight));
}

double SkewedTwoPoint::third_moment() const {
    const double h = high(), l = low();
    return skew_weight * h * h * h + (1.0 - skew_weight) * l * l * l;
}

double SkewedTwoPoint::fourth_moment() const {
    const double h = high(), l = low();
    return skew_weight * h * h * h * h + (1.0 - skew_weight) * l * l * l * l;
}

SkewedTwoPoint SkewedTwoPoint::symmetric(double variance) {
    return SkewedTwoPoint{variance, 0.5};
}

SkewedTwoPoint SkewedTwoPoint::with_third_moment(double gamma) {
    // Solve (1 - 2p) / sqrt(p (1 - p)) = gamma for unit variance.
    const double p = 0.5 * (1.0 - gamma / std::sqrt(4.0 + gamma * gamma));
    return SkewedTwoPoint{1.0, p};
}

FiniteSupportDistribution::FiniteSupportDistribution(Eigen::MatrixXd support,
                                                     Eigen::VectorXd weights)
    : support_(std::move(support)), weights_(std::move(weights)) {
    if (support_.rows() < 1 || support_.cols() < 1) {
        throw DimensionMismatchError("support must be a nonempty dimension x size matrix");
    }
    if (weights_.size() != support_.cols()) {
        throw DimensionMismatchError("need one weight per support column");
    }
    if (!(weights_.array() > 0.0).all()) {
        throw Error("support weights must be strictly positive");
    }
    const double total = weights_.sum();
    if (std::abs(total - 1.0) > 1e-12) {
        throw Error("support weights must sum to one, got " + std::to_string(total));
    }
}

Eigen::VectorXd FiniteSupportDistribution::mean() const { return support_ * weights_; }

Eigen::MatrixXd FiniteSupportDistribution::covariance() const {
    const Eigen::MatrixXd centered = support_.colwise() - mean();
    return centered * weights_.asDiagonal() * centered.transpose();
}

FiniteSupportDistribution FiniteSupportDistribution::shifted(
    const Eigen::VectorXd& delta) const {
    if (delta.size() != dimension()) {
        throw DimensionMismatchError("shift must match the support dimension");
    }
    return FiniteSupportDistribution(support_.colwise() + delta, weights_);
}

FiniteSupportDistribution product_distribution(std::vector<SkewedTwoPoint> marginals) {
    const Eigen::Index n = static_cast<Eigen::Index>(marginals.size());
    if (n < 1) {
        throw DimensionMismatchError("need at least one marginal");
    }
    for (const auto& m : marginals) ensure_valid_marginal(m);
    if (n >= 63 || (std::size_t{1} << n) > tol::enumeration_cap) {
        throw SupportTooLargeError("product support 2^" + std::to_string(n) +
                                   " exceeds the enumeration cap");
    }
    const Eigen::Index size = Eigen::Index{1} << n;
    Eigen::MatrixXd support(n, size);
    Eigen::VectorXd weights(size);
    for (Eigen::Index mask = 0; mask < size; ++mask) {
        double w = 1.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const bool up = (mask >> j) & 1;
            support(j, mask) = up ? marginals[j].high() : marginals[j].low();
            w *= up ? marginals[j].skew_weight : 1.0 - marginals[j].skew_weight;
        }
        weights[mask] = w;
    }
    FiniteSupportDistribution dist(std::move(support), std::move(weights));
    dist.marginals_ =
        std::make_shared<const std::vector<SkewedTwoPoint>>(std::move(marginals));
    return dist;
}

FiniteSupportDistribution product_iid(const SkewedTwoPoint& base, Eigen::Index n) {
    return product_distribution(std::vector<SkewedTwoPoint>(static_cast<std::size_t>(n), base));
}

FiniteSupportDistribution random_whitened_support(CounterRng& rng, Eigen::Index n,
                                                  Eigen::Index atoms) {
    if (atoms <= n) {
        throw DimensionMismatchError("whitening needs more atoms than dimensions");
    }
    for (int attempt = 0; attempt < 16; ++attempt) {
        Eigen::MatrixXd v = rng.gaussian_like_matrix(n, atoms);
        Eigen::VectorXd w = rng.uniform_vector(atoms, 0.5, 1.5);
        w /= w.sum();
        v.colwise() -= Eigen::VectorXd(v * w);
        const Eigen::MatrixXd s = v * w.asDiagonal() * v.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
        if (es.eigenvalues()(0) <= 1e-10 * es.eigenvalues()(n - 1)) continue;
        const Eigen::MatrixXd root_inv =
            es.eigenvectors() *
            es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
            es.eigenvectors().transpose();
        return FiniteSupportDistribution(root_inv * v, w);
    }
    throw RankDeficientError("failed to draw a full-rank support after 16 attempts");
}

double MomentModel::third(Eigen::Index j, Eigen::Index l, Eigen::Index m) const {
    if (independent_) {
        return (j == l && l == m) ? third_diag_[j] : 0.0;
    }
    if (!third_tensor_.empty()) {
        const auto nn = static_cast<std::size_t>(n());
        return third_tensor_[(static_cast<std::size_t>(j) * nn + static_cast<std::size_t>(l)) * nn +
                             static_cast<std::size_t>(m)];
    }
    if (source_) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < source_->size(); ++i) {
            const auto v = source_->support().col(i);
            acc += source_->weights()[i] * v[j] * v[l] * v[m];
        }
        return acc;
    }
    throw ThirdMomentsUnavailableError(
        "cross third moments need independence, a stored tensor, or a source distribution");
}

void MomentModel::require_positive_definite() const {
    Eigen::LLT<Eigen::MatrixXd> llt(second_);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefiniteError("second-moment matrix is not positive definite");
    }
}

MomentModel MomentModel::from_distribution(const FiniteSupportDistribution& dist) {
    const double scale = std::max(1.0, dist.support().cwiseAbs().maxCoeff());
    if (dist.mean().cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw NotCenteredError("moment model needs a mean-zero distribution");
    }
    const Eigen::Index n = dist.dimension();
    MomentModel model;
    model.second_ = dist.covariance();
    model.third_diag_.resize(n);
    Eigen::VectorXd fourth(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto row = dist.support().row(j).transpose().array();
        model.third_diag_[j] = (dist.weights().array() * row.pow(3)).sum();
        fourth[j] = (dist.weights().array() * row.pow(4)).sum();
    }
    model.fourth_diag_ = std::move(fourth);
    if (dist.marginals() != nullptr) {
        // Declared independence: the cross second moments are zero in exact
        // arithmetic, so drop their rounding residue.
        model.independent_ = true;
        model.second_ = Eigen::MatrixXd(model.second_.diagonal().asDiagonal());
    } else if (n <= kTensorDimCap && dist.size() <= kTensorAtomCap) {
        const auto nn = static_cast<std::size_t>(n);
        model.third_tensor_.assign(nn * nn * nn, 0.0);
        for (Eigen::Index i = 0; i < dist.size(); ++i) {
            const double w = dist.weights()[i];
            const auto v = dist.support().col(i);
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index l = 0; l < n; ++l)
                    for (Eigen::Index m = 0; m < n; ++m)
                        model.third_tensor_[(static_cast<std::size_t>(j) * nn +
                                             static_cast<std::size_t>(l)) * nn +
                                            static_cast<std::size_t>(m)] += w * v[j] * v[l] * v[m];
        }
    }
    model.source_ = std::make_shared<const FiniteSupportDistribution>(dist);
    return model;
}

MomentModel MomentModel::from_marginals(const std::vector<SkewedTwoPoint>& marginals) {
    const Eigen::Index n = static_cast<Eigen::Index>(marginals.size());
    if (n < 1) {
        throw DimensionMismatchError("need at least one marginal");
    }
    MomentModel model;
    model.independent_ = true;
    model.second_ = Eigen::MatrixXd::Zero(n, n);
    model.third_diag_.resize(n);
    Eigen::VectorXd fourth(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& m = marginals[static_cast<std::size_t>(j)];
        ensure_valid_marginal(m);
        model.second_(j, j) = m.variance;
        model.third_diag_[j] = m.third_moment();
        fourth[j] = m.fourth_moment();
    }
    model.fourth_diag_ = std::move(fourth);
    return model;
}

MomentModel MomentModel::independent(Eigen::VectorXd second_diag, Eigen::VectorXd third_diag,
                                     std::optional<Eigen::VectorXd> fourth_diag) {
    const Eigen::Index n = second_diag.size();
    if (third_diag.size() != n || (fourth_diag && fourth_diag->size() != n)) {
        throw DimensionMismatchError("per-coordinate moment vectors must share a length");
    }
    if (!(second_diag.array() > 0.0).all()) {
        throw NotPositiveDefiniteError("independent model needs positive second moments");
    }
    if (fourth_diag &&
        (fourth_diag->array() + 1e-12 < second_diag.array().square()).any()) {
        throw Error("fourth moments must satisfy E e^4 >= (E e^2)^2");
    }
    MomentModel model;
    model.independent_ = true;
    model.second_ = second_diag.asDiagonal();
    model.third_diag_ = std::move(third_diag);
    model.fourth_diag_ = std::move(fourth_diag);
    return model;
}

MomentModel moments_of(const FiniteSupportDistribution& dist) {
    return MomentModel::from_distribution(dist);
}

QuadraticFormMoments quadratic_form_moments(const Eigen::MatrixXd& h,
                                            const MomentModel& model) {
    if (h.rows() != model.n() || h.cols() != model.n()) {
        throw DimensionMismatchError("quadratic form order must match the model");
    }
    const Eigen::MatrixXd hs = require_symmetric(h);
    QuadraticFormMoments out;
    out.mean = (hs * model.second()).trace();
    if (const auto* src = model.source()) {
        double second_raw = 0.0;
        for (Eigen::Index i = 0; i < src->size(); ++i) {
            const auto v = src->support().col(i);
            const double q = v.dot(hs * v);
            second_raw += src->weights()[i] * q * q;
        }
        out.variance = second_raw - out.mean * out.mean;
    } else if (model.independent() && model.fourth_diag()) {
        const Eigen::VectorXd mu2 = model.second().diagonal();
        const Eigen::VectorXd& mu4 = *model.fourth_diag();
        double diag_part = 0.0, off_part = 0.0;
        for (Eigen::Index j = 0; j < model.n(); ++j) {
            diag_part += hs(j, j) * hs(j, j) * (mu4[j] - mu2[j] * mu2[j]);
            for (Eigen::Index l = 0; l < model.n(); ++l) {
                if (l == j) continue;
                off_part += hs(j, l) * hs(j, l) * mu2[j] * mu2[l];
            }
        }
        out.variance = diag_part + 2.0 * off_part;
    }
    return out;
}

double quadratic_linear_covariance(const Eigen::VectorXd& d, const Eigen::MatrixXd& h,
                                   const MomentModel& model) {
    const Eigen::Index n = model.n();
    if (d.size() != n || h.rows() != n || h.cols() != n) {
        throw DimensionMismatchError("covariance inputs must match the model order");
    }
    const Eigen::MatrixXd hs = require_symmetric(h);
    if (model.independent()) {
        return (d.array() * hs.diagonal().array() * model.third_diag().array()).sum();
    }
    if (model.has_third_tensor() || model.source() == nullptr) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index l = 0; l < n; ++l)
                for (Eigen::Index m = 0; m < n; ++m)
                    acc += d[j] * hs(l, m) * model.third(j, l, m);
        return acc;
    }
    const auto* src = model.source();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < src->size(); ++i) {
        const auto v = src->support().col(i);
        acc += src->weights()[i] * d.dot(v) * v.dot(hs * v);
    }
    return acc;
}

}  // namespace gmlab
