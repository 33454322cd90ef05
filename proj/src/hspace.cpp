#include "gmlab/hspace.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <string>
#include <utility>

namespace gmlab {

Eigen::VectorXd QuadraticEstimator::estimate(const Eigen::VectorXd& y) const {
    if (y.size() != n()) {
        throw DimensionMismatchError("response length must equal n");
    }
    if (static_cast<Eigen::Index>(H.size()) != k()) {
        throw DimensionMismatchError("need one quadratic form per coefficient");
    }
    Eigen::VectorXd out = A * y;
    for (Eigen::Index i = 0; i < k(); ++i) {
        out[i] += alpha * y.dot(H[static_cast<std::size_t>(i)] * y);
    }
    return out;
}

Eigen::VectorXd svec(const Eigen::MatrixXd& h) {
    const Eigen::Index n = h.rows();
    if (h.cols() != n) {
        throw DimensionMismatchError("half-vectorization needs a square matrix");
    }
    const double root2 = std::sqrt(2.0);
    Eigen::VectorXd v(n * (n + 1) / 2);
    Eigen::Index idx = 0;
    for (Eigen::Index l = 0; l < n; ++l) {
        for (Eigen::Index j = 0; j <= l; ++j) {
            v[idx++] = j == l ? h(j, j) : root2 * 0.5 * (h(j, l) + h(l, j));
        }
    }
    return v;
}

Eigen::MatrixXd unsvec(const Eigen::VectorXd& v, Eigen::Index n) {
    if (v.size() != n * (n + 1) / 2) {
        throw DimensionMismatchError("half-vectorization length must be n(n+1)/2");
    }
    const double inv_root2 = 1.0 / std::sqrt(2.0);
    Eigen::MatrixXd h(n, n);
    Eigen::Index idx = 0;
    for (Eigen::Index l = 0; l < n; ++l) {
        for (Eigen::Index j = 0; j <= l; ++j) {
            const double entry = v[idx++];
            if (j == l) {
                h(j, j) = entry;
            } else {
                h(j, l) = h(l, j) = inv_root2 * entry;
            }
        }
    }
    return h;
}

HBasis::HBasis(DesignMatrix design, std::vector<Eigen::MatrixXd> basis,
               Eigen::Index constraint_rank)
    : design_(std::move(design)), basis_(std::move(basis)), constraint_rank_(constraint_rank) {}

Eigen::MatrixXd HBasis::combine(const Eigen::VectorXd& coeffs) const {
    if (coeffs.size() != dim()) {
        throw DimensionMismatchError("need one coefficient per basis element");
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(design_.n(), design_.n());
    for (Eigen::Index i = 0; i < dim(); ++i) {
        out += coeffs[i] * basis_[static_cast<std::size_t>(i)];
    }
    return out;
}

double HBasis::span_residual(const Eigen::MatrixXd& h) const {
    Eigen::VectorXd rest = svec(require_symmetric(h));
    for (const auto& b : basis_) {
        const Eigen::VectorXd bv = svec(b);
        rest -= rest.dot(bv) * bv;
    }
    return rest.norm();
}

HBasis solve_h_space(const DesignMatrix& design) {
    const Eigen::Index n = design.n();
    const Eigen::Index k = design.k();
    const Eigen::Index m = n * (n + 1) / 2;
    const Eigen::Index rows = 1 + k * (k + 1) / 2;
    const Eigen::MatrixXd& x = design.matrix();

    Eigen::MatrixXd constraints(rows, m);
    constraints.row(0) = svec(Eigen::MatrixXd::Identity(n, n)).transpose();
    Eigen::Index row = 1;
    for (Eigen::Index b = 0; b < k; ++b) {
        for (Eigen::Index a = 0; a <= b; ++a) {
            // (X'HX)_{ab} = <H, (x_a x_b' + x_b x_a') / 2> under tr(HG).
            const Eigen::MatrixXd functional =
                0.5 * (x.col(a) * x.col(b).transpose() + x.col(b) * x.col(a).transpose());
            constraints.row(row++) = svec(functional).transpose();
        }
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(constraints, Eigen::ComputeFullV);
    const double smax = svd.singularValues()(0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
        if (svd.singularValues()(i) > 1e-10 * smax) ++rank;
    }
    std::vector<Eigen::MatrixXd> basis;
    basis.reserve(static_cast<std::size_t>(m - rank));
    for (Eigen::Index i = rank; i < m; ++i) {
        basis.push_back(unsvec(svd.matrixV().col(i), n));
    }
    return HBasis(design, std::move(basis), rank);
}

QuadraticEstimator make_perturbed_ols(const DesignMatrix& design,
                                      std::vector<Eigen::MatrixXd> h, double alpha) {
    const Eigen::Index n = design.n();
    if (static_cast<Eigen::Index>(h.size()) != design.k()) {
        throw DimensionMismatchError("need one quadratic form per coefficient");
    }
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (h[i].rows() != n || h[i].cols() != n) {
            throw DimensionMismatchError("quadratic forms must be n x n");
        }
        h[i] = 0.5 * (h[i] + h[i].transpose().eval());
        const double trace = h[i].trace();
        if (std::abs(trace) > tol::constraint_tol) {
            throw ConstraintViolatedError("trace(H_" + std::to_string(i + 1) +
                                          ") must vanish, residual " + std::to_string(trace));
        }
        const double gram = (design.matrix().transpose() * h[i] * design.matrix())
                                .cwiseAbs()
                                .maxCoeff();
        if (gram > tol::constraint_tol) {
            throw ConstraintViolatedError("X'H_" + std::to_string(i + 1) +
                                          "X must vanish, residual " + std::to_string(gram));
        }
    }
    return QuadraticEstimator{design.ols_map(), std::move(h), alpha};
}

bool verify_unbiased_f2zero(const QuadraticEstimator& est, const DesignMatrix& design) {
    const Eigen::Index n = design.n();
    const Eigen::Index k = design.k();
    if (est.n() != n || est.k() != k || static_cast<Eigen::Index>(est.H.size()) != k) {
        throw DimensionMismatchError("estimator shape must match the design");
    }
    const Eigen::MatrixXd ax_gap =
        est.A * design.matrix() - Eigen::MatrixXd::Identity(k, k);
    if (ax_gap.cwiseAbs().maxCoeff() > tol::unbiased_tol) return false;
    for (const auto& h : est.H) {
        const Eigen::MatrixXd hs = 0.5 * (h + h.transpose());
        if (std::abs(hs.trace()) > tol::constraint_tol) return false;
        const double gram =
            (design.matrix().transpose() * hs * design.matrix()).cwiseAbs().maxCoeff();
        if (gram > tol::constraint_tol) return false;
    }

    // Algebra says unbiased; confirm by exact enumeration against random
    // identity-covariance laws and random mean parameters.
    CounterRng rng(kDefaultSeed, 0x756e6269);  // "unbi"
    for (int trial = 0; trial < 5; ++trial) {
        FiniteSupportDistribution dist = [&] {
            if (n <= 12) {
                std::vector<SkewedTwoPoint> marginals;
                for (Eigen::Index j = 0; j < n; ++j) {
                    marginals.push_back(SkewedTwoPoint{1.0, rng.uniform(0.1, 0.9)});
                }
                return product_distribution(std::move(marginals));
            }
            return random_whitened_support(rng, n, 2 * n + 3);
        }();
        const Eigen::VectorXd beta = rng.uniform_vector(k, -2.0, 2.0);
        const FiniteSupportDistribution shifted = dist.shifted(design.matrix() * beta);
        const Eigen::VectorXd mean = exact_expectation(
            shifted, [&](const Eigen::VectorXd& y) { return est.estimate(y); });
        if ((mean - beta).cwiseAbs().maxCoeff() >= 1e-10) return false;
    }
    return true;
}

std::vector<SigmaProbe> sigma_sweep_bias(const QuadraticEstimator& est, double eps) {
    const Eigen::Index n = est.n();
    std::vector<SigmaProbe> detected;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index l = j; l < n; ++l) {
            Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(n, n);
            sigma(j, l) += eps;
            sigma(l, j) = sigma(j, l);  // j == l adds eps once
            Eigen::VectorXd trace_bias(est.k());
            for (Eigen::Index i = 0; i < est.k(); ++i) {
                trace_bias[i] = (est.H[static_cast<std::size_t>(i)] * sigma).trace();
            }
            if (trace_bias.cwiseAbs().maxCoeff() > 1e-8) {
                detected.push_back(
                    SigmaProbe{j, l, std::move(sigma), trace_bias, est.alpha * trace_bias});
            }
        }
    }
    return detected;
}

std::vector<Eigen::VectorXd> eigen_diagnostic(const QuadraticEstimator& est) {
    std::vector<Eigen::VectorXd> spectra;
    spectra.reserve(est.H.size());
    for (const auto& h : est.H) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (h + h.transpose()));
        spectra.push_back(es.eigenvalues());
    }
    return spectra;
}

}  // namespace gmlab
