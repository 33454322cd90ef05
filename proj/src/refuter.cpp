#include "gmlab/refuter.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace gmlab {

namespace {

void require_full_rank_mean_zero(const FiniteSupportDistribution& probe) {
    const double scale = std::max(1.0, probe.support().cwiseAbs().maxCoeff());
    if (probe.mean().cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw NotCenteredError("probe must have mean zero");
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(probe.support());
    const Eigen::Index n = probe.dimension();
    if (svd.singularValues().size() < n ||
        svd.singularValues()(n - 1) <= 1e-10 * svd.singularValues()(0)) {
        throw RankDeficientError("probe support must have rank n");
    }
}

Eigen::VectorXd grid_vector(CounterRng& rng, Eigen::Index n) {
    Eigen::VectorXd z(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        z[j] = static_cast<double>(rng.uniform_int(-3, 3));
    }
    return z;
}

}  // namespace

ProbeFamily::ProbeFamily(std::vector<FiniteSupportDistribution> members)
    : probes(std::move(members)) {
    for (const auto& probe : probes) require_full_rank_mean_zero(probe);
}

std::pair<FiniteSupportDistribution, FiniteSupportDistribution> step1_probes(
    const Eigen::VectorXd& z) {
    const Eigen::Index n = z.size();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);

    Eigen::MatrixXd v1(n, 2 * n);
    v1 << eye, -eye;
    FiniteSupportDistribution first(
        v1, Eigen::VectorXd::Constant(2 * n, 1.0 / (2.0 * static_cast<double>(n))));

    Eigen::MatrixXd v2(n, 2 * n + 2);
    v2 << eye, -eye, z, -z;
    FiniteSupportDistribution second(
        v2, Eigen::VectorXd::Constant(2 * n + 2,
                                      1.0 / (2.0 * static_cast<double>(n + 1))));
    return {std::move(first), std::move(second)};
}

FiniteSupportDistribution step2_probe(const Eigen::VectorXd& y, const Eigen::VectorXd& z) {
    const Eigen::Index n = y.size();
    if (z.size() != n) {
        throw DimensionMismatchError("probe directions must share a dimension");
    }
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, 3 * n + 2);
    for (Eigen::Index j = 0; j < n; ++j) {
        v(j, j) = y[j] + z[j];  // ((y_j + z_j) e_j) block
    }
    v.col(n) = -y;
    v.col(n + 1) = -z;
    v.block(0, n + 2, n, n) = Eigen::MatrixXd::Identity(n, n);
    v.block(0, 2 * n + 2, n, n) = -Eigen::MatrixXd::Identity(n, n);
    return FiniteSupportDistribution(
        std::move(v),
        Eigen::VectorXd::Constant(3 * n + 2, 1.0 / static_cast<double>(3 * n + 2)));
}

Eigen::VectorXd oddness_deficit(const BlackBoxEstimator& est, const Eigen::VectorXd& z) {
    return est.eval(z) + est.eval(-z);
}

Eigen::VectorXd additivity_deficit(const BlackBoxEstimator& est, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& z) {
    return est.eval(y) + est.eval(z) - est.eval(y + z);
}

double homogeneity_deficit(const BlackBoxEstimator& est, const Eigen::VectorXd& z,
                           const std::vector<std::pair<int, int>>& ratios) {
    double worst = 0.0;
    const Eigen::VectorXd base = est.eval(z);
    for (const auto& [p, q] : ratios) {
        if (q == 0) {
            throw Error("homogeneity ratio denominator must be nonzero");
        }
        const double r = static_cast<double>(p) / static_cast<double>(q);
        const double deficit = (est.eval(r * z) - r * base).cwiseAbs().maxCoeff();
        worst = std::max(worst, deficit);
    }
    return worst;
}

std::optional<Refutation> refute_f2_unbiasedness(const BlackBoxEstimator& est,
                                                 const DesignMatrix& design, int budget,
                                                 std::uint64_t seed) {
    if (budget < 1) {
        throw Error("refutation budget must be at least 1");
    }
    const Eigen::Index n = design.n();
    const Eigen::Index k = design.k();
    const Eigen::Index singles = n;
    const Eigen::Index pairs = n * (n - 1) / 2;

    for (int t = 0; t < budget; ++t) {
        CounterRng rng(seed, static_cast<std::uint64_t>(t));
        const FiniteSupportDistribution probe = [&]() {
            if (t < singles) {
                Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
                z[t] = 1.0;
                return step1_probes(z).second;
            }
            if (t < singles + pairs) {
                Eigen::Index rest = t - singles;
                Eigen::Index j = 0;
                while (rest >= n - 1 - j) {
                    rest -= n - 1 - j;
                    ++j;
                }
                Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
                z[j] = 1.0;
                z[j + 1 + rest] = 1.0;
                return step1_probes(z).second;
            }
            switch (t % 3) {
                case 0:
                    return step1_probes(grid_vector(rng, n)).first;
                case 1:
                    return step1_probes(grid_vector(rng, n)).second;
                default:
                    return step2_probe(grid_vector(rng, n), grid_vector(rng, n));
            }
        }();
        const Eigen::VectorXd beta =
            t % 2 == 0 ? Eigen::VectorXd::Zero(k) : rng.uniform_vector(k, -2.0, 2.0);
        const FiniteSupportDistribution data = probe.shifted(design.matrix() * beta);
        const Eigen::VectorXd expectation = exact_expectation(
            data, [&](const Eigen::VectorXd& y) { return est.eval(y); });
        const double deficit = (expectation - beta).cwiseAbs().maxCoeff();
        if (deficit > 1e-8) {
            return Refutation{std::move(data), beta, expectation, deficit};
        }
    }
    return std::nullopt;
}

BlackBoxEstimator hansen_tilde(const DesignMatrix& design, Eigen::Index i, Eigen::Index j,
                               const Eigen::VectorXd& a) {
    const Eigen::Index n = design.n();
    const Eigen::Index k = design.k();
    if (i < 0 || i >= n || j < 0 || j >= n || i == j) {
        throw DimensionMismatchError("need distinct row indices i != j inside [0, n)");
    }
    if (a.size() != k) {
        throw DimensionMismatchError("correction direction must have k entries");
    }
    if (a.cwiseAbs().maxCoeff() == 0.0) {
        throw Error("correction direction must be nonzero");
    }

    Eigen::MatrixXd x_loo(n - 1, k);
    Eigen::Index row = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
        if (r != i) x_loo.row(row++) = design.matrix().row(r);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x_loo);
    if (svd.singularValues()(k - 1) <= 1e-10 * svd.singularValues()(0)) {
        throw LeaveOneOutRankDeficientError(
            "design loses full column rank when row " + std::to_string(i) + " is deleted");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_loo(x_loo);
    const Eigen::RowVectorXd x_j = design.matrix().row(j);

    BlackBoxEstimator out;
    out.label = "hansen-tilde(i=" + std::to_string(i) + ",j=" + std::to_string(j) + ")";
    out.eval = [design, qr_loo, x_j, a, i, j, n](const Eigen::VectorXd& y) {
        if (y.size() != n) {
            throw DimensionMismatchError("response length must equal n");
        }
        Eigen::VectorXd y_loo(n - 1);
        Eigen::Index row = 0;
        for (Eigen::Index r = 0; r < n; ++r) {
            if (r != i) y_loo[row++] = y[r];
        }
        const Eigen::VectorXd b_loo = qr_loo.solve(y_loo);
        const double residual = y[j] - x_j.dot(b_loo);
        return Eigen::VectorXd(design.solve(y) + y[i] * residual * a);
    };
    return out;
}

FStarCheck check_fstar_unbiasedness(const BlackBoxEstimator& est, const DesignMatrix& design,
                                    int budget, std::uint64_t seed) {
    if (budget < 1) {
        throw Error("check budget must be at least 1");
    }
    const Eigen::Index n = design.n();
    const Eigen::Index k = design.k();
    FStarCheck out;
    out.fstar_pass = true;

    for (int t = 0; t < budget && out.fstar_pass; ++t) {
        CounterRng rng(seed, static_cast<std::uint64_t>(t));
        std::vector<SkewedTwoPoint> marginals;
        for (Eigen::Index c = 0; c < n; ++c) {
            marginals.push_back(SkewedTwoPoint{rng.uniform(0.5, 2.0), rng.uniform(0.15, 0.85)});
        }
        const FiniteSupportDistribution errors = product_distribution(std::move(marginals));
        const Eigen::VectorXd beta = rng.uniform_vector(k, -2.0, 2.0);
        const FiniteSupportDistribution data = errors.shifted(design.matrix() * beta);
        const Eigen::VectorXd expectation = exact_expectation(
            data, [&](const Eigen::VectorXd& y) { return est.eval(y); });
        const double bias = (expectation - beta).cwiseAbs().maxCoeff();
        out.max_independent_bias = std::max(out.max_independent_bias, bias);
        if (bias >= 1e-10) {
            out.fstar_pass = false;
            out.fstar_refutation = Refutation{data, beta, expectation, bias};
        }
    }

    out.f2_refutation = refute_f2_unbiasedness(est, design, budget, seed);
    return out;
}

}  // namespace gmlab
