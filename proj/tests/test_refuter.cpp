#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "gmlab/counterexample.hpp"
#include "gmlab/errors.hpp"
#include "gmlab/hspace.hpp"
#include "gmlab/refuter.hpp"
#include "gmlab/rng.hpp"
#include "oracles.hpp"

using namespace gmlab;

namespace {

BlackBoxEstimator ols_box(const DesignMatrix& design) {
    return {[&design](const Eigen::VectorXd& y) { return ols(design, y); }, "ols"};
}

BlackBoxEstimator quadratic_box(const QuadraticEstimator& est) {
    return {[est](const Eigen::VectorXd& y) { return est.estimate(y); }, "quadratic"};
}

Eigen::VectorXd exact_mean(const BlackBoxEstimator& est,
                           const FiniteSupportDistribution& data) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(est.eval(data.support().col(0)).size());
    for (Eigen::Index a = 0; a < data.size(); ++a)
        acc += data.weights()(a) * est.eval(data.support().col(a));
    return acc;
}

}  // namespace

TEST_CASE("stage-one probes have the stated support and covariance") {
    Eigen::VectorXd z(3);
    z << 1, 0, 1;
    const auto [p1, p2] = step1_probes(z);

    CHECK(p1.size() == 6);
    CHECK(p1.mean().cwiseAbs().maxCoeff() < 1e-15);
    CHECK((p1.covariance() - Eigen::MatrixXd::Identity(3, 3) / 3.0).cwiseAbs().maxCoeff() <
          1e-14);
    CHECK(p1.weights().maxCoeff() == doctest::Approx(1.0 / 6.0));

    CHECK(p2.size() == 8);
    CHECK(p2.mean().cwiseAbs().maxCoeff() < 1e-15);
    const Eigen::MatrixXd expect2 =
        (Eigen::MatrixXd::Identity(3, 3) + z * z.transpose()) / 4.0;
    CHECK((p2.covariance() - expect2).cwiseAbs().maxCoeff() < 1e-14);

    // The mixture identity: p2 = (n/(n+1)) p1 + (1/(n+1)) coin(z,-z), as an
    // expectation operator. Checked on a nonlinear functional.
    const auto f = [](const Eigen::VectorXd& v) { return v.squaredNorm() + v(0); };
    const double lhs = oracle::enum_mean(p2, f);
    const double coin = 0.5 * (f(z) + f(-z));
    const double rhs = (3.0 / 4.0) * oracle::enum_mean(p1, f) + (1.0 / 4.0) * coin;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
}

TEST_CASE("stage-two probe bookkeeping") {
    Eigen::VectorXd y(2), z(2);
    y << 1, -2;
    z << 3, 1;
    const FiniteSupportDistribution p = step2_probe(y, z);
    CHECK(p.size() == 3 * 2 + 2);
    CHECK(p.mean().cwiseAbs().maxCoeff() < 1e-14);
    CHECK(p.weights().minCoeff() == doctest::Approx(1.0 / 8.0));
    // For a linear map the probe expectation vanishes identically.
    Eigen::MatrixXd a(1, 2);
    a << 2.0, -1.0;
    const BlackBoxEstimator lin{
        [&a](const Eigen::VectorXd& v) { return Eigen::VectorXd(a * v); }, "lin"};
    CHECK(exact_mean(lin, p).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("probe family rejects shifted members") {
    Eigen::MatrixXd sup(2, 2);
    sup << 1, -1, 1, -1;
    Eigen::VectorXd w(2);
    w << 0.5, 0.5;
    // Mean zero but rank-deficient support: not an admissible probe.
    CHECK_THROWS_AS(ProbeFamily({FiniteSupportDistribution(sup, w)}), RankDeficientError);

    Eigen::MatrixXd sup2(1, 2);
    sup2 << 1.0, 2.0;
    CHECK_THROWS_AS(ProbeFamily({FiniteSupportDistribution(sup2, w)}), NotCenteredError);
}

TEST_CASE("deficit functionals vanish exactly on linear maps") {
    CounterRng rng(kDefaultSeed, 600);
    const DesignMatrix design(oracle::random_design(rng, 5, 2));
    const BlackBoxEstimator est = ols_box(design);
    for (int t = 0; t < 10; ++t) {
        const Eigen::VectorXd z = rng.uniform_vector(5, -3.0, 3.0);
        const Eigen::VectorXd y = rng.uniform_vector(5, -3.0, 3.0);
        CHECK(oddness_deficit(est, z).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(additivity_deficit(est, y, z).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(homogeneity_deficit(est, z) < 1e-12);
    }
}

TEST_CASE("deficit functionals expose quadratic components") {
    const DesignMatrix design(Eigen::MatrixXd::Ones(3, 1));
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 3);
    h(0, 0) = 1;
    h(1, 1) = -1;
    const BlackBoxEstimator est = quadratic_box(make_perturbed_ols(design, {h}, 1.0));

    Eigen::VectorXd z(3);
    z << 1, 0, 0;  // z'Hz = 1
    // est(z) + est(-z) = 2 alpha z'Hz.
    CHECK(oddness_deficit(est, z)(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(homogeneity_deficit(est, z) > 0.5);
    Eigen::VectorXd y(3);
    y << 0, 1, 0;
    // Cross term 2 y'Hz vanishes here but the squares do not cancel.
    CHECK(additivity_deficit(est, y, z).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::VectorXd y2(3);
    y2 << 2, 0, 0;
    CHECK(additivity_deficit(est, y2, z).cwiseAbs().maxCoeff() ==
          doctest::Approx(4.0).epsilon(1e-12));  // -2 y2'Hz
}

TEST_CASE("unbiased linear estimators survive the refuter untouched") {
    CounterRng rng(kDefaultSeed, 601);
    for (int t = 0; t < 10; ++t) {
        const Eigen::Index n = rng.uniform_int(3, 7);
        const Eigen::Index k = rng.uniform_int(1, n - 1);
        const DesignMatrix design(oracle::random_design(rng, n, k));
        CHECK_FALSE(refute_f2_unbiasedness(ols_box(design), design, 50, 1000 + t).has_value());
    }
}

TEST_CASE("biased linear estimators are caught through their mean parameter") {
    const DesignMatrix design(Eigen::MatrixXd::Ones(4, 1));
    Eigen::MatrixXd a(1, 4);
    a << 0.5, 0.25, 0.25, 0.25;  // AX = 1.25 != 1
    const BlackBoxEstimator biased{
        [&a](const Eigen::VectorXd& y) { return Eigen::VectorXd(a * y); }, "biased"};
    const auto r = refute_f2_unbiasedness(biased, design, 50, 3);
    REQUIRE(r.has_value());
    // The witness must reproduce: exact expectation misses beta as recorded.
    const Eigen::VectorXd mean = exact_mean(biased, r->probe);
    CHECK((mean - r->expectation).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((mean - r->beta).cwiseAbs().maxCoeff() == doctest::Approx(r->norm));
    CHECK(r->norm > 1e-8);
}

TEST_CASE("quadratic perturbations are refuted by the targeted schedule") {
    CounterRng rng(kDefaultSeed, 602);
    for (int t = 0; t < 10; ++t) {
        const Eigen::Index n = rng.uniform_int(3, 7);
        const Eigen::Index k = rng.uniform_int(1, n - 1);
        const DesignMatrix design(oracle::random_design(rng, n, k));
        const HBasis space = solve_h_space(design);
        if (space.dim() == 0) continue;
        std::vector<Eigen::MatrixXd> hs;
        double scale = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) {
            hs.push_back(space.combine(rng.uniform_vector(space.dim(), -1.0, 1.0)));
            scale = std::max(scale, hs.back().norm());
        }
        REQUIRE(scale > 0.0);
        for (auto& m : hs) m /= scale;
        const auto est = make_perturbed_ols(design, hs, 1.0);
        const auto r = refute_f2_unbiasedness(quadratic_box(est), design, 50, 7100 + t);
        REQUIRE(r.has_value());
        CHECK(r->norm > 1e-8);
        const Eigen::VectorXd mean = exact_mean(quadratic_box(est), r->probe);
        CHECK((mean - r->expectation).cwiseAbs().maxCoeff() < 1e-11);
    }
}

TEST_CASE("refuter validates its budget") {
    const DesignMatrix design(Eigen::MatrixXd::Ones(3, 1));
    CHECK_THROWS_AS(refute_f2_unbiasedness(ols_box(design), design, 0), Error);
}

TEST_CASE("leave-one-out correction estimator construction") {
    CounterRng rng(kDefaultSeed, 603);
    const DesignMatrix design(oracle::random_design(rng, 5, 2));
    const Eigen::VectorXd a = Eigen::VectorXd::Ones(2);
    CHECK_THROWS_AS(hansen_tilde(design, 1, 1, a), Error);   // i == j
    CHECK_THROWS_AS(hansen_tilde(design, 9, 1, a), Error);   // out of range
    CHECK_THROWS_AS(hansen_tilde(design, 0, 1, Eigen::VectorXd::Zero(2)), Error);

    // Deleting the only informative row must be rejected.
    Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(4, 1);
    e1(0, 0) = 1.0;
    const DesignMatrix needle(e1);
    CHECK_THROWS_AS(hansen_tilde(needle, 0, 1, Eigen::VectorXd::Ones(1)),
                    LeaveOneOutRankDeficientError);
}

TEST_CASE("the correction vanishes when the loo fit interpolates") {
    CounterRng rng(kDefaultSeed, 604);
    // n = k + 1: the leave-one-out fit is exact at every remaining row.
    const DesignMatrix design(oracle::random_design(rng, 4, 3));
    const BlackBoxEstimator tilde = hansen_tilde(design, 0, 2, Eigen::VectorXd::Ones(3));
    for (int t = 0; t < 100; ++t) {
        const Eigen::VectorXd y = rng.uniform_vector(4, -3.0, 3.0);
        CHECK((tilde.eval(y) - ols(design, y)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("the correction vanishes on the single-needle design") {
    CounterRng rng(kDefaultSeed, 605);
    Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(4, 1);
    e1(0, 0) = 1.0;
    const DesignMatrix needle(e1);
    // j picks the needle row, i is any other observation.
    const BlackBoxEstimator tilde = hansen_tilde(needle, 2, 0, Eigen::VectorXd::Ones(1));
    for (int t = 0; t < 100; ++t) {
        const Eigen::VectorXd y = rng.uniform_vector(4, -3.0, 3.0);
        CHECK((tilde.eval(y) - ols(needle, y)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("the correction is genuinely nonlinear on generic designs") {
    CounterRng rng(kDefaultSeed, 606);
    const DesignMatrix design(oracle::random_design(rng, 5, 2));
    const BlackBoxEstimator tilde = hansen_tilde(design, 0, 1, Eigen::VectorXd::Ones(2));
    bool differs = false;
    for (int t = 0; t < 20 && !differs; ++t) {
        const Eigen::VectorXd y = rng.uniform_vector(5, -3.0, 3.0);
        differs = (tilde.eval(y) - ols(design, y)).cwiseAbs().maxCoeff() > 1e-6;
    }
    CHECK(differs);
}

TEST_CASE("independent-class check clears the loo-corrected estimator") {
    CounterRng rng(kDefaultSeed, 607);
    const DesignMatrix design(oracle::random_design(rng, 5, 2));
    const BlackBoxEstimator tilde = hansen_tilde(design, 0, 1, Eigen::VectorXd::Ones(2));
    const FStarCheck check = check_fstar_unbiasedness(tilde, design, 50, 21);
    CHECK(check.fstar_pass);
    CHECK(check.max_independent_bias < 1e-10);
    CHECK_FALSE(check.fstar_refutation.has_value());
    // Dependence between coordinates i and j breaks it, and the witness is a
    // correlated law.
    REQUIRE(check.f2_refutation.has_value());
    const Eigen::MatrixXd cov = check.f2_refutation->probe.covariance();
    Eigen::MatrixXd off = cov;
    off.diagonal().setZero();
    CHECK(off.cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("independent-class check refutes estimators biased under unequal variances") {
    const DesignMatrix design(Eigen::MatrixXd::Ones(3, 1));
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 3);
    h(0, 0) = 1;
    h(1, 1) = -1;
    const auto est = make_perturbed_ols(design, {h}, 1.0);
    const FStarCheck check = check_fstar_unbiasedness(quadratic_box(est), design, 50, 22);
    CHECK_FALSE(check.fstar_pass);
    REQUIRE(check.fstar_refutation.has_value());
    CHECK(check.max_independent_bias > 1e-8);
}

TEST_CASE("independent-class check clears ols entirely") {
    CounterRng rng(kDefaultSeed, 608);
    const DesignMatrix design(oracle::random_design(rng, 4, 2));
    const FStarCheck check = check_fstar_unbiasedness(ols_box(design), design, 30, 23);
    CHECK(check.fstar_pass);
    CHECK_FALSE(check.f2_refutation.has_value());
}

TEST_CASE("second probe shape for concrete inputs") {
    Eigen::VectorXd y(2), z(2);
    y << 1, 0;
    z << 0, 1;
    const FiniteSupportDistribution probe = step2_probe(y, z);
    REQUIRE(probe.size() == 8);
    CHECK(probe.weights().isApproxToConstant(0.125, 1e-15));
    CHECK(probe.mean().cwiseAbs().maxCoeff() < 1e-15);
    // The leading block scales each basis vector by the coordinate sums,
    // here diag(1, 1).
    CHECK((probe.support().leftCols(2) - Eigen::MatrixXd::Identity(2, 2))
              .cwiseAbs()
              .maxCoeff() == 0.0);

    const FiniteSupportDistribution trivial =
        step2_probe(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3));
    REQUIRE(trivial.size() == 11);
    CHECK(trivial.mean().cwiseAbs().maxCoeff() == 0.0);
    // Five zero atoms plus +/- the identity columns.
    int zero_atoms = 0;
    for (Eigen::Index i = 0; i < trivial.size(); ++i) {
        if (trivial.support().col(i).cwiseAbs().maxCoeff() == 0.0) ++zero_atoms;
    }
    CHECK(zero_atoms == 5);
    CHECK((trivial.covariance() - (2.0 / 11.0) * Eigen::MatrixXd::Identity(3, 3))
              .cwiseAbs()
              .maxCoeff() < 1e-15);
}

TEST_CASE("even offsets double under the oddness probe") {
    CounterRng rng(kDefaultSeed, 520);
    const DesignMatrix design(oracle::random_design(rng, 5, 2));
    Eigen::VectorXd shift(2);
    shift << 0.3, -1.1;
    const BlackBoxEstimator biased{
        [&design, shift](const Eigen::VectorXd& y) {
            return Eigen::VectorXd(ols(design, y) + shift);
        },
        "ols plus constant"};
    const Eigen::VectorXd deficit = oddness_deficit(biased, rng.uniform_vector(5, -2.0, 2.0));
    CHECK((deficit - 2.0 * shift).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("quadratic part fails additivity with the predicted deficit") {
    const CounterexampleCase ex1 = example_ex1(3, 1.5);
    BlackBoxEstimator est{
        [&ex1](const Eigen::VectorXd& y) { return ex1.estimator.estimate(y); }, "ex1"};
    const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(3, 0);
    // Quadratic part at e1, e1, and 2 e1 gives 1 + 1 - 4 = -2; the linear
    // part cancels.
    const Eigen::VectorXd deficit = additivity_deficit(est, e1, e1);
    CHECK(deficit(0) == doctest::Approx(-2.0 * ex1.estimator.alpha).epsilon(1e-12));
}

TEST_CASE("homogeneity at ratio one never fires") {
    const CounterexampleCase ex1 = example_ex1(3, 1.5);
    BlackBoxEstimator est{
        [&ex1](const Eigen::VectorXd& y) { return ex1.estimator.estimate(y); }, "ex1"};
    const std::vector<std::pair<int, int>> unit_ratio{{1, 1}};
    CHECK(homogeneity_deficit(est, Eigen::VectorXd::Unit(3, 0), unit_ratio) == 0.0);
}
