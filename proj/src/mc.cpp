#include "gmlab/mc.hpp"

#include <cmath>
#include <cstddef>

#include "gmlab/errors.hpp"

namespace gmlab {

namespace {

double pairwise_range(const std::vector<double>& values, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 8) {
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += values[i];
        return acc;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_range(values, lo, mid) + pairwise_range(values, mid, hi);
}

template <typename Source>
MonteCarloSummary simulate_impl(const std::function<double(const Eigen::VectorXd&)>& f,
                                const Source& source, std::int64_t reps,
                                std::uint64_t seed) {
    if (reps < 2) {
        throw Error("simulation needs reps >= 2");
    }
    std::vector<double> values(static_cast<std::size_t>(reps));
    for (std::int64_t r = 0; r < reps; ++r) {
        CounterRng rng(seed, static_cast<std::uint64_t>(r));
        values[static_cast<std::size_t>(r)] = f(sample_error(source, rng));
    }
    const double n = static_cast<double>(reps);
    const double mean = pairwise_sum(values) / n;

    std::vector<double> dev_sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - mean;
        dev_sq[i] = d * d;
    }
    const double dev_sq_sum = pairwise_sum(dev_sq);

    MonteCarloSummary out;
    out.estimate = dev_sq_sum / (n - 1.0);
    out.reps = reps;
    out.seed = seed;

    // Delta-method error of the variance estimate: sd of the squared
    // deviations over sqrt(reps).
    const double dev_sq_mean = dev_sq_sum / n;
    std::vector<double> second(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = dev_sq[i] - dev_sq_mean;
        second[i] = d * d;
    }
    out.std_error = std::sqrt(pairwise_sum(second) / (n - 1.0)) / std::sqrt(n);
    return out;
}

}  // namespace

Eigen::VectorXd sample_error(const FiniteSupportDistribution& errors, CounterRng& rng) {
    return errors.support().col(rng.categorical(errors.weights()));
}

Eigen::VectorXd sample_error(const std::vector<SkewedTwoPoint>& marginals, CounterRng& rng) {
    Eigen::VectorXd e(static_cast<Eigen::Index>(marginals.size()));
    for (std::size_t j = 0; j < marginals.size(); ++j) {
        e[static_cast<Eigen::Index>(j)] = rng.next_double() < marginals[j].skew_weight
                                              ? marginals[j].high()
                                              : marginals[j].low();
    }
    return e;
}

MonteCarloSummary simulate_scalar_variance(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const FiniteSupportDistribution& errors, std::int64_t reps, std::uint64_t seed) {
    return simulate_impl(f, errors, reps, seed);
}

MonteCarloSummary simulate_scalar_variance(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const std::vector<SkewedTwoPoint>& marginals, std::int64_t reps, std::uint64_t seed) {
    return simulate_impl(f, marginals, reps, seed);
}

double pairwise_sum(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    return pairwise_range(values, 0, values.size());
}

}  // namespace gmlab
