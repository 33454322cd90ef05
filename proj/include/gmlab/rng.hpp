#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include <Eigen/Core>

namespace gmlab {

/// Default seed for all randomized searches ("mark" in ASCII). Every search
/// and simulation in the library is reproducible given (seed, inputs).
inline constexpr std::uint64_t kDefaultSeed = 0x6D61726B;

/// Counter-based generator (Philox4x64-10, Random123 constants).
///
/// Keyed by (seed, stream): independent streams for the same seed are
/// obtained by varying the stream index, e.g. one stream per Monte Carlo
/// replication. Draws within a stream come from encrypting an incrementing
/// 256-bit counter, so the sequence depends only on (seed, stream, draw
/// index) and never on sharing or ordering between streams.
class CounterRng {
public:
    using u64 = std::uint64_t;

    explicit CounterRng(u64 seed, u64 stream = 0) : key_{seed, stream} {}

    /// One keyed block cipher application: 4 output words per 256-bit counter.
    static std::array<u64, 4> block(std::array<u64, 4> ctr, std::array<u64, 2> key) {
        constexpr u64 m0 = 0xD2E7470EE14C6C93ULL, m1 = 0xCA5A826395121157ULL;
        constexpr u64 w0 = 0x9E3779B97F4A7C15ULL, w1 = 0xBB67AE8584CAA73BULL;
        for (int round = 0; round < 10; ++round) {
            const u64 hi0 = mulhi(m0, ctr[0]), lo0 = m0 * ctr[0];
            const u64 hi1 = mulhi(m1, ctr[2]), lo1 = m1 * ctr[2];
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += w0;
            key[1] += w1;
        }
        return ctr;
    }

    u64 next_u64() {
        if (pos_ == 4) {
            buf_ = block(ctr_, key_);
            increment();
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Uniform integer in [lo, hi], inclusive, by rejection (no modulo bias).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const u64 span = static_cast<u64>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(next_u64());  // full range
        const u64 limit = std::numeric_limits<u64>::max() - std::numeric_limits<u64>::max() % span;
        u64 draw;
        do {
            draw = next_u64();
        } while (draw >= limit);
        return lo + static_cast<std::int64_t>(draw % span);
    }

    /// Index i with probability weights[i] / sum(weights).
    Eigen::Index categorical(const Eigen::VectorXd& weights) {
        const double u = next_double() * weights.sum();
        double acc = 0.0;
        for (Eigen::Index i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.size() - 1;
    }

    Eigen::VectorXd uniform_vector(Eigen::Index n, double lo, double hi) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
        return v;
    }

    /// Approximately standard normal entries (sum of 12 uniforms minus 6;
    /// adequate for generating test matrices, not for tail statistics).
    Eigen::MatrixXd gaussian_like_matrix(Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r) {
                double s = 0.0;
                for (int t = 0; t < 12; ++t) s += next_double();
                m(r, c) = s - 6.0;
            }
        return m;
    }

private:
    static u64 mulhi(u64 a, u64 b) {
        return static_cast<u64>((static_cast<__uint128_t>(a) * b) >> 64);
    }

    void increment() {
        for (auto& word : ctr_)
            if (++word != 0) break;  // 256-bit little-endian increment
    }

    std::array<u64, 2> key_;
    std::array<u64, 4> ctr_{};
    std::array<u64, 4> buf_{};
    int pos_ = 4;
};

}  // namespace gmlab
