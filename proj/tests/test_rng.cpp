#include <doctest.h>

#include <array>
#include <cstdint>
#include <vector>

#include "gmlab/rng.hpp"

using gmlab::CounterRng;
using u64 = std::uint64_t;

// Reference vectors for the Philox4x64-10 block function, as published with
// the original counter-based-RNG test suite.
TEST_CASE("philox block known answers") {
    {
        const auto out = CounterRng::block({0, 0, 0, 0}, {0, 0});
        CHECK(out[0] == 0x16554d9eca36314cull);
        CHECK(out[1] == 0xdb20fe9d672d0fdcull);
        CHECK(out[2] == 0xd7e772cee186176bull);
        CHECK(out[3] == 0x7e68b68aec7ba23bull);
    }
    {
        const u64 f = ~0ull;
        const auto out = CounterRng::block({f, f, f, f}, {f, f});
        CHECK(out[0] == 0x87b092c3013fe90bull);
        CHECK(out[1] == 0x438c3c67be8d0224ull);
        CHECK(out[2] == 0x9cc7d7c69cd777b6ull);
        CHECK(out[3] == 0xa09caebf594f0ba0ull);
    }
}

// Cross-validation against an external Philox implementation that starts
// emitting at counter 1: our outputs 4..7 must match its first block.
TEST_CASE("philox stream matches external implementation at counter 1") {
    {
        CounterRng r(0xDEADBEEFull, 7);
        for (int skip = 0; skip < 4; ++skip) (void)r.next_u64();
        const u64 expect[8] = {0x2f38dff29eecd0c2ull, 0xd496082438a471b9ull,
                               0xe725ec4612cd9616ull, 0x3799182d12a082d9ull,
                               0xa144229e1d2b8ed4ull, 0xc95c0f42779ddbcaull,
                               0x7b48ad3af5423e3full, 0x6b5f44e05321c5f0ull};
        for (int i = 0; i < 8; ++i) CHECK(r.next_u64() == expect[i]);
    }
    {
        CounterRng r(0x6D61726Bull, 0);
        for (int skip = 0; skip < 4; ++skip) (void)r.next_u64();
        CHECK(r.next_u64() == 0x4da1a9b410f31780ull);
        CHECK(r.next_u64() == 0x4b1e146bf5a0cb99ull);
        CHECK(r.next_u64() == 0xb2a165b992ed1f00ull);
        CHECK(r.next_u64() == 0x69c756747e3bd4d6ull);
    }
    {
        const u64 f = ~0ull;
        CounterRng r(f, f);
        for (int skip = 0; skip < 4; ++skip) (void)r.next_u64();
        CHECK(r.next_u64() == 0x6d46cc0e71f0be7eull);
        CHECK(r.next_u64() == 0x924ea1693f9a8bc0ull);
        CHECK(r.next_u64() == 0xfdc35f0198c91181ull);
        CHECK(r.next_u64() == 0xb4a311f17aa6568dull);
    }
}

TEST_CASE("first buffered outputs come from counter zero") {
    CounterRng r(0, 0);
    const auto blk = CounterRng::block({0, 0, 0, 0}, {0, 0});
    for (int i = 0; i < 4; ++i) CHECK(r.next_u64() == blk[i]);
    const auto blk1 = CounterRng::block({1, 0, 0, 0}, {0, 0});
    for (int i = 0; i < 4; ++i) CHECK(r.next_u64() == blk1[i]);
}

TEST_CASE("streams are reproducible and distinct") {
    CounterRng a(42, 3), b(42, 3), c(42, 4);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 64; ++i) {
        const u64 va = a.next_u64();
        all_equal = all_equal && (va == b.next_u64());
        any_diff = any_diff || (va != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("derived draws stay in range") {
    CounterRng r(7, 0);
    for (int i = 0; i < 2000; ++i) {
        const double d = r.next_double();
        CHECK(d >= 0.0);
        CHECK(d < 1.0);
        const double u = r.uniform(-2.5, 1.5);
        CHECK(u >= -2.5);
        CHECK(u <= 1.5);
        const auto z = r.uniform_int(-3, 3);
        CHECK(z >= -3);
        CHECK(z <= 3);
    }
}

TEST_CASE("uniform_int covers its range without bias spikes") {
    CounterRng r(11, 0);
    std::array<int, 7> counts{};
    const int reps = 70000;
    for (int i = 0; i < reps; ++i) counts[static_cast<std::size_t>(r.uniform_int(-3, 3) + 3)]++;
    for (const int c : counts) {
        CHECK(c > reps / 7 - 1500);
        CHECK(c < reps / 7 + 1500);
    }
}

TEST_CASE("categorical respects the weight vector") {
    CounterRng r(13, 0);
    Eigen::VectorXd w(3);
    w << 0.5, 0.25, 0.25;
    std::array<int, 3> counts{};
    const int reps = 40000;
    for (int i = 0; i < reps; ++i) counts[static_cast<std::size_t>(r.categorical(w))]++;
    CHECK(counts[0] > reps / 2 - 1200);
    CHECK(counts[0] < reps / 2 + 1200);
    CHECK(counts[1] > reps / 4 - 1200);
    CHECK(counts[1] < reps / 4 + 1200);
}

TEST_CASE("vector and matrix helpers have the right shape and spread") {
    CounterRng r(17, 0);
    const Eigen::VectorXd v = r.uniform_vector(9, -1.0, 1.0);
    CHECK(v.size() == 9);
    CHECK(v.cwiseAbs().maxCoeff() <= 1.0);
    const Eigen::MatrixXd m = r.gaussian_like_matrix(40, 40);
    CHECK(m.rows() == 40);
    // Sum-of-12-uniforms draws: mean near 0, variance near 1.
    const double mean = m.mean();
    const double var = (m.array() - mean).square().mean();
    CHECK(std::abs(mean) < 0.1);
    CHECK(var > 0.8);
    CHECK(var < 1.2);
}
