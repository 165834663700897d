#include "gffdrift/numerics.hpp"
#include "gffdrift/parallel.hpp"
#include "gffdrift/rng.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

using namespace gffdrift;

TEST(CompensatedSum, RecoversSmallTermsBesideLargeOnes) {
    CompensatedSum s;
    s.add(1e16);
    for (int i = 0; i < 1000; ++i) s.add(1.0);
    s.add(-1e16);
    EXPECT_EQ(s.value(), 1000.0);
}

TEST(PairwiseSum, MatchesExactIntegerSum) {
    std::vector<double> v(10007);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    EXPECT_EQ(pairwise_sum(v), 10006.0 * 10007.0 / 2.0);
    EXPECT_EQ(pairwise_sum(std::span<const double>{}), 0.0);
}

TEST(CumulativeIntegral, ExactOnCubics) {
    const double h = 0.01;
    std::vector<double> f(201);
    for (std::size_t k = 0; k < f.size(); ++k) {
        const double x = h * k;
        f[k] = 3.0 * x * x - 2.0 * x + 1.0 + x * x * x;
    }
    const auto F = cumulative_integral(f, h);
    ASSERT_EQ(F.size(), f.size());
    EXPECT_EQ(F[0], 0.0);
    for (std::size_t k = 0; k < F.size(); ++k) {
        const double x = h * k;
        EXPECT_NEAR(F[k], x * x * x - x * x + x + 0.25 * x * x * x * x, 1e-13);
    }
}

TEST(CumulativeIntegral, FourthOrderOnExponential) {
    auto err = [](int n) {
        const double h = 1.0 / n;
        std::vector<double> f(n + 1);
        for (int k = 0; k <= n; ++k) f[k] = std::exp(h * k);
        return std::abs(cumulative_integral(f, h).back() - (std::exp(1.0) - 1.0));
    };
    const double ratio = err(32) / err(64);
    EXPECT_GT(ratio, 12.0);
    EXPECT_LT(ratio, 20.0);
}

TEST(MeanSem, KnownSample) {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const auto ms = mean_sem(v);
    EXPECT_DOUBLE_EQ(ms.mean, 2.5);
    EXPECT_NEAR(ms.sem, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
    EXPECT_EQ(ms.n, 4u);
    EXPECT_THROW(mean_sem(std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Integrate, SmoothAndPeakedIntegrands) {
    const auto a = integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, 1e-13, 100);
    EXPECT_NEAR(a.value, 2.0, 1e-13);
    // Lorentzian of width 1e-6: value atan(1e6) * 2 / 1e-6 * 1e-6
    const double w = 1e-6;
    const auto b = integrate([w](double x) { return w / (w * w + x * x); }, -1.0, 1.0, 1e-10, 4000);
    EXPECT_NEAR(b.value, 2.0 * std::atan(1.0 / w), 1e-9);
    EXPECT_LE(b.error, 1e-10 * b.value);
}

TEST(Integrate, ThrowsWhenPanelBudgetExhausted) {
    EXPECT_THROW(integrate([](double x) { return 1.0 / std::sqrt(std::abs(x) + 1e-300); }, -1.0, 1.0, 1e-14, 3),
                 std::runtime_error);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
    auto a = make_stream(42, 7, StreamTag::field);
    auto b = make_stream(42, 7, StreamTag::field);
    auto c = make_stream(42, 7, StreamTag::noise);
    auto d = make_stream(42, 8, StreamTag::field);
    const auto va = a(), vb = b(), vc = c(), vd = d();
    EXPECT_EQ(va, vb);
    EXPECT_NE(va, vc);
    EXPECT_NE(va, vd);
    EXPECT_EQ(stream_seed(1, 2, StreamTag::aux), stream_seed(1, 2, StreamTag::aux));
    EXPECT_NE(stream_seed(1, 2, StreamTag::aux), stream_seed(2, 1, StreamTag::aux));
}

TEST(Rng, IndependentStreamsAreUncorrelated) {
    const int n = 20000;
    std::vector<double> prod(n);
    for (int i = 0; i < n; ++i) {
        auto a = make_stream(9, static_cast<std::uint64_t>(i), StreamTag::noise);
        auto b = make_stream(9, static_cast<std::uint64_t>(i) + 1, StreamTag::noise);
        std::normal_distribution<double> g;
        prod[i] = g(a) * g(b);
    }
    const auto ms = mean_sem(prod);
    EXPECT_LT(std::abs(ms.mean), 4.0 * ms.sem);
}

TEST(ParallelFor, VisitsEveryIndexOnceAndRethrows) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), 3, [&](unsigned, std::size_t i) { hits[i]++; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    EXPECT_THROW(parallel_for(10, 2,
                              [](unsigned, std::size_t i) {
                                  if (i == 5) throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
}
