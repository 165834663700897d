#include "gffdrift/analytic.hpp"
#include "gffdrift/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

using namespace gffdrift;

namespace {

constexpr double kPi = std::numbers::pi;

ModelParams unit(double eps = 0.1) {
    ModelParams p;
    p.lambda_hat = 1.0;
    p.nu = 1.0;
    p.eps = eps;
    p.lambda = 1.0;
    return p;
}

}  // namespace

// Frozen oracle values from 30-digit evaluations of the closed forms.
TEST(Oracle, ClosedFormConstants) {
    const ModelParams p = unit();
    EXPECT_NEAR(l_eps(100.0, p), 0.472856811444065318, 1e-15);
    EXPECT_NEAR(g_closed(kPi, p), 1.02800482268060969, 1e-15);
    const auto d = effective_diffusivity(p);
    EXPECT_NEAR(d.c_sq, 8.22403858144487753, 1e-14);
    EXPECT_NEAR(d.c, 2.86775845939731778, 1e-14);
    EXPECT_NEAR(d.total_variance_rate, 10.2240385814448775, 1e-14);
    EXPECT_NEAR(s_closed(kPi, p), 5.11201929072243877, 1e-14);
    EXPECT_NEAR(laplace_limit(p), 8.22403858144487753, 1e-14);
}

TEST(Oracle, TabulatedRecursionMatchesClosedForms) {
    const ModelParams p = unit();
    const auto t = g_table(3, 2.0 * kPi, p);
    EXPECT_NEAR(t.at(3, kPi), 0.651898495376232023, 1e-12);
    for (double x : {0.0, 0.3, 1.7, kPi, 2.0 * kPi}) {
        EXPECT_EQ(t.at(1, x), 0.0);
        EXPECT_NEAR(t.at(2, x), x, 1e-14);
        EXPECT_NEAR(t.at(3, x), 0.25 * std::log1p(4.0 * x), 1e-12);
    }
}

TEST(Oracle, TruncatedLimits) {
    const ModelParams p = unit();
    EXPECT_NEAR(truncated_limit(1, p), 2.0 * kPi, 1e-12);
    EXPECT_NEAR(truncated_limit(2, p), 1.30379699075246405, 1e-11);
    EXPECT_NEAR(truncated_limit(60, p), 2.05600964536121938, 1e-10);
    ModelParams z = p;
    z.lambda_hat = 0.0;
    EXPECT_EQ(truncated_limit(3, z), 0.0);
}

TEST(LEps, ShapeAndErrors) {
    const ModelParams p = unit(0.01);
    EXPECT_THROW(l_eps(0.0, p), std::domain_error);
    EXPECT_GT(l_eps(1.0, p), l_eps(2.0, p));
    // large-x decay ~ pre / (eps^2 x)
    const double pre = kPi / (-2.0 * std::log(0.01));
    EXPECT_NEAR(l_eps(1e12, p) * 1e12 * 1e-4, pre * (1.0 - 0.5e-8), 1e-15);
}

TEST(GClosed, OdeResidualByFiniteDifferences) {
    for (double nu : {0.5, 1.0, 2.0}) {
        ModelParams p = unit();
        p.nu = nu;
        const double a = 4.0 / std::pow(nu, 4);
        for (double x = 0.05; x < 6.0; x += 0.37) {
            const double h = 1e-4;
            const double d = (-g_closed(x + 2 * h, p) + 8 * g_closed(x + h, p) - 8 * g_closed(x - h, p) +
                              g_closed(x - 2 * h, p)) / (12 * h);
            EXPECT_NEAR(d * (1.0 + a * g_closed(x, p)), 1.0, 1e-10);
        }
        EXPECT_EQ(g_closed(0.0, p), 0.0);
    }
}

TEST(GTable, InvariantsOnGrid) {
    ModelParams p = unit();
    p.nu = 0.8;
    const double a = 4.0 / std::pow(p.nu, 4);
    const auto t = g_table(12, 5.0, p);
    const double h = t.x_grid[1] - t.x_grid[0];
    for (int j = 1; j <= 12; ++j) {
        const auto& g = t.row(j);
        EXPECT_EQ(g[0], 0.0);
        for (std::size_t k = 0; k < g.size(); ++k) {
            EXPECT_GE(g[k], -1e-15);
            EXPECT_LE(g[k], t.x_grid[k] + 1e-12);
            if (k > 0) {
                const double d1 = (g[k] - g[k - 1]) / h;
                EXPECT_GE(d1, -1e-9);
                EXPECT_LE(d1, 1.0 + 1e-9);
            }
            if (k > 0 && k + 1 < g.size()) {
                const double d2 = (g[k + 1] - 2 * g[k] + g[k - 1]) / (h * h);
                EXPECT_LE(std::abs(d2), a * (1.0 + 1e-3) + 1e-6);
            }
        }
    }
}

TEST(GTable, BracketingAndCauchyRate) {
    const ModelParams p = unit();
    const auto t = g_table(40, kPi, p);
    for (std::size_t k = 0; k < t.size(); k += 7) {
        const double x = t.x_grid[k];
        const double g = g_closed(x, p);
        for (int j = 1; j <= 40; ++j) {
            if (j % 2 == 1) EXPECT_LE(t.row(j)[k], g + 1e-12);
            else EXPECT_GE(t.row(j)[k], g - 1e-12);
        }
        for (int n = 2; n <= 40; ++n) {
            const double bound = std::exp((n - 2) * std::log(4.0) + (n - 1) * std::log(std::max(x, 1e-300)) - std::lgamma(n));
            EXPECT_LE(std::abs(t.row(n)[k] - t.row(n - 1)[k]), bound + 1e-12);
        }
    }
    EXPECT_LE(std::abs(g_table(60, kPi, p).row(60).back() - g_closed(kPi, p)), 1e-6);
}

TEST(GTable, RefinementMeetsToleranceAndRejectsBadInput) {
    const ModelParams p = unit();
    const auto t = g_table(4, kPi, p, 16, 1e-12);
    EXPECT_GT(t.size(), 16u);
    EXPECT_NEAR(t.at(3, kPi), 0.25 * std::log1p(4.0 * kPi), 1e-11);
    EXPECT_THROW(t.at(3, -0.1), std::out_of_range);
    EXPECT_THROW(t.at(3, kPi * 1.01), std::out_of_range);
    EXPECT_THROW(t.at(5, 1.0), std::out_of_range);
    EXPECT_THROW(g_table(4, kPi, p, 16, 1e-30), std::runtime_error);
}

TEST(Identities, RandomParameterDraws) {
    auto rng = make_stream(123, 0, StreamTag::aux);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        ModelParams p;
        p.lambda_hat = 0.05 + 3.0 * u(rng);
        p.nu = 0.2 + 3.0 * u(rng);
        p.lambda = 0.1 + 5.0 * u(rng);
        p.eps = 1e-6 + 0.48 * u(rng);
        const double x = kPi * p.lambda_hat * p.lambda_hat;
        const double n2 = p.nu * p.nu;
        const double c2 = effective_diffusivity(p).c_sq;
        EXPECT_NEAR(p.lambda * p.lambda * laplace_limit(p) / c2, 1.0, 1e-10);
        EXPECT_NEAR(c2 / (2.0 * n2) / (s_closed(x, p) - 1.0), 1.0, 1e-10);
        EXPECT_NEAR(2.0 / n2 * g_closed(x, p) / (c2 / 4.0), 1.0, 1e-10);
    }
}

TEST(Diffusivity, ZeroCoupling) {
    ModelParams p = unit();
    p.lambda_hat = 0.0;
    p.nu = 1.7;
    const auto d = effective_diffusivity(p);
    EXPECT_EQ(d.c_sq, 0.0);
    EXPECT_DOUBLE_EQ(d.total_variance_rate, 2.0 * 1.7 * 1.7);
    EXPECT_EQ(laplace_limit(p), 0.0);
}

TEST(GPlus, BoundaryValuesAndIndexErrors) {
    const ModelParams p = unit();
    const auto t = g_plus_table(5, 3, 2.0, p);
    for (double x : {0.0, 0.5, 2.0}) EXPECT_EQ(t.at(0, x), 1.0);
    for (int i = 1; i <= 3; ++i) EXPECT_EQ(t.at(i, 0.0), 0.0);
    EXPECT_THROW(g_plus_table(3, 4, 1.0, p), std::out_of_range);
    EXPECT_THROW(g_plus_table(3, 0, 1.0, p), std::out_of_range);
}

// Monte Carlo over the ordered simplex 0 < y_1 < ... < y_i < x of the product
// of 4 / (1 + 4 G_k(y_k))^2, with n = j = 3 so G_k are G_1 = 0, G_2 = y, G_3 = log(1 + 4y)/4.
TEST(GPlus, SimplexMonteCarloOracle) {
    const ModelParams p = unit();
    const auto t = g_plus_table(3, 3, 1.0, p);
    auto G = [](int k, double y) {
        if (k == 1) return 0.0;
        if (k == 2) return y;
        return 0.25 * std::log1p(4.0 * y);
    };
    auto rng = make_stream(77, 0, StreamTag::aux);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 1; i <= 3; ++i) {
        const int n = 400000;
        double s = 0.0, s2 = 0.0;
        std::vector<double> y(i);
        for (int r = 0; r < n; ++r) {
            for (auto& v : y) v = u(rng);
            std::sort(y.begin(), y.end());
            double f = 1.0;
            for (int k = 1; k <= i; ++k) {
                const double d = 1.0 + 4.0 * G(k, y[k - 1]);
                f *= 4.0 / (d * d);
            }
            f /= std::tgamma(i + 1.0);  // simplex volume
            s += f;
            s2 += f * f;
        }
        const double mean = s / n;
        const double sem = std::sqrt((s2 / n - mean * mean) / (n - 1));
        EXPECT_NEAR(t.at(i, 1.0), mean, 4.0 * sem + 1e-12) << "i = " << i;
    }
    EXPECT_NEAR(t.at(1, 1.0), 4.0, 1e-12);
    EXPECT_NEAR(t.at(2, 1.0), 0.809437912434100375, 1e-10);
}

TEST(GPlus, BoundsForHigherIndices) {
    for (double nu : {0.7, 1.0, 1.5}) {
        ModelParams p = unit();
        p.nu = nu;
        const double a = 4.0 / std::pow(nu, 4);
        const auto t = g_plus_table(8, 6, kPi, p);
        for (std::size_t k = 0; k < t.size(); k += 11) {
            const double x = t.x_grid[k];
            for (int i = 1; i <= 6; ++i) {
                const double v = t.row(i)[k];
                EXPECT_LE(v, std::pow(a * x, i) / std::tgamma(i + 1.0) * (1 + 1e-12) + 1e-12);
                if (i >= 2) {
                    EXPECT_LE(v, std::pow(a, i - 1) * std::pow(x, i - 1) / std::tgamma(i) * (1 + 1e-12) + 1e-12);
                }
            }
        }
    }
}

TEST(SN, ConvergesToClosedForm) {
    const ModelParams p = unit();
    EXPECT_EQ(s_closed(0.0, p), 1.0);
    for (int n : {0, 3, 9}) EXPECT_NEAR(s_n(n, 0.0, p), 1.0, 1e-15);
    double prev = std::abs(s_n(2, kPi, p) - s_closed(kPi, p));
    for (int n = 3; n <= 40; ++n) {
        const double e = std::abs(s_n(n, kPi, p) - s_closed(kPi, p));
        if (prev > 1e-11) EXPECT_LT(e, prev) << "n = " << n;
        else EXPECT_LE(e, prev + 1e-12) << "n = " << n;
        prev = e;
    }
    EXPECT_LT(prev, 1e-11);
}
