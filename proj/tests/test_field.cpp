#include "gffdrift/field.hpp"
#include "gffdrift/mollifier.hpp"
#include "gffdrift/numerics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <stdexcept>

using namespace gffdrift;

namespace {

constexpr double kPi = std::numbers::pi;

MollifierSpec bump(double eps) { return make_mollifier(MollifierKind::compact_bump, eps); }

}  // namespace

TEST(Mollifier, ProfileValues) {
    const auto m = bump(0.2);
    EXPECT_EQ(m.rho_hat(0.0), 1.0);
    EXPECT_NEAR(m.rho_hat(0.5), 0.716531310573789250, 1e-15);
    EXPECT_EQ(m.v_hat(1.0), 0.0);
    EXPECT_EQ(m.v_hat(3.0), 0.0);
    EXPECT_NEAR(m.v_hat_eps(2.5), m.v_hat(0.5), 1e-15);
    EXPECT_NEAR(m.second_moment(), 0.138671383111777415, 1e-13);
    EXPECT_FALSE(m.support_warning);
    EXPECT_TRUE(make_mollifier(MollifierKind::gaussian_reference, 0.2).support_warning);
    EXPECT_THROW(make_mollifier(MollifierKind::compact_bump, 0.0), std::invalid_argument);
    EXPECT_THROW(make_mollifier(MollifierKind::compact_bump, 1.5), std::invalid_argument);
    EXPECT_EQ(mollifier_kind_from_string(to_string(MollifierKind::gaussian_reference)), MollifierKind::gaussian_reference);
    EXPECT_THROW(mollifier_kind_from_string("tophat"), std::invalid_argument);
}

TEST(Grid, DefaultsAndValidation) {
    const GridSpec g = default_grid(0.1, 10.0, 1.0);
    EXPECT_NEAR(g.box_length, 10.0 * std::sqrt(10.0), 1e-12);
    EXPECT_EQ(g.grid_n, 4096u);
    EXPECT_LE(g.spacing(), 0.1 / 8.0);
    EXPECT_EQ(default_grid(0.4, 1e-6, 1.0).box_length, 6.4);
    EXPECT_THROW((GridSpec{1.0, 100}).validate(), std::invalid_argument);
    EXPECT_THROW((GridSpec{0.0, 64}).validate(), std::invalid_argument);
    EXPECT_THROW((GridSpec{6.4, 128}).validate_for(bump(0.2)), std::invalid_argument);
    EXPECT_NO_THROW((GridSpec{6.4, 256}).validate_for(bump(0.2)));
}

TEST(Covariance, OneDimensionalOracleAtZeroLag) {
    const auto m = bump(0.2);
    const Mat2 c = theoretical_covariance(m, {0.0, 0.0});
    EXPECT_NEAR(c[0][0], 10.8912249611773912, 1e-9);
    EXPECT_NEAR(c[1][1], 10.8912249611773912, 1e-9);
    EXPECT_EQ(c[0][1], 0.0);
}

// Direct polar quadrature of int d^2p V-hat_eps(p) (I - p p^T/|p|^2) cos(p . lag),
// which avoids the Bessel reduction.
TEST(Covariance, MatchesDirectSpectralIntegral) {
    const auto m = bump(0.2);
    const Vec2 lag{0.1, 0.05};
    const Mat2 c = theoretical_covariance(m, lag);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            auto ring = [&](double theta) {
                const double u1 = std::cos(theta), u2 = std::sin(theta);
                const double proj = (i == j ? 1.0 : 0.0) - (i == 0 ? u1 : u2) * (j == 0 ? u1 : u2);
                return integrate(
                           [&](double p) { return p * m.v_hat_eps(p) * proj * std::cos(p * (u1 * lag[0] + u2 * lag[1])); },
                           0.0, 1.0 / m.eps, 1e-11, 4000, 1e-12)
                    .value;
            };
            const double v = integrate(ring, 0.0, 2.0 * kPi, 1e-10, 4000, 1e-11).value;
            EXPECT_NEAR(c[i][j], v, 1e-7) << i << j;
        }
    EXPECT_NEAR(c[0][1], c[1][0], 0.0);
}

TEST(Covariance, RotationCovariant) {
    const auto m = bump(0.3);
    const double a = 0.7;
    const Vec2 lag{0.2, 0.0};
    const Vec2 rot{0.2 * std::cos(a), 0.2 * std::sin(a)};
    const Mat2 c0 = theoretical_covariance(m, lag);
    const Mat2 c1 = theoretical_covariance(m, rot);
    const double R[2][2] = {{std::cos(a), -std::sin(a)}, {std::sin(a), std::cos(a)}};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double v = 0.0;
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) v += R[i][k] * c0[k][l] * R[j][l];
            EXPECT_NEAR(c1[i][j], v, 1e-9);
        }
}

TEST(Synthesis, PlaneWavesLandOnTheGrid) {
    SpectralField f;
    f.spec = GridSpec{2.0, 16};
    const std::complex<double> I(0.0, 1.0);
    // omega_1 = cos(2 pi x / L), omega_2 = -0.5 sin(4 pi y / L)
    synthesize(f, {{1, 0, 0.5, 0.0}, {0, 2, 0.0, 0.25 * I}});
    const double h = f.spec.spacing();
    for (std::size_t iy = 0; iy < 16; ++iy)
        for (std::size_t ix = 0; ix < 16; ++ix) {
            const double x = h * ix, y = h * iy;
            EXPECT_NEAR(f.node(ix, iy)[0], std::cos(kPi * x), 1e-14);
            EXPECT_NEAR(f.node(ix, iy)[1], -0.5 * std::sin(2.0 * kPi * y), 1e-14);
        }
    EXPECT_NEAR(f.max_norm, std::sqrt(1.25), 0.05);
    EXPECT_THROW(synthesize(f, {{8, 0, 1.0, 0.0}}), std::invalid_argument);
}

TEST(Sampling, DivergenceFreeAndReproducible) {
    const auto m = bump(0.2);
    const GridSpec g{6.4, 256};
    const auto modes = draw_modes(g, m, 5);
    ASSERT_FALSE(modes.empty());
    for (const auto& md : modes) {
        const double pn = 2.0 * kPi / g.box_length * std::hypot(md.kx, md.ky);
        EXPECT_LT(m.eps * pn, 1.0);
        EXPECT_TRUE(md.ky > 0 || md.kx > 0);
    }
    EXPECT_LE(fourier_divergence(modes, g.box_length), 1e-12);
    const auto a = sample_field(g, m, 5);
    const auto b = sample_field(g, m, 5);
    const auto c = sample_field(g, m, 6);
    EXPECT_EQ(a.values, b.values);
    EXPECT_NE(a.values, c.values);
    EXPECT_LE(a.fourier_divergence_max, 1e-12);
    // mean over the torus is zero because the p = 0 mode is absent
    double s0 = 0.0, s1 = 0.0;
    for (const auto& v : a.values) {
        s0 += v[0];
        s1 += v[1];
    }
    EXPECT_NEAR(s0 / a.values.size(), 0.0, 1e-12);
    EXPECT_NEAR(s1 / a.values.size(), 0.0, 1e-12);
}

TEST(Sampling, DiscreteDivergenceVanishesSpectrally) {
    // central differences are not exact, but the spectral derivative is: check that
    // the finite-difference divergence is small relative to the gradient scale
    const auto m = bump(0.2);
    const GridSpec g{6.4, 512};
    const auto f = sample_field(g, m, 11);
    const std::size_t n = g.grid_n;
    const double h = g.spacing();
    double div2 = 0.0, grad2 = 0.0;
    for (std::size_t iy = 0; iy < n; iy += 3)
        for (std::size_t ix = 0; ix < n; ix += 3) {
            const auto& xp = f.node((ix + 1) % n, iy);
            const auto& xm = f.node((ix + n - 1) % n, iy);
            const auto& yp = f.node(ix, (iy + 1) % n);
            const auto& ym = f.node(ix, (iy + n - 1) % n);
            const double d1 = (xp[0] - xm[0]) / (2 * h), d2 = (yp[1] - ym[1]) / (2 * h);
            div2 += (d1 + d2) * (d1 + d2);
            grad2 += d1 * d1 + d2 * d2;
        }
    EXPECT_LT(std::sqrt(div2 / grad2), 0.05);
}

TEST(Interpolation, NodesPeriodicityAndOrder) {
    SpectralField f;
    f.spec = GridSpec{1.0, 32};
    synthesize(f, {{1, 1, 0.5, 0.0}});
    const double L = f.spec.box_length;
    const Vec2 at_node = eval_field(f, {3 * f.spec.spacing(), 5 * f.spec.spacing()});
    EXPECT_EQ(at_node, f.node(3, 5));
    const Vec2 x{0.3137, 0.7713};
    for (auto interp : {Interp::bilinear, Interp::bicubic}) {
        const Vec2 a = eval_field(f, x, interp);
        const Vec2 b = eval_field(f, {x[0] + L, x[1] - 2 * L}, interp);
        EXPECT_NEAR(a[0], b[0], 1e-12);
        EXPECT_NEAR(a[1], b[1], 1e-12);
    }
    const double exact = std::cos(2.0 * kPi * (x[0] + x[1]));
    const double e_lin = std::abs(eval_field(f, x, Interp::bilinear)[0] - exact);
    const double e_cub = std::abs(eval_field(f, x, Interp::bicubic)[0] - exact);
    EXPECT_LT(e_cub, e_lin);
    EXPECT_LT(e_lin, 0.02);
}

TEST(Covariance, EmpiricalAgreesWithTheory) {
    const auto m = bump(0.2);
    const GridSpec g{6.4, 256};
    const std::vector<Vec2> lags{{0.0, 0.0}, {0.1, 0.05}};
    const auto emp = empirical_covariance(400, g, m, lags, 99);
    EXPECT_LE(emp.divergence_max, 1e-12);
    ASSERT_EQ(emp.pooled.size(), 2u);
    ASSERT_EQ(emp.per_base.size(), 4u);
    for (const auto& e : emp.pooled) {
        const Mat2 th = theoretical_covariance(m, e.lag);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) EXPECT_LE(std::abs(e.mean[i][j] - th[i][j]), 4.0 * e.sem[i][j]) << i << j;
        EXPECT_LE(std::abs(e.diag_diff_mean), 4.0 * e.diag_diff_sem);
    }
    const auto again = empirical_covariance(400, g, m, lags, 99, {}, 2);
    EXPECT_EQ(again.pooled[1].mean, emp.pooled[1].mean);
}

TEST(Snapshot, RoundTrip) {
    const auto m = make_mollifier(MollifierKind::gaussian_reference, 0.25);
    const auto f = sample_field(GridSpec{4.0, 256}, m, 31);
    const auto path = (std::filesystem::temp_directory_path() / "gffdrift_snapshot_test.bin").string();
    write_snapshot(f, path);
    EXPECT_EQ(std::filesystem::file_size(path), 8u + 4 + 4 + 8 + 8 + 8 + 8 + 256u * 256u * 16u);
    const auto g = read_snapshot(path);
    EXPECT_EQ(g.values, f.values);
    EXPECT_EQ(g.seed, 31u);
    EXPECT_EQ(g.spec.grid_n, 256u);
    EXPECT_EQ(g.spec.box_length, 4.0);
    EXPECT_EQ(g.mollifier.kind, MollifierKind::gaussian_reference);
    EXPECT_EQ(g.mollifier.eps, 0.25);
    EXPECT_EQ(g.max_norm, f.max_norm);
    std::filesystem::remove(path);
    EXPECT_THROW(read_snapshot(path), std::runtime_error);
}
