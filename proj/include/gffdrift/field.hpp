#pragma once

#include "gffdrift/mollifier.hpp"

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace gffdrift {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

// Periodic box [0, L)^2 with N nodes per axis.
struct GridSpec {
    double box_length = 0.0;
    std::size_t grid_n = 0;

    double spacing() const { return box_length / static_cast<double>(grid_n); }
    // L > 0 and N a power of two
    void validate() const;
    // additionally h <= eps/8 and the spectral disc fits inside the grid
    void validate_for(const MollifierSpec& m) const;
};

std::size_t next_pow2(std::size_t n);

// L = 10 sqrt(variance_rate * t_final) (at least 16 eps), N = next power of two >= 8L/eps.
GridSpec default_grid(double eps, double variance_rate, double t_final);

enum class Interp { bilinear, bicubic };

// One half-plane Fourier coefficient of omega at p = (2 pi / L)(kx, ky).
// Its partner at -p is the complex conjugate.
struct FourierMode {
    int kx = 0;
    int ky = 0;
    std::complex<double> w1;
    std::complex<double> w2;
};

struct SpectralField {
    GridSpec spec;
    MollifierSpec mollifier;
    std::vector<Vec2> values;  // row-major, values[iy * N + ix]
    std::uint64_t seed = 0;
    double fourier_divergence_max = 0.0;
    double max_norm = 0.0;  // max |omega| over the nodes

    const Vec2& node(std::size_t ix, std::size_t iy) const { return values[iy * spec.grid_n + ix]; }
};

// Gaussian half-plane coefficients with covariance (2 pi/L)^2 V-hat_eps(p)(I - p p^T/|p|^2).
std::vector<FourierMode> draw_modes(const GridSpec& g, const MollifierSpec& m, std::uint64_t seed);

SpectralField sample_field(const GridSpec& g, const MollifierSpec& m, std::uint64_t seed);
// Same as sample_field but reuses out's storage.
void sample_field_into(SpectralField& out, const GridSpec& g, const MollifierSpec& m, std::uint64_t seed);

// Inverse transform of explicit half-plane modes onto out.spec's grid.
void synthesize(SpectralField& out, const std::vector<FourierMode>& modes);

// max |p . w(p)| / (|p| |w(p)|) over the modes
double fourier_divergence(const std::vector<FourierMode>& modes, double box_length);

// Periodic interpolation at an arbitrary position.
Vec2 eval_field(const SpectralField& f, const Vec2& x, Interp interp = Interp::bilinear);

// C_ij(lag) = E[omega_i(x) omega_j(x + lag)] by radial quadrature with Bessel kernels.
Mat2 theoretical_covariance(const MollifierSpec& m, const Vec2& lag, double rel_tol = 1e-10);

struct CovarianceEntry {
    Vec2 lag{};
    Mat2 mean{};
    Mat2 sem{};
    double diag_diff_mean = 0.0;  // C_11 - C_22, paired per draw
    double diag_diff_sem = 0.0;
};

struct EmpiricalCovariance {
    std::vector<Vec2> base_points;
    std::vector<CovarianceEntry> pooled;                 // [lag], averaged over base points per draw
    std::vector<std::vector<CovarianceEntry>> per_base;  // [base][lag]
    std::size_t n_fields = 0;
    double divergence_max = 0.0;
};

// Averages omega_i(x0) omega_j(x0 + lag) over n_fields independent draws. Draw d
// uses seed stream_seed(seed, d, field). Empty base_points picks four nodes.
EmpiricalCovariance empirical_covariance(std::size_t n_fields, const GridSpec& g,
                                         const MollifierSpec& m, const std::vector<Vec2>& lags,
                                         std::uint64_t seed, std::vector<Vec2> base_points = {},
                                         unsigned threads = 1);

// Binary snapshot: "GFFFIELD", u32 version, u32 kind, f64 L, u64 N, f64 eps,
// u64 seed, then N*N little-endian f64 pairs in row-major order.
void write_snapshot(const SpectralField& f, const std::string& path);
SpectralField read_snapshot(const std::string& path);

}  // namespace gffdrift
