#include "gffdrift/field.hpp"

#include "gffdrift/numerics.hpp"
#include "gffdrift/parallel.hpp"
#include "gffdrift/rng.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <tuple>

namespace gffdrift {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// FFTW planning is not thread-safe; execution with new arrays is.
class PlanCache {
public:
    ~PlanCache() {
        for (auto& [k, p] : plans_) fftw_destroy_plan(p);
    }

    fftw_plan get(int n, int howmany, int stride, int dist, fftw_complex* buf) {
        std::lock_guard<std::mutex> lk(mu_);
        const auto key = std::make_tuple(n, howmany, stride, dist);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        fftw_plan p = fftw_plan_many_dft(1, &n, howmany, buf, nullptr, stride, dist, buf, nullptr,
                                         stride, dist, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) throw std::runtime_error("fftw: plan creation failed");
        plans_.emplace(key, p);
        return p;
    }

private:
    std::mutex mu_;
    std::map<std::tuple<int, int, int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

int spectral_kmax(const GridSpec& g, const MollifierSpec& m) {
    return static_cast<int>(std::floor(m.support_radius() * g.box_length / (kTwoPi * m.eps)));
}

std::size_t wrap_index(double s, std::size_t n, double& frac) {
    const double fl = std::floor(s);
    frac = s - fl;
    long long k = static_cast<long long>(fl) % static_cast<long long>(n);
    if (k < 0) k += static_cast<long long>(n);
    return static_cast<std::size_t>(k);
}

template <class T>
void put(std::ofstream& os, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
    unsigned char b[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw std::runtime_error("snapshot: truncated file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

}  // namespace

void GridSpec::validate() const {
    if (!(box_length > 0.0) || !std::isfinite(box_length)) throw std::invalid_argument("grid: box_length must be > 0");
    if (grid_n < 4 || !std::has_single_bit(grid_n)) throw std::invalid_argument("grid: grid_n must be a power of two >= 4");
}

void GridSpec::validate_for(const MollifierSpec& m) const {
    validate();
    if (spacing() > m.eps / 8.0 * (1.0 + 1e-12))
        throw std::invalid_argument("grid too coarse: spacing " + std::to_string(spacing()) +
                                    " exceeds eps/8 = " + std::to_string(m.eps / 8.0));
    if (2 * static_cast<std::size_t>(spectral_kmax(*this, m)) + 1 >= grid_n)
        throw std::invalid_argument("grid: spectral support does not fit in the grid");
}

std::size_t next_pow2(std::size_t n) {
    return std::bit_ceil(std::max<std::size_t>(n, 1));
}

GridSpec default_grid(double eps, double variance_rate, double t_final) {
    GridSpec g;
    g.box_length = std::max(10.0 * std::sqrt(variance_rate * t_final), 16.0 * eps);
    g.grid_n = std::max<std::size_t>(next_pow2(static_cast<std::size_t>(std::ceil(8.0 * g.box_length / eps))), 16);
    return g;
}

std::vector<FourierMode> draw_modes(const GridSpec& g, const MollifierSpec& m, std::uint64_t seed) {
    g.validate_for(m);
    auto rng = make_stream(seed, 0, StreamTag::field);
    std::normal_distribution<double> normal;
    const int kmax = spectral_kmax(g, m);
    const double dp = kTwoPi / g.box_length;
    const double r_support = m.support_radius();
    std::vector<FourierMode> modes;
    for (int ky = 0; ky <= kmax; ++ky) {
        for (int kx = -kmax; kx <= kmax; ++kx) {
            if (ky == 0 && kx <= 0) continue;
            const double p1 = dp * kx, p2 = dp * ky;
            const double pn = std::hypot(p1, p2);
            if (m.eps * pn >= r_support) continue;
            const double sigma = dp * std::sqrt(m.v_hat_eps(pn));
            const double a = normal(rng);
            const double b = normal(rng);
            const std::complex<double> psi = sigma * std::numbers::sqrt2 / 2.0 * std::complex<double>(a, b);
            // omega-hat = i psi u, u = (p2, -p1)/|p|
            const std::complex<double> ipsi = std::complex<double>(0.0, 1.0) * psi;
            modes.push_back({kx, ky, ipsi * (p2 / pn), ipsi * (-p1 / pn)});
        }
    }
    return modes;
}

double fourier_divergence(const std::vector<FourierMode>& modes, double box_length) {
    const double dp = kTwoPi / box_length;
    double worst = 0.0;
    for (const auto& md : modes) {
        const double p1 = dp * md.kx, p2 = dp * md.ky;
        const double wn = std::sqrt(std::norm(md.w1) + std::norm(md.w2));
        if (wn == 0.0) continue;
        const double div = std::abs(p1 * md.w1 + p2 * md.w2);
        worst = std::max(worst, div / (std::hypot(p1, p2) * wn));
    }
    return worst;
}

void synthesize(SpectralField& out, const std::vector<FourierMode>& modes) {
    const GridSpec& g = out.spec;
    g.validate();
    const std::size_t n = g.grid_n;
    const long long nn = static_cast<long long>(n);
    if (out.values.size() != n * n) {
        out.values.assign(n * n, Vec2{0.0, 0.0});
    } else {
        std::memset(static_cast<void*>(out.values.data()), 0, n * n * sizeof(Vec2));
    }
    auto* z = reinterpret_cast<fftw_complex*>(out.values.data());
    int kmax = 0;
    auto add = [&](long long kx, long long ky, std::complex<double> w) {
        const std::size_t ix = static_cast<std::size_t>(((kx % nn) + nn) % nn);
        const std::size_t iy = static_cast<std::size_t>(((ky % nn) + nn) % nn);
        auto& c = z[iy * n + ix];
        c[0] += w.real();
        c[1] += w.imag();
    };
    const std::complex<double> I(0.0, 1.0);
    for (const auto& md : modes) {
        if (2 * std::max(std::abs(md.kx), std::abs(md.ky)) + 1 >= static_cast<int>(n))
            throw std::invalid_argument("synthesize: mode outside the grid's band");
        kmax = std::max(kmax, std::abs(md.kx));
        // Z = w1 + i w2 packs both real components into one complex transform
        add(md.kx, md.ky, md.w1 + I * md.w2);
        add(-md.kx, -md.ky, std::conj(md.w1) + I * std::conj(md.w2));
    }
    const int ni = static_cast<int>(n);
    // columns along y: only |kx| <= kmax are nonzero
    fftw_execute_dft(plan_cache().get(ni, kmax + 1, ni, 1, z), z, z);
    if (kmax > 0) {
        fftw_complex* zb = z + (n - static_cast<std::size_t>(kmax));
        fftw_execute_dft(plan_cache().get(ni, kmax, ni, 1, zb), zb, zb);
    }
    // rows along x
    fftw_execute_dft(plan_cache().get(ni, ni, 1, ni, z), z, z);

    double m2 = 0.0;
    for (const auto& v : out.values) m2 = std::max(m2, v[0] * v[0] + v[1] * v[1]);
    out.max_norm = std::sqrt(m2);
    out.fourier_divergence_max = fourier_divergence(modes, g.box_length);
}

void sample_field_into(SpectralField& out, const GridSpec& g, const MollifierSpec& m, std::uint64_t seed) {
    const auto modes = draw_modes(g, m, seed);
    out.spec = g;
    out.mollifier = m;
    out.seed = seed;
    synthesize(out, modes);
}

SpectralField sample_field(const GridSpec& g, const MollifierSpec& m, std::uint64_t seed) {
    SpectralField f;
    sample_field_into(f, g, m, seed);
    return f;
}

Vec2 eval_field(const SpectralField& f, const Vec2& x, Interp interp) {
    const std::size_t n = f.spec.grid_n;
    const double h = f.spec.spacing();
    double tx, ty;
    const std::size_t ix = wrap_index(x[0] / h, n, tx);
    const std::size_t iy = wrap_index(x[1] / h, n, ty);
    if (interp == Interp::bilinear) {
        const std::size_t ix1 = ix + 1 == n ? 0 : ix + 1;
        const std::size_t iy1 = iy + 1 == n ? 0 : iy + 1;
        const Vec2& a = f.node(ix, iy);
        const Vec2& b = f.node(ix1, iy);
        const Vec2& c = f.node(ix, iy1);
        const Vec2& d = f.node(ix1, iy1);
        Vec2 r;
        for (int k = 0; k < 2; ++k)
            r[k] = (1.0 - ty) * ((1.0 - tx) * a[k] + tx * b[k]) + ty * ((1.0 - tx) * c[k] + tx * d[k]);
        return r;
    }
    // Catmull-Rom
    auto weights = [](double t) {
        const double t2 = t * t, t3 = t2 * t;
        return std::array<double, 4>{0.5 * (-t3 + 2.0 * t2 - t), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
                                     0.5 * (-3.0 * t3 + 4.0 * t2 + t), 0.5 * (t3 - t2)};
    };
    const auto wx = weights(tx), wy = weights(ty);
    Vec2 r{0.0, 0.0};
    for (int j = 0; j < 4; ++j) {
        const std::size_t yy = (iy + n + j - 1) % n;
        for (int i = 0; i < 4; ++i) {
            const std::size_t xx = (ix + n + i - 1) % n;
            const Vec2& v = f.node(xx, yy);
            r[0] += wx[i] * wy[j] * v[0];
            r[1] += wx[i] * wy[j] * v[1];
        }
    }
    return r;
}

Mat2 theoretical_covariance(const MollifierSpec& m, const Vec2& lag, double rel_tol) {
    const double ell = std::hypot(lag[0], lag[1]);
    const double alpha = std::atan2(lag[1], lag[0]);
    const double pi = std::numbers::pi;
    const double e2 = m.eps * m.eps;
    const double r = m.support_radius();
    const double scale = m.second_moment();
    // s = eps |p|
    const double j0 = integrate(
        [&](double s) { return s * m.v_hat(s) * std::cyl_bessel_j(0.0, s * ell / m.eps); }, 0.0, r,
        rel_tol, 1 << 14, rel_tol * scale).value;
    double j2 = 0.0;
    if (ell > 0.0)
        j2 = integrate(
            [&](double s) { return s * m.v_hat(s) * std::cyl_bessel_j(2.0, s * ell / m.eps); }, 0.0, r,
            rel_tol, 1 << 14, rel_tol * scale).value;
    const double c2 = std::cos(2.0 * alpha), s2 = std::sin(2.0 * alpha);
    Mat2 c;
    c[0][0] = pi / e2 * (j0 + c2 * j2);
    c[1][1] = pi / e2 * (j0 - c2 * j2);
    c[0][1] = c[1][0] = pi / e2 * s2 * j2;
    return c;
}

EmpiricalCovariance empirical_covariance(std::size_t n_fields, const GridSpec& g,
                                         const MollifierSpec& m, const std::vector<Vec2>& lags,
                                         std::uint64_t seed, std::vector<Vec2> base_points,
                                         unsigned threads) {
    if (n_fields < 2) throw std::invalid_argument("empirical_covariance: n_fields must be >= 2");
    g.validate_for(m);
    if (base_points.empty()) {
        const double half = g.spacing() * static_cast<double>(g.grid_n / 2);
        base_points = {{0.0, 0.0}, {half, 0.0}, {0.0, half}, {half, half}};
    }
    const std::size_t nb = base_points.size(), nl = lags.size();
    // samples[d][b][l][0..4] = w1 w1', w1 w2', w2 w1', w2 w2', w1 w1' - w2 w2'
    const std::size_t stride = nb * nl * 5;
    std::vector<double> samples(n_fields * stride);
    std::vector<double> divergence(n_fields);
    std::vector<SpectralField> work(std::max(1u, threads));
    parallel_for(n_fields, threads, [&](unsigned w, std::size_t d) {
        SpectralField& f = work[w];
        sample_field_into(f, g, m, stream_seed(seed, d, StreamTag::field));
        divergence[d] = f.fourier_divergence_max;
        double* out = samples.data() + d * stride;
        for (std::size_t b = 0; b < nb; ++b) {
            const Vec2 v0 = eval_field(f, base_points[b]);
            for (std::size_t l = 0; l < nl; ++l) {
                const Vec2 v1 = eval_field(f, {base_points[b][0] + lags[l][0], base_points[b][1] + lags[l][1]});
                double* o = out + (b * nl + l) * 5;
                o[0] = v0[0] * v1[0];
                o[1] = v0[0] * v1[1];
                o[2] = v0[1] * v1[0];
                o[3] = v0[1] * v1[1];
                o[4] = o[0] - o[3];
            }
        }
    });

    EmpiricalCovariance res;
    res.base_points = base_points;
    res.n_fields = n_fields;
    res.divergence_max = *std::max_element(divergence.begin(), divergence.end());
    std::vector<double> col(n_fields);
    auto reduce = [&](const Vec2& lag, auto&& value_of) {
        CovarianceEntry e;
        e.lag = lag;
        for (int q = 0; q < 5; ++q) {
            for (std::size_t d = 0; d < n_fields; ++d) col[d] = value_of(d, q);
            const MeanSem ms = mean_sem(col);
            if (q < 4) {
                e.mean[q / 2][q % 2] = ms.mean;
                e.sem[q / 2][q % 2] = ms.sem;
            } else {
                e.diag_diff_mean = ms.mean;
                e.diag_diff_sem = ms.sem;
            }
        }
        return e;
    };
    res.per_base.resize(nb);
    for (std::size_t b = 0; b < nb; ++b)
        for (std::size_t l = 0; l < nl; ++l)
            res.per_base[b].push_back(reduce(lags[l], [&](std::size_t d, int q) {
                return samples[d * stride + (b * nl + l) * 5 + q];
            }));
    for (std::size_t l = 0; l < nl; ++l)
        res.pooled.push_back(reduce(lags[l], [&](std::size_t d, int q) {
            double s = 0.0;
            for (std::size_t b = 0; b < nb; ++b) s += samples[d * stride + (b * nl + l) * 5 + q];
            return s / static_cast<double>(nb);
        }));
    return res;
}

void write_snapshot(const SpectralField& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("snapshot: cannot open " + path);
    os.write("GFFFIELD", 8);
    put<std::uint32_t>(os, 1);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(f.mollifier.kind));
    put<double>(os, f.spec.box_length);
    put<std::uint64_t>(os, f.spec.grid_n);
    put<double>(os, f.mollifier.eps);
    put<std::uint64_t>(os, f.seed);
    for (const auto& v : f.values) {
        put<double>(os, v[0]);
        put<double>(os, v[1]);
    }
    if (!os) throw std::runtime_error("snapshot: write failed for " + path);
}

SpectralField read_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("snapshot: cannot open " + path);
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, "GFFFIELD", 8) != 0)
        throw std::runtime_error("snapshot: bad magic in " + path);
    if (get<std::uint32_t>(is) != 1) throw std::runtime_error("snapshot: unsupported version");
    SpectralField f;
    const auto kind = get<std::uint32_t>(is);
    if (kind > 1) throw std::runtime_error("snapshot: unknown mollifier kind");
    f.spec.box_length = get<double>(is);
    f.spec.grid_n = get<std::uint64_t>(is);
    const double eps = get<double>(is);
    f.mollifier = make_mollifier(static_cast<MollifierKind>(kind), eps);
    f.seed = get<std::uint64_t>(is);
    f.spec.validate();
    f.values.resize(f.spec.grid_n * f.spec.grid_n);
    double m2 = 0.0;
    for (auto& v : f.values) {
        v[0] = get<double>(is);
        v[1] = get<double>(is);
        m2 = std::max(m2, v[0] * v[0] + v[1] * v[1]);
    }
    f.max_norm = std::sqrt(m2);
    return f;
}

}  // namespace gffdrift
