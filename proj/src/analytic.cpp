#include "gffdrift/analytic.hpp"

#include "gffdrift/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gffdrift {

namespace {

using Rows = std::vector<std::vector<double>>;

double coef(const ModelParams& p) {
    const double n2 = p.nu * p.nu;
    return 4.0 / (n2 * n2);
}

std::vector<double> make_grid(double x_max, int m) {
    std::vector<double> x(m);
    const double h = x_max / (m - 1);
    for (int k = 0; k < m; ++k) x[k] = k * h;
    x[m - 1] = x_max;
    return x;
}

// rows[j - 1] = G_j
Rows build_g(int n_max, const std::vector<double>& x, double a) {
    const int m = static_cast<int>(x.size());
    const double h = x.back() / (m - 1);
    Rows rows;
    rows.reserve(n_max);
    rows.emplace_back(m, 0.0);
    if (n_max >= 2) rows.push_back(x);  // integrand of G_2 is exactly 1
    std::vector<double> f(m);
    for (int j = 3; j <= n_max; ++j) {
        const auto& prev = rows.back();
        for (int k = 0; k < m; ++k) f[k] = 1.0 / (1.0 + a * prev[k]);
        rows.push_back(cumulative_integral(f, h));
    }
    return rows;
}

// rows[i] = G_i^{+, n+1-j}, i = 0..j
Rows build_plus(const Rows& g, int n, int j, double h, double a) {
    const std::size_t m = g.front().size();
    Rows rows;
    rows.reserve(j + 1);
    rows.emplace_back(m, 1.0);
    std::vector<double> f(m);
    for (int i = 1; i <= j; ++i) {
        const auto& gi = g[n - j + i - 1];
        const auto& prev = rows.back();
        for (std::size_t k = 0; k < m; ++k) {
            const double d = 1.0 + a * gi[k];
            f[k] = a * prev[k] / (d * d);
        }
        rows.push_back(cumulative_integral(f, h));
    }
    return rows;
}

template <class Build>
AnalyticTable refine(Build&& build, double x_max, int grid_size, double tol, int first_index,
                     int max_index) {
    if (grid_size < 2) throw std::invalid_argument("grid_size must be >= 2");
    if (!(x_max > 0.0) || !std::isfinite(x_max)) throw std::invalid_argument("x_max must be > 0");
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be > 0");
    int m = grid_size;
    Rows coarse = build(make_grid(x_max, m));
    for (;;) {
        const int mf = 2 * m - 1;
        if (mf > kMaxGridSize)
            throw std::runtime_error("analytic table: tolerance " + std::to_string(tol) +
                                     " not met below the grid cap");
        auto grid = make_grid(x_max, mf);
        Rows fine = build(grid);
        double err = 0.0;
        for (std::size_t r = 0; r < fine.size(); ++r)
            for (int k = 0; k < m; ++k) {
                const double v = fine[r][2 * k];
                err = std::max(err, std::abs(v - coarse[r][k]) / 15.0 / std::max(1.0, std::abs(v)));
            }
        if (err <= tol) {
            AnalyticTable t;
            t.x_grid = std::move(grid);
            t.values = std::move(fine);
            t.first_index = first_index;
            t.max_index = max_index;
            t.tolerance = tol;
            return t;
        }
        coarse = std::move(fine);
        m = mf;
    }
}

}  // namespace

const std::vector<double>& AnalyticTable::row(int j) const {
    if (!has_index(j)) throw std::out_of_range("AnalyticTable: index " + std::to_string(j) + " not tabulated");
    return values[j - first_index];
}

double AnalyticTable::at(int j, double x) const {
    const auto& v = row(j);
    if (!(x >= 0.0 && x <= x_max()))
        throw std::out_of_range("AnalyticTable: x = " + std::to_string(x) + " outside [0, " +
                                std::to_string(x_max()) + "]");
    const long m = static_cast<long>(v.size());
    if (m == 1) return v[0];
    const double s = x / (x_max() / (m - 1));
    const long k = static_cast<long>(std::floor(s));
    if (k >= m - 1) return v[m - 1];
    if (s == static_cast<double>(k)) return v[k];
    if (m < 4) {
        const double t = s - k;
        return (1.0 - t) * v[k] + t * v[k + 1];
    }
    const long k0 = std::clamp(k - 1, 0L, m - 4);
    const double t = s - k0;
    const double w0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    const double w1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    const double w2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    const double w3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    return w0 * v[k0] + w1 * v[k0 + 1] + w2 * v[k0 + 2] + w3 * v[k0 + 3];
}

double l_eps(double x, const ModelParams& p) {
    if (!(x > 0.0)) throw std::domain_error("l_eps: x must be > 0");
    const double e2 = p.eps * p.eps;
    return std::numbers::pi * p.lambda_hat * p.lambda_hat / (-2.0 * std::log(p.eps)) *
           std::log1p(1.0 / (e2 * x));
}

AnalyticTable g_table(int n_max, double x_max, const ModelParams& p, int grid_size, double tol) {
    if (n_max < 1) throw std::invalid_argument("g_table: n_max must be >= 1");
    const double a = coef(p);
    return refine([&](const std::vector<double>& x) { return build_g(n_max, x, a); }, x_max,
                  grid_size, tol, 1, n_max);
}

double g_closed(double x, const ModelParams& p) {
    if (!(x >= 0.0)) throw std::domain_error("g_closed: x must be >= 0");
    const double n4 = std::pow(p.nu, 4);
    return 2.0 * x / (std::sqrt(8.0 * x / n4 + 1.0) + 1.0);
}

Diffusivity effective_diffusivity(const ModelParams& p) {
    const double n2 = p.nu * p.nu;
    const double lh2 = p.lambda_hat * p.lambda_hat;
    Diffusivity d;
    d.c_sq = 8.0 * std::numbers::pi * lh2 /
             (std::sqrt(2.0 * std::numbers::pi * lh2 + n2 * n2 / 4.0) + n2 / 2.0);
    d.c = std::sqrt(d.c_sq);
    d.total_variance_rate = d.c_sq + 2.0 * n2;
    return d;
}

double laplace_limit(const ModelParams& p) {
    // limit of (4 / lambda^2) (2 / nu^2) G_{n+1}(pi lambda_hat^2) as n -> infinity
    const double x = std::numbers::pi * p.lambda_hat * p.lambda_hat;
    return 8.0 * g_closed(x, p) / (p.lambda * p.lambda * p.nu * p.nu);
}

double truncated_limit(int n, const ModelParams& p) {
    if (n < 1) throw std::invalid_argument("truncated_limit: n must be >= 1");
    if (p.lambda_hat == 0.0) return 0.0;
    const double x = std::numbers::pi * p.lambda_hat * p.lambda_hat;
    const auto t = g_table(n + 1, x, p);
    return 2.0 / (p.nu * p.nu) * t.row(n + 1).back();
}

AnalyticTable g_plus_table(int n, int j, double x_max, const ModelParams& p, int grid_size,
                           double tol) {
    if (j < 1 || j > n) throw std::out_of_range("g_plus_table: need 1 <= j <= n");
    const double a = coef(p);
    auto build = [&](const std::vector<double>& x) {
        const double h = x.back() / (x.size() - 1);
        return build_plus(build_g(n, x, a), n, j, h, a);
    };
    return refine(build, x_max, grid_size, tol, 0, j);
}

AnalyticTable s_table(int n, double x_max, const ModelParams& p, int grid_size, double tol) {
    if (n < 0) throw std::invalid_argument("s_table: n must be >= 0");
    const double a = coef(p);
    auto build = [&](const std::vector<double>& x) {
        const std::size_t m = x.size();
        Rows out(1, std::vector<double>(m, 1.0));
        if (n == 0) return out;
        const double h = x.back() / (m - 1);
        const Rows g = build_g(n, x, a);
        for (int j = 1; j <= n; ++j) {
            const Rows plus = build_plus(g, n, j, h, a);
            for (std::size_t k = 0; k < m; ++k) out[0][k] += plus[j][k];
        }
        return out;
    };
    return refine(build, x_max, grid_size, tol, n, n);
}

double s_n(int n, double x, const ModelParams& p) {
    if (!(x >= 0.0)) throw std::domain_error("s_n: x must be >= 0");
    if (n < 0) throw std::invalid_argument("s_n: n must be >= 0");
    if (x == 0.0 || n == 0) return 1.0;
    return s_table(n, x, p).row(n).back();
}

double s_closed(double x, const ModelParams& p) {
    if (!(x >= 0.0)) throw std::domain_error("s_closed: x must be >= 0");
    return std::sqrt(8.0 * x / std::pow(p.nu, 4) + 1.0);
}

}  // namespace gffdrift
