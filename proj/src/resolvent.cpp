#include "gffdrift/resolvent.hpp"

#include "gffdrift/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gffdrift {

namespace {

constexpr double kPi = std::numbers::pi;

MollifierSpec profile(const QuadratureSpec& q) {
    // only the unscaled V-hat is used here
    return make_mollifier(q.mollifier, 1.0);
}

double prefactor(const ModelParams& p) {
    return p.lambda_hat * p.lambda_hat * kPi / std::log(1.0 / p.eps);
}

// rho = lam_eps + nu^2 s^2 / 2 parametrised by u = log rho
struct RhoMap {
    double lam_eps;
    double nu;
    double u0;

    double rho(double u) const { return std::exp(u); }
    double gamma(double u) const { return lam_eps * std::expm1(u - u0); }  // rho - lam_eps
    double s(double u) const { return std::sqrt(2.0 * gamma(u)) / nu; }
    double u_of_s(double s) const { return std::log(lam_eps + 0.5 * nu * nu * s * s); }
};

}  // namespace

std::string to_string(Substitution s) {
    return s == Substitution::direct ? "direct" : "rho_substitution";
}

Substitution substitution_from_string(const std::string& s) {
    if (s == "direct") return Substitution::direct;
    if (s == "rho_substitution") return Substitution::rho_substitution;
    throw std::invalid_argument("unknown substitution '" + s + "'");
}

void QuadratureSpec::validate() const {
    if (!(rel_tol > 0.0 && rel_tol <= 1e-3)) throw std::invalid_argument("quadrature: rel_tol must lie in (0, 1e-3]");
    if (max_subdivisions < 1) throw std::invalid_argument("quadrature: max_subdivisions must be >= 1");
}

ResolventValue base_diffusivity(const ModelParams& p, const QuadratureSpec& q) {
    p.validate();
    q.validate();
    ResolventValue r;
    r.eps = p.eps;
    r.lambda = p.lambda;
    r.n = 0;
    if (p.lambda_hat == 0.0) return r;
    const MollifierSpec m = profile(q);
    const double lam_eps = p.eps * p.eps * p.lambda;
    const double n2 = p.nu * p.nu;
    const double big_r = m.support_radius();
    double value = 0.0, err = 0.0;
    if (q.substitution == Substitution::direct) {
        auto f = [&](double s) { return m.v_hat(s) * s / (lam_eps + 0.5 * n2 * s * s); };
        // geometric panels resolve the peak at s ~ eps sqrt(2 lambda) / nu
        double a = 0.0, b = std::sqrt(2.0 * lam_eps) / p.nu;
        while (a < big_r) {
            b = std::min(b, big_r);
            const auto piece = integrate(f, a, b, q.rel_tol, q.max_subdivisions);
            value += piece.value;
            err += piece.error;
            a = b;
            b *= 4.0;
        }
    } else {
        const RhoMap map{lam_eps, p.nu, std::log(lam_eps)};
        auto f = [&](double u) { return m.v_hat(map.s(u)) / n2; };
        const auto res = integrate(f, map.u0, map.u_of_s(big_r), q.rel_tol, q.max_subdivisions);
        value = res.value;
        err = res.error;
    }
    const double pre = prefactor(p);
    r.value = pre * value;
    r.est_error = pre * err;
    return r;
}

AnalyticTable resolvent_tables(int n_max, const ModelParams& p) {
    p.validate();
    const double x_max = p.lambda_hat > 0.0 ? l_eps(p.lambda, p) : 1.0;
    return g_table(std::max(n_max, 1), x_max, p);
}

ResolventValue truncated_diffusivity(int n, const ModelParams& p, const QuadratureSpec& q,
                                     const AnalyticTable& tables) {
    if (n < 1) throw std::invalid_argument("truncated_diffusivity: n must be >= 1");
    p.validate();
    q.validate();
    ResolventValue r;
    r.eps = p.eps;
    r.lambda = p.lambda;
    r.n = n;
    if (p.lambda_hat == 0.0) return r;
    if (!tables.has_index(n)) throw std::out_of_range("truncated_diffusivity: table lacks index n");
    const double x_need = l_eps(p.lambda, p);
    if (tables.x_max() < x_need * (1.0 - 1e-12))
        throw std::out_of_range("truncated_diffusivity: table range below l_eps(lambda)");
    const MollifierSpec m = profile(q);
    const double lam_eps = p.eps * p.eps * p.lambda;
    const double n2 = p.nu * p.nu;
    const double a = 4.0 / (n2 * n2);
    const double l_pre = kPi * p.lambda_hat * p.lambda_hat / (-2.0 * std::log(p.eps));
    const double x_top = tables.x_max();
    const RhoMap map{lam_eps, p.nu, std::log(lam_eps)};
    auto f = [&](double u) {
        const double rho = map.rho(u);
        const double gam = map.gamma(u);
        // L^eps(rho / eps^2) = l_pre log(1 + 1/rho)
        const double x = std::min(l_pre * std::log1p(1.0 / rho), x_top);
        const double h = 1.0 + a * tables.at(n, x);
        return m.v_hat(map.s(u)) * rho / (lam_eps + gam * h) / n2;
    };
    const auto res = integrate(f, map.u0, map.u_of_s(m.support_radius()), q.rel_tol, q.max_subdivisions);
    const double pre = prefactor(p);
    r.value = pre * res.value;
    r.est_error = pre * res.error;
    return r;
}

ResolventValue truncated_diffusivity(int n, const ModelParams& p, const QuadratureSpec& q) {
    return truncated_diffusivity(n, p, q, resolvent_tables(n, p));
}

double mc_laplace_comparator(const std::vector<double>& times, const std::vector<double>& values,
                             double lambda) {
    if (times.size() != values.size() || times.empty())
        throw std::invalid_argument("laplace comparator: times and values must be non-empty and equal length");
    if (!(lambda > 0.0)) throw std::invalid_argument("laplace comparator: lambda must be > 0");
    std::vector<double> t, v;
    if (times.front() < 0.0) throw std::invalid_argument("laplace comparator: negative time");
    if (times.front() > 0.0) {
        t.push_back(0.0);
        v.push_back(0.0);
    }
    t.insert(t.end(), times.begin(), times.end());
    v.insert(v.end(), values.begin(), values.end());
    for (std::size_t k = 1; k < t.size(); ++k)
        if (!(t[k] > t[k - 1])) throw std::invalid_argument("laplace comparator: times must be strictly ascending");
    const double t_final = t.back();
    if (lambda * t_final < 3.0)
        throw std::invalid_argument("laplace comparator: lambda * T_final < 3, tail would dominate");
    CompensatedSum acc;
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        const double a = t[k], d = t[k + 1] - t[k];
        const double x = lambda * d;
        const double ea = std::exp(-lambda * a);
        const double slope = (v[k + 1] - v[k]) / d;
        // int_0^d (v_a + slope tau) e^{-lambda (a + tau)} dtau
        const double i0 = -std::expm1(-x) / lambda;
        const double i1 = (-std::expm1(-x) - x * std::exp(-x)) / (lambda * lambda);
        acc.add(ea * (v[k] * i0 + slope * i1));
    }
    // linear growth v_T t / T past T
    const double vt = v.back();
    acc.add(vt / t_final * std::exp(-lambda * t_final) * (t_final / lambda + 1.0 / (lambda * lambda)));
    return acc.value();
}

ResidualParts replacement_residual_parts(const ModelParams& p, const Vec2& x_sum, const ScalarFn& h,
                                         const ScalarFn& h_plus, const QuadratureSpec& q) {
    p.validate();
    q.validate();
    const MollifierSpec m = profile(q);
    const double lam_eps = p.eps * p.eps * p.lambda;
    const double n2 = p.nu * p.nu;
    if (!(lam_eps < 1.0)) throw std::invalid_argument("replacement_residual: need eps^2 lambda < 1");
    const double e2 = p.eps * p.eps;
    auto lx = [&](double rho) { return l_eps(rho / e2, p); };
    const double inner_tol = q.rel_tol;

    // 1D part in u = log rho on [rho_lo, 1]: int H+ / (rho (rho + 1) H^2) d rho
    auto one_d = [&](double rho_lo) {
        if (!(rho_lo < 1.0)) return 0.0;
        auto f = [&](double u) {
            const double rho = std::exp(u);
            const double x = lx(rho);
            const double hh = h(x);
            return h_plus(x) / ((rho + 1.0) * hh * hh);
        };
        return integrate(f, std::log(rho_lo), 0.0, inner_tol, q.max_subdivisions).value;
    };

    ResidualParts out;
    const double pn = std::hypot(x_sum[0], x_sum[1]);
    if (pn == 0.0) {
        const RhoMap map{lam_eps, p.nu, std::log(lam_eps)};
        auto f = [&](double u) {
            const double rho = map.rho(u);
            const double gam = map.gamma(u);
            const double x = lx(rho);
            const double den = lam_eps + gam * h(x);
            return m.v_hat(map.s(u)) * rho * (lam_eps + gam * h_plus(x)) / (den * den);
        };
        out.two_d = 2.0 * kPi / n2 *
                    integrate(f, map.u0, map.u_of_s(m.support_radius()), q.rel_tol, q.max_subdivisions).value;
        out.one_d = 2.0 * kPi / n2 * one_d(lam_eps);
    } else {
        const Vec2 P{p.eps * x_sum[0], p.eps * x_sum[1]};
        const Vec2 dir{x_sum[0] / pn, x_sum[1] / pn};
        const double p2 = P[0] * P[0] + P[1] * P[1];
        const double big_r = m.support_radius();
        const RhoMap map{lam_eps, p.nu, std::log(lam_eps)};
        // polar coordinates centred at q = -P, where Gamma vanishes
        auto ring = [&](double phi) {
            const Vec2 e{std::cos(phi), std::sin(phi)};
            const double b = P[0] * e[0] + P[1] * e[1];
            const double disc = b * b - p2 + big_r * big_r;
            if (disc <= 0.0) return 0.0;
            const double s_hi = b + std::sqrt(disc);
            const double s_lo = std::max(0.0, b - std::sqrt(disc));
            if (s_hi <= s_lo) return 0.0;
            auto f = [&](double u) {
                const double rho = map.rho(u);
                const double gam = map.gamma(u);
                const double s = map.s(u);
                const Vec2 qv{-P[0] + s * e[0], -P[1] + s * e[1]};
                const double qn2 = qv[0] * qv[0] + qv[1] * qv[1];
                if (qn2 == 0.0) return 0.0;
                const double cross = qv[0] * dir[1] - qv[1] * dir[0];
                const double sin2 = cross * cross / qn2;
                const double x = lx(rho);
                const double den = lam_eps + gam * h(x);
                return m.v_hat(std::sqrt(qn2)) * sin2 * rho * (lam_eps + gam * h_plus(x)) / (den * den) / n2;
            };
            const double u_lo = s_lo > 0.0 ? map.u_of_s(s_lo) : map.u0;
            // rays grazing the support edge carry almost nothing; an absolute floor
            // keeps them from exhausting the panel budget on rounding noise
            return integrate(f, u_lo, map.u_of_s(s_hi), inner_tol, q.max_subdivisions, 1e-6 * inner_tol / n2).value;
        };
        out.two_d = integrate(ring, 0.0, 2.0 * kPi, q.rel_tol, q.max_subdivisions).value;
        out.one_d = kPi / n2 * one_d(lam_eps + 0.5 * n2 * p2);
    }
    out.residual = std::abs(out.two_d - out.one_d);
    return out;
}

double replacement_residual(const ModelParams& p, const Vec2& x_sum, const ScalarFn& h,
                            const ScalarFn& h_plus, const QuadratureSpec& q) {
    return replacement_residual_parts(p, x_sum, h, h_plus, q).residual;
}

}  // namespace gffdrift
