#pragma once

#include "gffdrift/analytic.hpp"
#include "gffdrift/field.hpp"
#include "gffdrift/mollifier.hpp"
#include "gffdrift/params.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace gffdrift {

enum class Substitution { direct, rho_substitution };

std::string to_string(Substitution s);
Substitution substitution_from_string(const std::string& s);

struct QuadratureSpec {
    double rel_tol = 1e-8;
    std::size_t max_subdivisions = 4096;
    Substitution substitution = Substitution::rho_substitution;
    MollifierKind mollifier = MollifierKind::compact_bump;

    void validate() const;
};

struct ResolventValue {
    double value = 0.0;
    double eps = 0.0;
    double lambda = 0.0;
    int n = 0;
    double est_error = 0.0;
};

// (lambda_hat^2 pi / log(1/eps)) int_0^{1/eps} V-hat(eps r) r / (lambda + nu^2 r^2 / 2) dr
ResolventValue base_diffusivity(const ModelParams& p, const QuadratureSpec& q = {});

// Diagonal surrogate with H = 1 + (4/nu^4) G_n(L^eps(rho/eps^2)); tables must hold
// G_n on [0, l_eps(lambda)] at least.
ResolventValue truncated_diffusivity(int n, const ModelParams& p, const QuadratureSpec& q,
                                     const AnalyticTable& tables);
ResolventValue truncated_diffusivity(int n, const ModelParams& p, const QuadratureSpec& q = {});

// G_1..G_n_max tables covering the argument range needed at p.
AnalyticTable resolvent_tables(int n_max, const ModelParams& p);

// int_0^inf e^{-lambda t} f(t) dt for piecewise-linear data (a (0, 0) point is
// prepended when times[0] > 0) plus a linear-growth tail past the last time.
// std::invalid_argument if lambda * T_final < 3.
double mc_laplace_comparator(const std::vector<double>& times, const std::vector<double>& values,
                             double lambda);

using ScalarFn = std::function<double(double)>;

struct ResidualParts {
    double two_d = 0.0;
    double one_d = 0.0;
    double residual = 0.0;
};

// |2D integral - 1D rho-integral| after replacing the 2D resolvent by its radial form.
ResidualParts replacement_residual_parts(const ModelParams& p, const Vec2& x_sum, const ScalarFn& h,
                                         const ScalarFn& h_plus, const QuadratureSpec& q = {});
double replacement_residual(const ModelParams& p, const Vec2& x_sum, const ScalarFn& h,
                            const ScalarFn& h_plus, const QuadratureSpec& q = {});

}  // namespace gffdrift
