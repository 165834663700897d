#pragma once

#include "gffdrift/params.hpp"

#include <vector>

namespace gffdrift {

inline constexpr int kDefaultGridSize = 8192;
inline constexpr int kMaxGridSize = (1 << 20) + 1;
inline constexpr double kDefaultTableTolerance = 1e-12;

// Functions of one variable tabulated on a uniform grid starting at 0.
// values[j - first_index][k] holds index j at x_grid[k].
struct AnalyticTable {
    std::vector<double> x_grid;
    std::vector<std::vector<double>> values;
    int first_index = 1;
    int max_index = 0;
    double tolerance = kDefaultTableTolerance;

    double x_max() const { return x_grid.back(); }
    std::size_t size() const { return x_grid.size(); }
    bool has_index(int j) const { return j >= first_index && j <= max_index; }
    const std::vector<double>& row(int j) const;

    // Four-point Lagrange interpolation. Throws std::out_of_range for x
    // outside [0, x_max] or an index that is not tabulated.
    double at(int j, double x) const;
};

// (pi lambda_hat^2 / |log eps^2|) log(1 + 1/(eps^2 x)); std::domain_error for x <= 0.
double l_eps(double x, const ModelParams& p);

// G_1..G_{n_max} on [0, x_max]. grid_size is the starting point count; the grid
// is doubled until the Richardson estimate meets tol.
AnalyticTable g_table(int n_max, double x_max, const ModelParams& p,
                      int grid_size = kDefaultGridSize, double tol = kDefaultTableTolerance);

// (nu^4/4)(sqrt(8x/nu^4 + 1) - 1)
double g_closed(double x, const ModelParams& p);

struct Diffusivity {
    double c = 0.0;
    double c_sq = 0.0;
    double total_variance_rate = 0.0;
};

Diffusivity effective_diffusivity(const ModelParams& p);
// (8 / (lambda^2 nu^2)) G(pi lambda_hat^2), the n -> infinity limit of the Laplace comparator
double laplace_limit(const ModelParams& p);

// (2/nu^2) G_{n+1}(pi lambda_hat^2)
double truncated_limit(int n, const ModelParams& p);

// G_i^{+,n+1-j} for i = 0..j (first_index 0).
AnalyticTable g_plus_table(int n, int j, double x_max, const ModelParams& p,
                           int grid_size = kDefaultGridSize, double tol = kDefaultTableTolerance);

// Single-row table holding S_n on [0, x_max] (first_index = max_index = n).
AnalyticTable s_table(int n, double x_max, const ModelParams& p,
                      int grid_size = kDefaultGridSize, double tol = kDefaultTableTolerance);

double s_n(int n, double x, const ModelParams& p);
double s_closed(double x, const ModelParams& p);

}  // namespace gffdrift
