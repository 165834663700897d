#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace gffdrift {

// Neumaier compensated accumulator.
class CompensatedSum {
public:
    void add(double v);
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Fixed-order pairwise summation; result depends only on the order of xs.
double pairwise_sum(std::span<const double> xs);

// Running integral of samples f on a uniform grid with spacing h, 4th order.
// out[0] = 0, out[k] ~ int_0^{k h} f. Needs at least 4 samples for full order.
std::vector<double> cumulative_integral(std::span<const double> f, double h);

struct MeanSem {
    double mean = 0.0;
    double sem = 0.0;
    std::size_t n = 0;
};

// Sample mean and standard error (sample std / sqrt(n)), pairwise-summed.
// Needs n >= 2.
MeanSem mean_sem(std::span<const double> xs);

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
};

// Globally adaptive 61-point Gauss-Kronrod on a finite interval: the panel with
// the largest |K - G| is bisected until the summed estimate is below
// rel_tol * |value| + abs_floor. Throws std::runtime_error past max_panels panels.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double rel_tol, std::size_t max_panels, double abs_floor = 0.0);

}  // namespace gffdrift
