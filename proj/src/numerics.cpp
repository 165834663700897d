#include "gffdrift/numerics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gffdrift {

void CompensatedSum::add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
        comp_ += (sum_ - t) + v;
    else
        comp_ += (v - t) + sum_;
    sum_ = t;
}

double pairwise_sum(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

std::vector<double> cumulative_integral(std::span<const double> f, double h) {
    const std::size_t m = f.size();
    std::vector<double> out(m, 0.0);
    if (m < 2) return out;
    if (m < 4) {
        // too few nodes for the cubic rule
        CompensatedSum acc;
        for (std::size_t k = 1; k < m; ++k) {
            acc.add(0.5 * h * (f[k - 1] + f[k]));
            out[k] = acc.value();
        }
        return out;
    }
    CompensatedSum acc;
    for (std::size_t k = 0; k + 1 < m; ++k) {
        double piece;
        if (k == 0) {
            piece = h * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) / 24.0;
        } else if (k + 2 == m) {
            piece = h * (9.0 * f[k + 1] + 19.0 * f[k] - 5.0 * f[k - 1] + f[k - 2]) / 24.0;
        } else {
            piece = h * (-f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2]) / 24.0;
        }
        acc.add(piece);
        out[k + 1] = acc.value();
    }
    return out;
}

MeanSem mean_sem(std::span<const double> xs) {
    if (xs.size() < 2) throw std::invalid_argument("mean_sem: need at least 2 samples");
    MeanSem r;
    r.n = xs.size();
    const double n = static_cast<double>(r.n);
    r.mean = pairwise_sum(xs) / n;
    std::vector<double> dev(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) dev[i] = (xs[i] - r.mean) * (xs[i] - r.mean);
    r.sem = std::sqrt(pairwise_sum(dev) / (n - 1.0) / n);
    return r;
}

namespace {

struct Panel {
    double a, b, value, error;
};

Panel gk_panel(const std::function<double(double)>& f, double a, double b) {
    using boost::math::quadrature::gauss_kronrod;
    double err = 0.0;
    // max_depth 0: one 61-point application, error is |K - G| on [-1, 1]
    const double v = gauss_kronrod<double, 61>::integrate(f, a, b, 0, 0.0, &err);
    return {a, b, v, err * 0.5 * std::abs(b - a)};
}

}  // namespace

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double rel_tol, std::size_t max_panels, double abs_floor) {
    QuadResult r;
    if (a == b) return r;
    auto worse = [](const Panel& x, const Panel& y) { return x.error < y.error; };
    std::vector<Panel> heap{gk_panel(f, a, b)};
    for (;;) {
        CompensatedSum v, e;
        for (const auto& p : heap) {
            v.add(p.value);
            e.add(p.error);
        }
        r.value = v.value();
        r.error = e.value();
        if (!std::isfinite(r.value)) throw std::runtime_error("integrate: non-finite result");
        if (r.error <= rel_tol * std::abs(r.value) + abs_floor) break;
        if (heap.size() >= max_panels) {
            std::ostringstream os;
            os << "integrate: no convergence on [" << a << ", " << b << "], value " << r.value
               << ", error " << r.error;
            throw std::runtime_error(os.str());
        }
        std::pop_heap(heap.begin(), heap.end(), worse);
        const Panel worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        heap.push_back(gk_panel(f, worst.a, mid));
        std::push_heap(heap.begin(), heap.end(), worse);
        heap.push_back(gk_panel(f, mid, worst.b));
        std::push_heap(heap.begin(), heap.end(), worse);
    }
    return r;
}

}  // namespace gffdrift
