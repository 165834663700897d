#include "gffdrift/mollifier.hpp"

#include "gffdrift/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace gffdrift {

namespace {
constexpr double kGaussianCutoff = 6.0;  // exp(-36) ~ 2e-16
}

std::string to_string(MollifierKind k) {
    return k == MollifierKind::compact_bump ? "compact_bump" : "gaussian_reference";
}

MollifierKind mollifier_kind_from_string(const std::string& s) {
    if (s == "compact_bump") return MollifierKind::compact_bump;
    if (s == "gaussian_reference") return MollifierKind::gaussian_reference;
    throw std::invalid_argument("unknown mollifier kind '" + s + "'");
}

double MollifierSpec::rho_hat(double r) const {
    r = std::abs(r);
    if (kind == MollifierKind::gaussian_reference) return std::exp(-0.5 * r * r);
    if (r >= 1.0) return 0.0;
    const double r2 = r * r;
    // 1 - 1/(1 - r^2) = -r^2/(1 - r^2)
    return std::exp(-r2 / (1.0 - r2));
}

double MollifierSpec::v_hat(double r) const {
    const double v = rho_hat(r);
    return v * v;
}

double MollifierSpec::support_radius() const {
    return kind == MollifierKind::compact_bump ? 1.0 : kGaussianCutoff;
}

double MollifierSpec::second_moment() const {
    return integrate([this](double s) { return v_hat(s) * s; }, 0.0, support_radius(), 1e-13, 4096)
        .value;
}

MollifierSpec make_mollifier(MollifierKind kind, double eps) {
    if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("mollifier eps must lie in (0, 1]");
    MollifierSpec m;
    m.kind = kind;
    m.eps = eps;
    m.support_warning = (kind == MollifierKind::gaussian_reference);
    return m;
}

}  // namespace gffdrift
