#pragma once

#include <string>

namespace gffdrift {

enum class MollifierKind { compact_bump, gaussian_reference };

std::string to_string(MollifierKind k);
MollifierKind mollifier_kind_from_string(const std::string& s);

struct MollifierSpec {
    MollifierKind kind = MollifierKind::compact_bump;
    double eps = 0.1;
    // set for gaussian_reference, which is not compactly supported in Fourier space
    bool support_warning = false;

    // radial profile of the Fourier transform of rho
    double rho_hat(double r) const;
    // V-hat(r) = rho_hat(r)^2
    double v_hat(double r) const;
    // V-hat_eps(|p|) = V-hat(eps |p|)
    double v_hat_eps(double p_abs) const { return v_hat(eps * p_abs); }
    // V-hat vanishes (or is negligible, below 1e-15) for r >= support_radius()
    double support_radius() const;
    // int_0^1 V-hat(s) s ds (or over the support radius)
    double second_moment() const;
};

// eps in (0, 1]; std::invalid_argument otherwise.
MollifierSpec make_mollifier(MollifierKind kind, double eps);

}  // namespace gffdrift
