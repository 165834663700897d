#include "gffdrift/params.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gffdrift {

void ModelParams::validate() const {
    auto bad = [](const std::string& what) { throw std::invalid_argument("ModelParams: " + what); };
    if (!std::isfinite(lambda_hat) || lambda_hat < 0.0) bad("lambda_hat must be finite and >= 0");
    if (!std::isfinite(nu) || nu <= 0.0) bad("nu must be > 0");
    if (!std::isfinite(lambda) || lambda <= 0.0) bad("lambda must be > 0");
    if (!(eps > 0.0 && eps < 0.5)) bad("eps must lie in (0, 1/2)");
}

double ModelParams::weak_coupling() const {
    return lambda_hat / std::sqrt(std::log(1.0 / eps));
}

}  // namespace gffdrift
