#pragma once

namespace gffdrift {

// Scalar model parameters shared by every module.
struct ModelParams {
    double lambda_hat = 1.0;
    double nu = 1.0;
    double eps = 0.1;
    double lambda = 1.0;

    // Throws std::invalid_argument. lambda_hat = 0 is accepted (zero coupling).
    void validate() const;

    // lambda_hat / sqrt(log(1/eps))
    double weak_coupling() const;
};

}  // namespace gffdrift
