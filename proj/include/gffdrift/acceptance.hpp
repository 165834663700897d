#pragma once

#include "gffdrift/config.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gffdrift {

namespace tolerance {
inline constexpr double identity_rel = 1e-10;
inline constexpr double g60_abs = 1e-6;
inline constexpr double table_slack = 1e-12;
inline constexpr double base_rel_1e3 = 0.05;
inline constexpr double base_rel_1e6 = 0.025;
inline constexpr double base_vs_trunc_rel = 1e-8;
inline constexpr double trunc2_rel = 0.10;
inline constexpr double n_sem = 3.0;
inline constexpr double divergence = 1e-12;
inline constexpr double bookkeeping = 1e-12;
inline constexpr double laplace_rel = 0.25;
inline constexpr double residual_spread = 2.0;
// eps -> 0 limit of the H = H+ = 1 residual, 2 pi int_0^1 (1 - V-hat(sqrt w)) / w dw = 10.25222..., rounded up
inline constexpr double residual_constant = 10.2523;
inline constexpr double budget_fast_s = 1.0;
inline constexpr double budget_trunc_s = 5.0;
inline constexpr double budget_residual_s = 60.0;
// Laplace parameter for the weak-coupling comparator; lambda T >= 3 keeps the tail small
inline constexpr double c7_lambda = 3.0;
}  // namespace tolerance

struct IdentityCheck {
    std::string name;
    double lhs = 0.0, rhs = 0.0, rel = 0.0;
};

// The three closed-form identities linking c^2, the Laplace limit, S and G.
// fault "c_sq_offset" perturbs c^2 by one part in 1e6 (negative control).
std::vector<IdentityCheck> identity_suite(const ModelParams& p, const std::string& fault = "");

struct Measurement {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    std::string relation;  // "<=", ">=", ">", "<"
    bool ok = true;
};

struct CriterionResult {
    int id = 0;
    std::string title;
    bool passed = false;
    std::vector<Measurement> measured;
    std::string detail;
    double seconds = 0.0;  // wall time, reported but never persisted
};

struct AcceptanceOptions {
    std::uint64_t master_seed = 20240611;
    unsigned threads = 1;
    VerifyConfig scale{};
    std::string inject_fault;
    std::string scratch_dir;  // criterion 10 workspace; empty picks a temp directory
};

std::vector<int> all_criteria();
std::string criterion_title(int id);

CriterionResult run_criterion(int id, const AcceptanceOptions& opt);

// Runs opt.scale.criteria (all when empty) in order.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

// "PASS  1  analytic identity suite" style line.
std::string summary_line(const CriterionResult& r);

nlohmann::json criterion_json(const CriterionResult& r);

}  // namespace gffdrift
