#pragma once

#include "gffdrift/field.hpp"
#include "gffdrift/mollifier.hpp"
#include "gffdrift/params.hpp"
#include "gffdrift/resolvent.hpp"
#include "gffdrift/sde.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gffdrift {

struct GridOverride {
    std::optional<double> box_length;
    std::optional<std::size_t> grid_n;
};

struct ScheduleConfig {
    double t_final = 1.0;
    std::optional<double> dt;
    std::vector<double> checkpoints;  // empty: n_checkpoints uniform times
    std::size_t n_checkpoints = 20;
    CouplingMode mode = CouplingMode::weak_coupling;
    double fixed_lambda = 1.0;
};

struct AnalyticConfig {
    int n_max = 8;
    std::optional<double> x_max;  // default 2 pi lambda_hat^2
    int grid_size = 8192;
    int csv_points = 257;
    int truncation_max = 12;
};

struct SampleFieldConfig {
    std::size_t covariance_draws = 0;
    std::vector<Vec2> lags{{0.0, 0.0}};
};

struct SweepConfig {
    std::vector<double> eps_list{0.4, 0.2, 0.1};
    int max_truncation = 3;
};

struct SuperdiffConfig {
    double lambda = 1.0;
    double nu = 1.0;
    double field_eps = 1.0;
    std::vector<double> t_list{10.0, 21.544346900318832, 46.415888336127772, 100.0,
                               215.44346900318823, 464.15888336127773, 1000.0};
    std::size_t n_replicas = 300;
    GridOverride grid;
    std::optional<double> dt;
};

struct ResolventConfig {
    std::vector<double> eps_list{1e-2, 1e-3, 1e-4};
    int n_max = 4;
    std::vector<Vec2> x_sums{{0.0, 0.0}, {0.5, 0.0}};
};

struct VerifyConfig {
    std::vector<int> criteria;  // empty: all
    std::size_t c5_draws = 10000;
    std::size_t c6_replicas = 10000;
    std::size_t c7_replicas = 2000;
    std::size_t c8_replicas = 300;
    std::vector<double> c8_t_list{10.0, 21.544346900318832, 46.415888336127772, 100.0,
                                  215.44346900318823, 464.15888336127773, 1000.0};
};

struct RunConfig {
    ModelParams model{};
    MollifierKind mollifier = MollifierKind::compact_bump;
    GridOverride grid;
    ScheduleConfig schedule;
    std::size_t n_replicas = 1000;
    std::uint64_t master_seed = 20240611;
    std::string output_dir = "out";
    unsigned threads = 1;
    QuadratureSpec quadrature{};
    AnalyticConfig analytic;
    SampleFieldConfig sample_field;
    SweepConfig sweep;
    SuperdiffConfig superdiffusivity;
    ResolventConfig resolvent;
    VerifyConfig verify;
    std::string inject_fault;  // test hook: "" or "c_sq_offset"

    // Throws std::invalid_argument on the first violated constraint.
    void validate() const;
};

// Strict: unknown keys and wrong types throw std::invalid_argument.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);
RunConfig load_config(const std::string& path);

// FNV-1a 64 over the canonical dump, excluding threads and output_dir.
std::string config_hash(const RunConfig& c);

// Derived defaults for the model-level commands.
GridSpec resolve_grid(const RunConfig& c);
SimSchedule resolve_schedule(const RunConfig& c);
GridSpec resolve_superdiff_grid(const RunConfig& c);

}  // namespace gffdrift
