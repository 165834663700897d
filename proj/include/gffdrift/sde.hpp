#pragma once

#include "gffdrift/field.hpp"
#include "gffdrift/params.hpp"
#include "gffdrift/resolvent.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gffdrift {

enum class CouplingMode { weak_coupling, fixed_coupling };

std::string to_string(CouplingMode m);
CouplingMode coupling_mode_from_string(const std::string& s);

struct SimSchedule {
    double t_final = 1.0;
    double dt = 0.0;                   // base step; checkpoints are multiples of it
    std::vector<double> checkpoints;   // ascending, in (0, t_final]
    std::vector<std::size_t> checkpoint_steps;
    CouplingMode mode = CouplingMode::weak_coupling;
    double fixed_lambda = 0.0;

    std::size_t n_steps() const;
    void validate() const;
};

// 0.1 eps^2 / nu^2, or t_final / 1000 when nu = 0.
double diffusive_dt(double eps, double nu, double t_final);

// Snaps dt so t_final is a whole number of steps and every checkpoint to the
// nearest step (duplicates dropped). t_final is always a checkpoint.
SimSchedule make_schedule(double t_final, double dt_max, std::vector<double> checkpoints,
                          CouplingMode mode = CouplingMode::weak_coupling, double fixed_lambda = 0.0);

// Velocity field seen by the integrator.
struct DriftField {
    std::function<Vec2(const Vec2&)> eval;
    double max_norm = 0.0;      // bound on |omega|, drives the substep count
    double spacing = 1.0;       // grid spacing h
    double box_length = 0.0;    // 0 disables the excursion check
};

DriftField drift_of(const SpectralField& f, Interp interp = Interp::bilinear);
DriftField zero_drift(double box_length);

struct Trajectory {
    std::vector<double> times;  // 0 followed by the checkpoints
    std::vector<Vec2> X, N, B;
    std::size_t replica_id = 0;
    std::uint64_t env_seed = 0;
    std::uint64_t noise_seed = 0;
    bool flagged = false;
    double max_excursion = 0.0;
    std::size_t substeps = 1;

    // max |X - N - nu B| / max(|N| + nu |B|, tiny) over checkpoints
    double bookkeeping_error(double nu) const;
};

// Euler-Maruyama with Neumaier-compensated accumulation of X, N and B.
// Each base step is split into the smallest number of substeps with
// coupling * max_norm * dt_sub <= h / 4.
Trajectory simulate_path(const DriftField& field, const ModelParams& p, const SimSchedule& sched,
                         std::uint64_t noise_seed);
Trajectory simulate_path(const SpectralField& field, const ModelParams& p, const SimSchedule& sched,
                         std::uint64_t noise_seed);

enum class Statistic { n_sq, x_sq, x1x2, n1, n2, x1_sq, x2_sq };
inline constexpr int kNumStatistics = 7;
std::string to_string(Statistic s);

struct MomentEstimate {
    double t = 0.0;
    Statistic statistic = Statistic::n_sq;
    double mean = 0.0;
    double sem = 0.0;
    std::size_t n_samples = 0;
};

struct AnnealedResult {
    std::vector<double> times;  // checkpoints
    std::vector<MomentEstimate> moments;  // per time, per statistic (time-major)
    // samples[stat][checkpoint][replica]
    std::vector<std::vector<std::vector<double>>> samples;
    std::size_t n_replicas = 0;
    std::size_t flagged = 0;
    double flagged_fraction = 0.0;
    bool unreliable = false;  // more than 1% of replicas flagged
    double bookkeeping_max = 0.0;
    std::size_t max_substeps = 1;
    double coupling = 0.0;

    const MomentEstimate& at(std::size_t checkpoint, Statistic s) const;
};

struct AnnealedOptions {
    unsigned threads = 1;
    Interp interp = Interp::bilinear;
};

// One fresh environment and Brownian path per replica. Replica r uses
// env seed stream_seed(master, r, field) and noise seed stream_seed(master, r, noise).
AnnealedResult annealed_moments(const ModelParams& p, const GridSpec& g, const MollifierSpec& m,
                                const SimSchedule& sched, std::size_t n_replicas,
                                std::uint64_t master_seed, const AnnealedOptions& opt = {});

struct SweepRow {
    double eps = 0.0;
    GridSpec grid;
    double dt = 0.0;
    AnnealedResult result;
    double n_rate = 0.0, n_rate_sem = 0.0;  // E|N_T|^2 / T
    double x_rate = 0.0, x_rate_sem = 0.0;  // E|X_T|^2 / T
    double x1x2 = 0.0, x1x2_sem = 0.0;
    double laplace_mc = 0.0;                // NaN when lambda T < 3
    std::vector<double> truncated;          // (4 / lambda^2) truncated_diffusivity(n), n = 1..
};

struct SweepOptions {
    unsigned threads = 1;
    int max_truncation = 3;
    std::optional<double> box_length;  // overrides the derived L
    QuadratureSpec quadrature{};
    MollifierKind mollifier = MollifierKind::compact_bump;
};

// eps_i uses master seed stream_seed(master, i, aux). The schedule's times are
// kept; dt is re-derived per eps.
std::vector<SweepRow> weak_coupling_sweep(const std::vector<double>& eps_list, const ModelParams& p_base,
                                          const SimSchedule& sched, std::size_t n_replicas,
                                          std::uint64_t master_seed, const SweepOptions& opt = {});

struct SuperdiffRow {
    double t = 0.0;
    double ratio = 0.0;  // E|Y_t|^2 / t
    double sem = 0.0;
};

struct PairCheck {
    double t_lo = 0.0, t_hi = 0.0;
    double diff = 0.0, diff_sem = 0.0;
    bool non_decreasing = true;  // diff >= -3 sem
};

struct SqrtLogFit {
    double a = 0.0, b = 0.0;
    double b_sem = 0.0;
    double b_lower95 = 0.0;  // one-sided
    double r_squared = 0.0;
    double chi2_per_dof = 0.0;
};

struct SuperdiffResult {
    std::vector<SuperdiffRow> rows;
    std::vector<PairCheck> pairs;
    SqrtLogFit fit;
    AnnealedResult result;
    GridSpec grid;
    double dt = 0.0;
};

struct SuperdiffOptions {
    unsigned threads = 1;
    double field_eps = 1.0;
    std::optional<GridSpec> grid;
    std::optional<double> dt;
    MollifierKind mollifier = MollifierKind::compact_bump;
};

// Fits a + b sqrt(log t) with ratios[time][replica]; b and its SEM come from
// the per-replica OLS slope.
SqrtLogFit fit_sqrt_log(const std::vector<double>& t, const std::vector<std::vector<double>>& ratios);

// Fixed coupling lambda, noise nu, field at scale field_eps, over geometric t_list.
SuperdiffResult superdiffusivity_scan(double lambda, double nu, const std::vector<double>& t_list,
                                      std::size_t n_replicas, std::uint64_t master_seed,
                                      const SuperdiffOptions& opt = {});

}  // namespace gffdrift
