#include "gffdrift/sde.hpp"

#include "gffdrift/analytic.hpp"
#include "gffdrift/numerics.hpp"
#include "gffdrift/parallel.hpp"
#include "gffdrift/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace gffdrift {

namespace {

constexpr std::size_t kMaxSubsteps = std::size_t{1} << 24;

double coupling_of(const ModelParams& p, const SimSchedule& sched) {
    if (!(p.nu >= 0.0) || !std::isfinite(p.nu)) throw std::invalid_argument("simulate: nu must be >= 0");
    if (sched.mode == CouplingMode::fixed_coupling) return sched.fixed_lambda;
    if (!(p.eps > 0.0 && p.eps < 0.5)) throw std::invalid_argument("simulate: weak coupling needs eps in (0, 1/2)");
    if (!(p.lambda_hat >= 0.0)) throw std::invalid_argument("simulate: lambda_hat must be >= 0");
    return p.weak_coupling();
}

}  // namespace

std::string to_string(CouplingMode m) {
    return m == CouplingMode::weak_coupling ? "weak_coupling" : "fixed_coupling";
}

CouplingMode coupling_mode_from_string(const std::string& s) {
    if (s == "weak_coupling") return CouplingMode::weak_coupling;
    if (s == "fixed_coupling") return CouplingMode::fixed_coupling;
    throw std::invalid_argument("unknown coupling mode '" + s + "'");
}

std::string to_string(Statistic s) {
    switch (s) {
        case Statistic::n_sq: return "N_sq";
        case Statistic::x_sq: return "X_sq";
        case Statistic::x1x2: return "X1X2";
        case Statistic::n1: return "N1";
        case Statistic::n2: return "N2";
        case Statistic::x1_sq: return "X1_sq";
        case Statistic::x2_sq: return "X2_sq";
    }
    return "?";
}

std::size_t SimSchedule::n_steps() const {
    return static_cast<std::size_t>(std::llround(t_final / dt));
}

void SimSchedule::validate() const {
    if (!(t_final > 0.0) || !std::isfinite(t_final)) throw std::invalid_argument("schedule: t_final must be > 0");
    if (!(dt > 0.0) || dt > t_final) throw std::invalid_argument("schedule: dt must lie in (0, t_final]");
    if (checkpoints.empty() || checkpoints.size() != checkpoint_steps.size())
        throw std::invalid_argument("schedule: checkpoints not snapped (use make_schedule)");
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
        if (checkpoint_steps[k] == 0 || (k > 0 && checkpoint_steps[k] <= checkpoint_steps[k - 1]))
            throw std::invalid_argument("schedule: checkpoints must be ascending and > 0");
    }
    if (checkpoint_steps.back() != n_steps()) throw std::invalid_argument("schedule: last checkpoint must be t_final");
    if (mode == CouplingMode::fixed_coupling && !(fixed_lambda >= 0.0))
        throw std::invalid_argument("schedule: fixed_lambda must be >= 0");
}

double diffusive_dt(double eps, double nu, double t_final) {
    if (nu == 0.0) return t_final / 1000.0;
    return 0.1 * eps * eps / (nu * nu);
}

SimSchedule make_schedule(double t_final, double dt_max, std::vector<double> checkpoints, CouplingMode mode,
                          double fixed_lambda) {
    if (!(t_final > 0.0) || !std::isfinite(t_final)) throw std::invalid_argument("schedule: t_final must be > 0");
    if (!(dt_max > 0.0)) throw std::invalid_argument("schedule: dt must be > 0");
    SimSchedule s;
    s.t_final = t_final;
    s.mode = mode;
    s.fixed_lambda = fixed_lambda;
    const double steps_d = std::ceil(t_final / dt_max * (1.0 - 1e-12));
    if (steps_d > 1e12) throw std::invalid_argument("schedule: too many steps");
    const std::size_t steps = std::max<std::size_t>(1, static_cast<std::size_t>(steps_d));
    s.dt = t_final / static_cast<double>(steps);
    checkpoints.push_back(t_final);
    std::sort(checkpoints.begin(), checkpoints.end());
    for (double c : checkpoints) {
        if (!(c > 0.0 && c <= t_final * (1.0 + 1e-12)))
            throw std::invalid_argument("schedule: checkpoints must lie in (0, t_final]");
        const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(c / s.dt)));
        if (!s.checkpoint_steps.empty() && s.checkpoint_steps.back() == k) continue;
        s.checkpoint_steps.push_back(k);
        s.checkpoints.push_back(k == steps ? t_final : static_cast<double>(k) * s.dt);
    }
    s.validate();
    return s;
}

DriftField drift_of(const SpectralField& f, Interp interp) {
    DriftField d;
    d.eval = [&f, interp](const Vec2& x) { return eval_field(f, x, interp); };
    d.max_norm = f.max_norm;
    d.spacing = f.spec.spacing();
    d.box_length = f.spec.box_length;
    return d;
}

DriftField zero_drift(double box_length) {
    DriftField d;
    d.eval = [](const Vec2&) { return Vec2{0.0, 0.0}; };
    d.max_norm = 0.0;
    d.spacing = 1.0;
    d.box_length = box_length;
    return d;
}

double Trajectory::bookkeeping_error(double nu) const {
    double worst = 0.0;
    for (std::size_t k = 0; k < X.size(); ++k) {
        const double scale = std::hypot(N[k][0], N[k][1]) + nu * std::hypot(B[k][0], B[k][1]);
        const double d = std::hypot(X[k][0] - N[k][0] - nu * B[k][0], X[k][1] - N[k][1] - nu * B[k][1]);
        worst = std::max(worst, d / std::max(scale, std::numeric_limits<double>::min()));
    }
    return worst;
}

Trajectory simulate_path(const DriftField& field, const ModelParams& p, const SimSchedule& sched,
                         std::uint64_t noise_seed) {
    sched.validate();
    const double coupling = coupling_of(p, sched);
    const double drift_bound = coupling * field.max_norm;
    std::size_t sub = 1;
    if (drift_bound > 0.0) {
        const double need = std::ceil(drift_bound * sched.dt / (0.25 * field.spacing));
        if (!(need < static_cast<double>(kMaxSubsteps))) throw std::runtime_error("simulate: drift needs too many substeps");
        sub = std::max<std::size_t>(1, static_cast<std::size_t>(need));
    }
    const double hs = sched.dt / static_cast<double>(sub);
    const double sq = std::sqrt(hs);
    const double nu = p.nu;
    const double limit = field.box_length > 0.0 ? 0.25 * field.box_length : std::numeric_limits<double>::infinity();

    auto rng = make_stream(noise_seed, 0, StreamTag::noise);
    std::normal_distribution<double> normal;
    CompensatedSum X[2], N[2], B[2];

    Trajectory tr;
    tr.noise_seed = noise_seed;
    tr.substeps = sub;
    const std::size_t nc = sched.checkpoints.size();
    tr.times.reserve(nc + 1);
    tr.X.reserve(nc + 1);
    tr.N.reserve(nc + 1);
    tr.B.reserve(nc + 1);
    tr.times.push_back(0.0);
    tr.X.push_back({0.0, 0.0});
    tr.N.push_back({0.0, 0.0});
    tr.B.push_back({0.0, 0.0});

    const std::size_t steps = sched.n_steps();
    std::size_t next_cp = 0;
    for (std::size_t step = 1; step <= steps; ++step) {
        for (std::size_t s = 0; s < sub; ++s) {
            const Vec2 x{X[0].value(), X[1].value()};
            const Vec2 w = coupling != 0.0 ? field.eval(x) : Vec2{0.0, 0.0};
            for (int c = 0; c < 2; ++c) {
                const double dn = coupling * w[c] * hs;
                const double db = sq * normal(rng);
                N[c].add(dn);
                B[c].add(db);
                X[c].add(dn);
                X[c].add(nu * db);
            }
        }
        const double r = std::hypot(X[0].value(), X[1].value());
        tr.max_excursion = std::max(tr.max_excursion, r);
        if (r > limit) tr.flagged = true;
        if (next_cp < nc && step == sched.checkpoint_steps[next_cp]) {
            tr.times.push_back(sched.checkpoints[next_cp]);
            tr.X.push_back({X[0].value(), X[1].value()});
            tr.N.push_back({N[0].value(), N[1].value()});
            tr.B.push_back({B[0].value(), B[1].value()});
            ++next_cp;
        }
    }
    return tr;
}

Trajectory simulate_path(const SpectralField& field, const ModelParams& p, const SimSchedule& sched,
                         std::uint64_t noise_seed) {
    if (sched.mode == CouplingMode::weak_coupling &&
        std::abs(field.mollifier.eps - p.eps) > 1e-12 * p.eps)
        throw std::invalid_argument("simulate: field eps differs from model eps");
    Trajectory tr = simulate_path(drift_of(field), p, sched, noise_seed);
    tr.env_seed = field.seed;
    return tr;
}

const MomentEstimate& AnnealedResult::at(std::size_t checkpoint, Statistic s) const {
    return moments.at(checkpoint * kNumStatistics + static_cast<std::size_t>(s));
}

AnnealedResult annealed_moments(const ModelParams& p, const GridSpec& g, const MollifierSpec& m,
                                const SimSchedule& sched, std::size_t n_replicas,
                                std::uint64_t master_seed, const AnnealedOptions& opt) {
    if (n_replicas < 2) throw std::invalid_argument("annealed_moments: n_replicas must be >= 2");
    sched.validate();
    const double coupling = coupling_of(p, sched);
    if (sched.mode == CouplingMode::weak_coupling && std::abs(m.eps - p.eps) > 1e-12 * p.eps)
        throw std::invalid_argument("annealed_moments: mollifier eps differs from model eps");
    if (coupling != 0.0) g.validate_for(m);
    else g.validate();

    const std::size_t nc = sched.checkpoints.size();
    AnnealedResult res;
    res.times = sched.checkpoints;
    res.n_replicas = n_replicas;
    res.coupling = coupling;
    res.samples.assign(kNumStatistics, std::vector<std::vector<double>>(nc, std::vector<double>(n_replicas)));
    std::vector<unsigned char> flagged(n_replicas, 0);
    std::vector<double> bookkeeping(n_replicas, 0.0);
    std::vector<std::size_t> substeps(n_replicas, 1);
    const unsigned threads = std::max(1u, opt.threads);
    std::vector<SpectralField> work(threads);

    parallel_for(n_replicas, threads, [&](unsigned w, std::size_t r) {
        const std::uint64_t env_seed = stream_seed(master_seed, r, StreamTag::field);
        const std::uint64_t noise_seed = stream_seed(master_seed, r, StreamTag::noise);
        Trajectory tr;
        if (coupling == 0.0) {
            tr = simulate_path(zero_drift(g.box_length), p, sched, noise_seed);
        } else {
            SpectralField& f = work[w];
            sample_field_into(f, g, m, env_seed);
            tr = simulate_path(drift_of(f, opt.interp), p, sched, noise_seed);
        }
        tr.replica_id = r;
        tr.env_seed = env_seed;
        flagged[r] = tr.flagged ? 1 : 0;
        bookkeeping[r] = tr.bookkeeping_error(p.nu);
        substeps[r] = tr.substeps;
        for (std::size_t k = 0; k < nc; ++k) {
            const Vec2& X = tr.X[k + 1];
            const Vec2& N = tr.N[k + 1];
            auto put = [&](Statistic s, double v) { res.samples[static_cast<int>(s)][k][r] = v; };
            put(Statistic::n_sq, N[0] * N[0] + N[1] * N[1]);
            put(Statistic::x_sq, X[0] * X[0] + X[1] * X[1]);
            put(Statistic::x1x2, X[0] * X[1]);
            put(Statistic::n1, N[0]);
            put(Statistic::n2, N[1]);
            put(Statistic::x1_sq, X[0] * X[0]);
            put(Statistic::x2_sq, X[1] * X[1]);
        }
    });

    for (std::size_t k = 0; k < nc; ++k)
        for (int s = 0; s < kNumStatistics; ++s) {
            const MeanSem ms = mean_sem(res.samples[s][k]);
            res.moments.push_back({res.times[k], static_cast<Statistic>(s), ms.mean, ms.sem, ms.n});
        }
    for (std::size_t r = 0; r < n_replicas; ++r) {
        res.flagged += flagged[r];
        res.bookkeeping_max = std::max(res.bookkeeping_max, bookkeeping[r]);
        res.max_substeps = std::max(res.max_substeps, substeps[r]);
    }
    res.flagged_fraction = static_cast<double>(res.flagged) / static_cast<double>(n_replicas);
    res.unreliable = res.flagged_fraction > 0.01;
    return res;
}

std::vector<SweepRow> weak_coupling_sweep(const std::vector<double>& eps_list, const ModelParams& p_base,
                                          const SimSchedule& sched, std::size_t n_replicas,
                                          std::uint64_t master_seed, const SweepOptions& opt) {
    sched.validate();
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        ModelParams p = p_base;
        p.eps = eps_list[i];
        p.validate();
        const double rate = effective_diffusivity(p).total_variance_rate;
        GridSpec g = default_grid(p.eps, rate, sched.t_final);
        if (opt.box_length) {
            g.box_length = *opt.box_length;
            g.grid_n = std::max<std::size_t>(next_pow2(static_cast<std::size_t>(std::ceil(8.0 * g.box_length / p.eps))), 16);
        }
        const MollifierSpec m = make_mollifier(opt.mollifier, p.eps);
        const SimSchedule s = make_schedule(sched.t_final, diffusive_dt(p.eps, p.nu, sched.t_final),
                                            sched.checkpoints, CouplingMode::weak_coupling);
        SweepRow row;
        row.eps = p.eps;
        row.grid = g;
        row.dt = s.dt;
        row.result = annealed_moments(p, g, m, s, n_replicas, stream_seed(master_seed, i, StreamTag::aux),
                                      AnnealedOptions{opt.threads, Interp::bilinear});
        const std::size_t last = row.result.times.size() - 1;
        const double T = row.result.times.back();
        const auto& nsq = row.result.at(last, Statistic::n_sq);
        const auto& xsq = row.result.at(last, Statistic::x_sq);
        const auto& x12 = row.result.at(last, Statistic::x1x2);
        row.n_rate = nsq.mean / T;
        row.n_rate_sem = nsq.sem / T;
        row.x_rate = xsq.mean / T;
        row.x_rate_sem = xsq.sem / T;
        row.x1x2 = x12.mean;
        row.x1x2_sem = x12.sem;
        std::vector<double> means;
        for (std::size_t k = 0; k <= last; ++k) means.push_back(row.result.at(k, Statistic::n_sq).mean);
        row.laplace_mc = p.lambda * T >= 3.0 ? mc_laplace_comparator(row.result.times, means, p.lambda)
                                             : std::numeric_limits<double>::quiet_NaN();
        if (opt.max_truncation >= 1) {
            const AnalyticTable tables = resolvent_tables(opt.max_truncation, p);
            for (int n = 1; n <= opt.max_truncation; ++n)
                row.truncated.push_back(4.0 / (p.lambda * p.lambda) *
                                        truncated_diffusivity(n, p, opt.quadrature, tables).value);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

SqrtLogFit fit_sqrt_log(const std::vector<double>& t, const std::vector<std::vector<double>>& ratios) {
    const std::size_t K = t.size();
    if (K < 2 || ratios.size() != K) throw std::invalid_argument("fit_sqrt_log: need >= 2 times");
    const std::size_t R = ratios.front().size();
    std::vector<double> s(K), ybar(K), ysem(K);
    double sbar = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        if (!(t[k] > 1.0)) throw std::invalid_argument("fit_sqrt_log: times must exceed 1");
        s[k] = std::sqrt(std::log(t[k]));
        sbar += s[k];
        const MeanSem ms = mean_sem(ratios[k]);
        ybar[k] = ms.mean;
        ysem[k] = ms.sem;
    }
    sbar /= static_cast<double>(K);
    double sxx = 0.0;
    for (double v : s) sxx += (v - sbar) * (v - sbar);
    if (!(sxx > 0.0)) throw std::invalid_argument("fit_sqrt_log: times must be distinct");
    std::vector<double> b_r(R);
    for (std::size_t r = 0; r < R; ++r) {
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) acc += (s[k] - sbar) / sxx * ratios[k][r];
        b_r[r] = acc;
    }
    const MeanSem bs = mean_sem(b_r);
    SqrtLogFit fit;
    fit.b = bs.mean;
    fit.b_sem = bs.sem;
    fit.b_lower95 = bs.mean - 1.6448536269514722 * bs.sem;
    double ym = 0.0;
    for (double v : ybar) ym += v;
    ym /= static_cast<double>(K);
    fit.a = ym - fit.b * sbar;
    double ss_res = 0.0, ss_tot = 0.0, chi2 = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double res = ybar[k] - fit.a - fit.b * s[k];
        ss_res += res * res;
        ss_tot += (ybar[k] - ym) * (ybar[k] - ym);
        if (ysem[k] > 0.0) chi2 += res * res / (ysem[k] * ysem[k]);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.chi2_per_dof = K > 2 ? chi2 / static_cast<double>(K - 2) : std::numeric_limits<double>::quiet_NaN();
    return fit;
}

SuperdiffResult superdiffusivity_scan(double lambda, double nu, const std::vector<double>& t_list,
                                      std::size_t n_replicas, std::uint64_t master_seed,
                                      const SuperdiffOptions& opt) {
    if (t_list.size() < 2) throw std::invalid_argument("superdiffusivity: need at least two times");
    if (!(lambda >= 0.0)) throw std::invalid_argument("superdiffusivity: lambda must be >= 0");
    if (!(nu > 0.0)) throw std::invalid_argument("superdiffusivity: nu must be > 0");
    std::vector<double> ts = t_list;
    std::sort(ts.begin(), ts.end());
    const double T = ts.back();
    ModelParams p;
    p.nu = nu;
    p.lambda_hat = lambda;
    p.eps = opt.field_eps;
    const MollifierSpec m = make_mollifier(opt.mollifier, opt.field_eps);
    GridSpec g;
    if (opt.grid) {
        g = *opt.grid;
    } else {
        ModelParams pr;
        pr.nu = nu;
        pr.lambda_hat = lambda;
        g = default_grid(opt.field_eps, effective_diffusivity(pr).total_variance_rate, T);
    }
    const double dt = opt.dt ? *opt.dt : diffusive_dt(opt.field_eps, nu, T);
    const SimSchedule sched = make_schedule(T, dt, ts, CouplingMode::fixed_coupling, lambda);

    SuperdiffResult out;
    out.grid = g;
    out.dt = sched.dt;
    out.result = annealed_moments(p, g, m, sched, n_replicas, master_seed, AnnealedOptions{opt.threads, Interp::bilinear});
    const auto& times = out.result.times;
    const std::size_t K = times.size();
    std::vector<std::vector<double>> ratios(K);
    for (std::size_t k = 0; k < K; ++k) {
        const auto& xs = out.result.samples[static_cast<int>(Statistic::x_sq)][k];
        ratios[k].resize(xs.size());
        for (std::size_t r = 0; r < xs.size(); ++r) ratios[k][r] = xs[r] / times[k];
        const MeanSem ms = mean_sem(ratios[k]);
        out.rows.push_back({times[k], ms.mean, ms.sem});
    }
    for (std::size_t k = 0; k + 1 < K; ++k) {
        std::vector<double> d(ratios[k].size());
        for (std::size_t r = 0; r < d.size(); ++r) d[r] = ratios[k + 1][r] - ratios[k][r];
        const MeanSem ms = mean_sem(d);
        out.pairs.push_back({times[k], times[k + 1], ms.mean, ms.sem, ms.mean >= -3.0 * ms.sem});
    }
    out.fit = fit_sqrt_log(times, ratios);
    return out;
}

}  // namespace gffdrift
