#include "gffdrift/commands.hpp"

#include "gffdrift/acceptance.hpp"
#include "gffdrift/analytic.hpp"
#include "gffdrift/field.hpp"
#include "gffdrift/io.hpp"
#include "gffdrift/resolvent.hpp"
#include "gffdrift/rng.hpp"
#include "gffdrift/sde.hpp"

#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace gffdrift {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Context {
    const RunConfig& cfg;
    OutputMeta meta;
    fs::path dir;
    CommandOutcome outcome;

    Context(const RunConfig& c, const std::string& command)
        : cfg(c), meta{tool_version(), config_hash(c), c.master_seed, command}, dir(c.output_dir) {
        fs::create_directories(dir);
    }

    void csv(const std::string& name, const std::vector<std::string>& header,
             const std::vector<std::vector<std::string>>& rows) {
        write_csv((dir / name).string(), meta, header, rows);
        outcome.files.push_back(name);
    }

    void json_file(const std::string& name, json body) {
        write_json((dir / name).string(), meta, std::move(body));
        outcome.files.push_back(name);
    }
};

std::string num(double v) { return fmt_num(v); }
std::string num(std::size_t v) { return std::to_string(v); }

json persisted_config(const RunConfig& cfg) {
    json j = config_to_json(cfg);
    // run-environment keys; they never change the numbers
    j.erase("threads");
    j.erase("output_dir");
    return j;
}

double analytic_x_max(const RunConfig& cfg) {
    if (cfg.analytic.x_max) return *cfg.analytic.x_max;
    const double lh2 = cfg.model.lambda_hat * cfg.model.lambda_hat;
    return lh2 > 0.0 ? 2.0 * std::numbers::pi * lh2 : 1.0;
}

MollifierSpec model_mollifier(const RunConfig& cfg) { return make_mollifier(cfg.mollifier, cfg.model.eps); }

double model_coupling(const RunConfig& cfg) {
    return cfg.schedule.mode == CouplingMode::fixed_coupling ? cfg.schedule.fixed_lambda : cfg.model.weak_coupling();
}

GridSpec checked_grid(const RunConfig& cfg, bool need_field) {
    const GridSpec g = resolve_grid(cfg);
    if (need_field) g.validate_for(model_mollifier(cfg));
    else g.validate();
    return g;
}

json grid_json(const GridSpec& g) {
    return {{"box_length", g.box_length}, {"grid_n", g.grid_n}, {"spacing", g.spacing()}};
}

void moment_rows(std::vector<std::vector<std::string>>& rows, double eps, const AnnealedResult& r,
                 std::uint64_t seed) {
    for (std::size_t k = 0; k < r.times.size(); ++k)
        for (int s = 0; s < kNumStatistics; ++s) {
            const MomentEstimate& m = r.at(k, static_cast<Statistic>(s));
            rows.push_back({num(eps), num(m.t), to_string(m.statistic), num(m.mean), num(m.sem), num(m.n_samples),
                            num(r.flagged_fraction), std::to_string(seed)});
        }
}

const std::vector<std::string> kMomentHeader{"eps", "t", "stat", "mean", "sem", "n_samples", "flagged_fraction", "seed"};

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"analytic", "sample-field", "simulate", "sweep",
                                                "superdiffusivity", "resolvent", "verify"};
    return names;
}

json derived_defaults(const std::string& command, const RunConfig& cfg) {
    cfg.validate();
    json d;
    if (command == "analytic") {
        d["x_max"] = analytic_x_max(cfg);
        d["n_max"] = cfg.analytic.n_max;
    } else if (command == "sample-field") {
        const GridSpec g = checked_grid(cfg, true);
        d["grid"] = grid_json(g);
        d["field_seed"] = stream_seed(cfg.master_seed, 0, StreamTag::field);
    } else if (command == "simulate") {
        const double coupling = model_coupling(cfg);
        const GridSpec g = checked_grid(cfg, coupling != 0.0);
        const SimSchedule s = resolve_schedule(cfg);
        d["grid"] = grid_json(g);
        d["dt"] = s.dt;
        d["n_steps"] = s.n_steps();
        d["checkpoints"] = s.checkpoints;
        d["coupling"] = coupling;
    } else if (command == "sweep") {
        const SimSchedule s = resolve_schedule(cfg);
        json rows = json::array();
        for (double eps : cfg.sweep.eps_list) {
            RunConfig c = cfg;
            c.model.eps = eps;
            c.grid.grid_n.reset();
            const GridSpec g = checked_grid(c, c.model.lambda_hat != 0.0);
            const SimSchedule se = make_schedule(s.t_final, diffusive_dt(eps, c.model.nu, s.t_final), s.checkpoints);
            rows.push_back({{"eps", eps}, {"grid", grid_json(g)}, {"dt", se.dt}, {"coupling", c.model.weak_coupling()}});
        }
        d["per_eps"] = rows;
        d["checkpoints"] = s.checkpoints;
    } else if (command == "superdiffusivity") {
        const auto& sd = cfg.superdiffusivity;
        const GridSpec g = resolve_superdiff_grid(cfg);
        if (sd.lambda != 0.0) g.validate_for(make_mollifier(cfg.mollifier, sd.field_eps));
        const SimSchedule s = make_schedule(sd.t_list.back(), sd.dt.value_or(diffusive_dt(sd.field_eps, sd.nu, sd.t_list.back())),
                                            sd.t_list, CouplingMode::fixed_coupling, sd.lambda);
        d["grid"] = grid_json(g);
        d["dt"] = s.dt;
        d["n_steps"] = s.n_steps();
        d["checkpoints"] = s.checkpoints;
    } else if (command == "resolvent") {
        json xs = json::array();
        for (double eps : cfg.resolvent.eps_list) {
            ModelParams p = cfg.model;
            p.eps = eps;
            xs.push_back({{"eps", eps}, {"table_x_max", p.lambda_hat > 0.0 ? l_eps(p.lambda, p) : 1.0}});
        }
        d["tables"] = xs;
    } else if (command == "verify") {
        d["criteria"] = cfg.verify.criteria.empty() ? all_criteria() : cfg.verify.criteria;
    } else {
        throw std::invalid_argument("unknown command '" + command + "'");
    }
    return d;
}

CommandOutcome run_command(const std::string& command, const RunConfig& cfg, bool dry_run, std::ostream& log) {
    const json derived = derived_defaults(command, cfg);
    if (dry_run) {
        log << json{{"command", command}, {"config_hash", config_hash(cfg)}, {"derived", derived}}.dump(2) << '\n';
        return {};
    }
    fs::create_directories(cfg.output_dir);
    const OutputMeta meta{tool_version(), config_hash(cfg), cfg.master_seed, command};
    write_json((fs::path(cfg.output_dir) / "config.resolved.json").string(), meta,
               json{{"config", persisted_config(cfg)}, {"derived", derived}});
    CommandOutcome out;
    if (command == "analytic") out = cmd_analytic(cfg, log);
    else if (command == "sample-field") out = cmd_sample_field(cfg, log);
    else if (command == "simulate") out = cmd_simulate(cfg, log);
    else if (command == "sweep") out = cmd_sweep(cfg, log);
    else if (command == "superdiffusivity") out = cmd_superdiffusivity(cfg, log);
    else if (command == "resolvent") out = cmd_resolvent(cfg, log);
    else out = cmd_verify(cfg, log);
    out.files.insert(out.files.begin(), "config.resolved.json");
    return out;
}

CommandOutcome cmd_analytic(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    Context ctx(cfg, "analytic");
    const ModelParams& p = cfg.model;

    const auto checks = identity_suite(p, cfg.inject_fault);
    bool ok = true;
    json report = json::array();
    for (const auto& c : checks) {
        const bool pass = c.rel <= tolerance::identity_rel;
        ok = ok && pass;
        report.push_back({{"identity", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"rel_diff", c.rel},
                          {"tolerance", tolerance::identity_rel}, {"passed", pass}});
    }
    if (!ok) {
        log << "identity suite failed:\n";
        for (const auto& c : checks)
            log << fmt::format("  {:<42} lhs {:.17g}  rhs {:.17g}  rel {:.3e}\n", c.name, c.lhs, c.rhs, c.rel);
        ctx.json_file("identity_diff.json", json{{"identities", report}});
        ctx.outcome.exit_code = kExitCheckFailed;
        return ctx.outcome;
    }

    const int n = cfg.analytic.n_max;
    const double x_max = analytic_x_max(cfg);
    const AnalyticTable g = g_table(n, x_max, p, cfg.analytic.grid_size);
    const AnalyticTable s = s_table(n, x_max, p, cfg.analytic.grid_size);
    std::vector<std::string> header{"x"};
    for (int j = 1; j <= n; ++j) header.push_back("G_" + std::to_string(j));
    header.insert(header.end(), {"G_closed", "S_" + std::to_string(n), "S_closed"});
    std::vector<std::vector<std::string>> rows;
    const int K = cfg.analytic.csv_points;
    for (int k = 0; k < K; ++k) {
        const double x = k + 1 == K ? x_max : x_max * static_cast<double>(k) / static_cast<double>(K - 1);
        std::vector<std::string> r{num(x)};
        for (int j = 1; j <= n; ++j) r.push_back(num(g.at(j, x)));
        r.push_back(num(g_closed(x, p)));
        r.push_back(num(s.at(n, x)));
        r.push_back(num(s_closed(x, p)));
        rows.push_back(std::move(r));
    }
    ctx.csv("analytic.csv", header, rows);

    const Diffusivity d = effective_diffusivity(p);
    json trunc = json::array();
    for (int k = 1; k <= cfg.analytic.truncation_max; ++k)
        trunc.push_back({{"n", k}, {"value", truncated_limit(k, p)}});
    ctx.json_file("constants.json", json{{"model", {{"lambda_hat", p.lambda_hat}, {"nu", p.nu}, {"eps", p.eps}, {"lambda", p.lambda}}},
                                         {"c", d.c},
                                         {"c_sq", d.c_sq},
                                         {"total_variance_rate", d.total_variance_rate},
                                         {"laplace_limit", laplace_limit(p)},
                                         {"truncated_limits", trunc},
                                         {"identities", report}});
    log << fmt::format("c = {:.12g}, c^2 = {:.12g}\n", d.c, d.c_sq);
    return ctx.outcome;
}

CommandOutcome cmd_sample_field(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    Context ctx(cfg, "sample-field");
    const GridSpec g = checked_grid(cfg, true);
    const MollifierSpec m = model_mollifier(cfg);
    const std::uint64_t seed = stream_seed(cfg.master_seed, 0, StreamTag::field);
    const SpectralField f = sample_field(g, m, seed);
    write_snapshot(f, (ctx.dir / "field.bin").string());
    ctx.outcome.files.push_back("field.bin");
    ctx.json_file("field_meta.json", json{{"snapshot", "field.bin"},
                                          {"grid", grid_json(g)},
                                          {"eps", m.eps},
                                          {"mollifier", to_string(m.kind)},
                                          {"field_seed", seed},
                                          {"max_norm", f.max_norm},
                                          {"fourier_divergence_max", f.fourier_divergence_max}});
    if (cfg.sample_field.covariance_draws > 0) {
        const auto emp = empirical_covariance(cfg.sample_field.covariance_draws, g, m, cfg.sample_field.lags,
                                              cfg.master_seed, {}, cfg.threads);
        std::vector<std::vector<std::string>> rows;
        for (const auto& e : emp.pooled) {
            const Mat2 th = theoretical_covariance(m, e.lag);
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    rows.push_back({num(e.lag[0]), num(e.lag[1]), fmt::format("C{}{}", i + 1, j + 1),
                                    num(e.mean[i][j]), num(e.sem[i][j]), num(th[i][j]), num(emp.n_fields)});
        }
        ctx.csv("covariance.csv", {"lag_x", "lag_y", "entry", "empirical", "sem", "theory", "n_fields"}, rows);
    }
    log << fmt::format("field L = {} N = {} max|omega| = {:.6g}\n", g.box_length, g.grid_n, f.max_norm);
    return ctx.outcome;
}

CommandOutcome cmd_simulate(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    Context ctx(cfg, "simulate");
    const ModelParams& p = cfg.model;
    const double coupling = model_coupling(cfg);
    const GridSpec g = checked_grid(cfg, coupling != 0.0);
    const SimSchedule s = resolve_schedule(cfg);
    const AnnealedResult r = annealed_moments(p, g, model_mollifier(cfg), s, cfg.n_replicas, cfg.master_seed,
                                              AnnealedOptions{cfg.threads, Interp::bilinear});
    std::vector<std::vector<std::string>> rows;
    moment_rows(rows, p.eps, r, cfg.master_seed);
    ctx.csv("moments.csv", kMomentHeader, rows);

    std::vector<std::vector<std::string>> comp;
    const std::size_t last = r.times.size() - 1;
    const double T = r.times.back();
    const auto& nsq = r.at(last, Statistic::n_sq);
    comp.push_back({"n_rate_mc", "0", num(p.eps), num(p.lambda), num(nsq.mean / T), num(nsq.sem / T)});
    std::vector<double> means;
    for (std::size_t k = 0; k <= last; ++k) means.push_back(r.at(k, Statistic::n_sq).mean);
    const double lap = p.lambda * T >= 3.0 ? mc_laplace_comparator(r.times, means, p.lambda) : kNaN;
    comp.push_back({"laplace_mc", "0", num(p.eps), num(p.lambda), num(lap), num(kNaN)});
    if (cfg.schedule.mode == CouplingMode::weak_coupling) {
        const AnalyticTable tables = resolvent_tables(cfg.resolvent.n_max, p);
        for (int n = 1; n <= cfg.resolvent.n_max; ++n) {
            const auto v = truncated_diffusivity(n, p, cfg.quadrature, tables);
            comp.push_back({"laplace_truncated", std::to_string(n), num(p.eps), num(p.lambda),
                            num(4.0 / (p.lambda * p.lambda) * v.value), num(4.0 / (p.lambda * p.lambda) * v.est_error)});
        }
        comp.push_back({"laplace_limit", "0", num(p.eps), num(p.lambda), num(laplace_limit(p)), num(0.0)});
    }
    ctx.csv("comparators.csv", {"quantity", "n", "eps", "lambda", "value", "sem"}, comp);

    log << fmt::format("replicas {} flagged {} bookkeeping {:.3e} substeps {}\n", r.n_replicas, r.flagged,
                       r.bookkeeping_max, r.max_substeps);
    if (r.unreliable) {
        log << "warning: more than 1% of replicas left the central quarter of the box\n";
        ctx.outcome.exit_code = kExitUnreliable;
    }
    return ctx.outcome;
}

CommandOutcome cmd_sweep(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    Context ctx(cfg, "sweep");
    const SimSchedule s = resolve_schedule(cfg);
    SweepOptions opt;
    opt.threads = cfg.threads;
    opt.max_truncation = cfg.sweep.max_truncation;
    opt.box_length = cfg.grid.box_length;
    opt.quadrature = cfg.quadrature;
    opt.mollifier = cfg.mollifier;
    const auto rows = weak_coupling_sweep(cfg.sweep.eps_list, cfg.model, s, cfg.n_replicas, cfg.master_seed, opt);

    std::vector<std::string> header{"eps", "box_length", "grid_n", "dt", "n_replicas", "flagged_fraction",
                                    "n_rate", "n_rate_sem", "x_rate", "x_rate_sem", "x1x2", "x1x2_sem",
                                    "lambda", "laplace_mc"};
    for (int n = 1; n <= cfg.sweep.max_truncation; ++n) header.push_back("laplace_truncated_" + std::to_string(n));
    std::vector<std::vector<std::string>> out, moments;
    bool unreliable = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const SweepRow& r = rows[i];
        std::vector<std::string> line{num(r.eps), num(r.grid.box_length), num(r.grid.grid_n), num(r.dt),
                                      num(r.result.n_replicas), num(r.result.flagged_fraction),
                                      num(r.n_rate), num(r.n_rate_sem), num(r.x_rate), num(r.x_rate_sem),
                                      num(r.x1x2), num(r.x1x2_sem), num(cfg.model.lambda), num(r.laplace_mc)};
        for (double v : r.truncated) line.push_back(num(v));
        out.push_back(std::move(line));
        moment_rows(moments, r.eps, r.result, stream_seed(cfg.master_seed, i, StreamTag::aux));
        unreliable = unreliable || r.result.unreliable;
        log << fmt::format("eps {} N {} flagged {:.4f}\n", r.eps, r.grid.grid_n, r.result.flagged_fraction);
    }
    ctx.csv("sweep.csv", header, out);
    ctx.csv("moments.csv", kMomentHeader, moments);
    if (unreliable) {
        log << "warning: at least one eps had more than 1% flagged replicas\n";
        ctx.outcome.exit_code = kExitUnreliable;
    }
    return ctx.outcome;
}

CommandOutcome cmd_superdiffusivity(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    Context ctx(cfg, "superdiffusivity");
    const auto& sd = cfg.superdiffusivity;
    SuperdiffOptions opt;
    opt.threads = cfg.threads;
    opt.field_eps = sd.field_eps;
    opt.grid = resolve_superdiff_grid(cfg);
    opt.dt = sd.dt;
    opt.mollifier = cfg.mollifier;
    const SuperdiffResult r = superdiffusivity_scan(sd.lambda, sd.nu, sd.t_list, sd.n_replicas, cfg.master_seed, opt);

    std::vector<std::vector<std::string>> rows, pairs;
    for (const auto& row : r.rows)
        rows.push_back({num(row.t), num(row.ratio), num(row.sem), num(r.result.n_replicas), num(r.result.flagged_fraction)});
    ctx.csv("superdiffusivity.csv", {"t", "ratio", "sem", "n_samples", "flagged_fraction"}, rows);
    for (const auto& pc : r.pairs)
        pairs.push_back({num(pc.t_lo), num(pc.t_hi), num(pc.diff), num(pc.diff_sem), pc.non_decreasing ? "1" : "0"});
    ctx.csv("superdiffusivity_pairs.csv", {"t_lo", "t_hi", "diff", "diff_sem", "non_decreasing"}, pairs);
    ctx.json_file("superdiffusivity_fit.json",
                  json{{"model", "a + b sqrt(log t)"},
                       {"a", r.fit.a}, {"b", r.fit.b}, {"b_sem", r.fit.b_sem}, {"b_lower95", r.fit.b_lower95},
                       {"r_squared", r.fit.r_squared}, {"chi2_per_dof", r.fit.chi2_per_dof},
                       {"grid", grid_json(r.grid)}, {"dt", r.dt},
                       {"flagged_fraction", r.result.flagged_fraction}, {"max_substeps", r.result.max_substeps}});
    log << fmt::format("b = {:.6g} +- {:.3g}\n", r.fit.b, r.fit.b_sem);
    if (r.result.unreliable) {
        log << "warning: more than 1% of replicas left the central quarter of the box\n";
        ctx.outcome.exit_code = kExitUnreliable;
    }
    return ctx.outcome;
}

CommandOutcome cmd_resolvent(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    Context ctx(cfg, "resolvent");
    std::vector<std::vector<std::string>> rows, res;
    const ScalarFn one = [](double) { return 1.0; };
    for (double eps : cfg.resolvent.eps_list) {
        ModelParams p = cfg.model;
        p.eps = eps;
        const auto base = base_diffusivity(p, cfg.quadrature);
        rows.push_back({num(eps), num(p.lambda), "0", num(base.value), num(base.est_error), num(truncated_limit(1, p))});
        const AnalyticTable tables = resolvent_tables(cfg.resolvent.n_max, p);
        for (int n = 1; n <= cfg.resolvent.n_max; ++n) {
            const auto v = truncated_diffusivity(n, p, cfg.quadrature, tables);
            rows.push_back({num(eps), num(p.lambda), std::to_string(n), num(v.value), num(v.est_error),
                            num(truncated_limit(n, p))});
        }
        for (const Vec2& xs : cfg.resolvent.x_sums) {
            const auto parts = replacement_residual_parts(p, xs, one, one, cfg.quadrature);
            res.push_back({num(eps), num(xs[0]), num(xs[1]), num(parts.two_d), num(parts.one_d), num(parts.residual)});
        }
        log << fmt::format("eps {:g} base {:.8g}\n", eps, base.value);
    }
    ctx.csv("resolvent.csv", {"eps", "lambda", "n", "value", "est_error", "limit"}, rows);
    ctx.csv("residual.csv", {"eps", "x_sum_1", "x_sum_2", "two_d", "one_d", "residual"}, res);
    return ctx.outcome;
}

CommandOutcome cmd_verify(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    Context ctx(cfg, "verify");
    AcceptanceOptions opt;
    opt.master_seed = cfg.master_seed;
    opt.threads = cfg.threads;
    opt.scale = cfg.verify;
    opt.inject_fault = cfg.inject_fault;
    opt.scratch_dir = (ctx.dir / "scratch").string();
    bool all = true;
    json crit = json::array();
    run_acceptance(opt, [&](const CriterionResult& r) {
        log << summary_line(r) << '\n' << std::flush;
        all = all && r.passed;
        crit.push_back(criterion_json(r));
    });
    std::error_code ec;
    fs::remove_all(opt.scratch_dir, ec);
    ctx.json_file("verify.json", json{{"schema_version", 1},
                                      {"passed", all},
                                      {"run", {{"master_seed", cfg.master_seed}, {"config_hash", ctx.meta.config_hash},
                                               {"tool_version", ctx.meta.tool_version}}},
                                      {"criteria", crit}});
    if (!all) ctx.outcome.exit_code = kExitCheckFailed;
    return ctx.outcome;
}

}  // namespace gffdrift
