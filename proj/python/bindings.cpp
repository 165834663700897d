#include "gffdrift/acceptance.hpp"
#include "gffdrift/analytic.hpp"
#include "gffdrift/commands.hpp"
#include "gffdrift/config.hpp"
#include "gffdrift/field.hpp"
#include "gffdrift/io.hpp"
#include "gffdrift/resolvent.hpp"
#include "gffdrift/sde.hpp"

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace gffdrift;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::array_t<double> to_array(const std::vector<std::vector<double>>& rows) {
    const std::size_t m = rows.size(), n = rows.empty() ? 0 : rows.front().size();
    py::array_t<double> out({m, n});
    auto w = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < n; ++k) w(i, k) = rows[i][k];
    return out;
}

RunConfig config_from_py(const py::object& cfg) {
    if (cfg.is_none()) return config_from_json(nlohmann::json::object());
    const std::string text = py::module_::import("json").attr("dumps")(cfg).cast<std::string>();
    return config_from_json(nlohmann::json::parse(text));
}

py::dict table_dict(const AnalyticTable& t) {
    py::dict d;
    d["x"] = to_array(t.x_grid);
    d["values"] = to_array(t.values);
    d["first_index"] = t.first_index;
    return d;
}

}  // namespace

PYBIND11_MODULE(_gffdrift, m) {
    m.doc() = "Bindings for the gffdrift C++ core";
    m.attr("__version__") = tool_version();

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init([](double lambda_hat, double nu, double eps, double lambda) {
                 ModelParams p{lambda_hat, nu, eps, lambda};
                 p.validate();
                 return p;
             }),
             py::arg("lambda_hat") = 1.0, py::arg("nu") = 1.0, py::arg("eps") = 0.1, py::arg("lambda_") = 1.0)
        .def_readwrite("lambda_hat", &ModelParams::lambda_hat)
        .def_readwrite("nu", &ModelParams::nu)
        .def_readwrite("eps", &ModelParams::eps)
        .def_readwrite("lambda_", &ModelParams::lambda)
        .def("weak_coupling", &ModelParams::weak_coupling)
        .def("__repr__", [](const ModelParams& p) {
            std::ostringstream s;
            s << "ModelParams(lambda_hat=" << p.lambda_hat << ", nu=" << p.nu << ", eps=" << p.eps
              << ", lambda_=" << p.lambda << ")";
            return s.str();
        });

    // analytic
    m.def("l_eps", &l_eps, py::arg("x"), py::arg("params"));
    m.def("g_closed", &g_closed, py::arg("x"), py::arg("params"));
    m.def("s_closed", &s_closed, py::arg("x"), py::arg("params"));
    m.def("s_n", &s_n, py::arg("n"), py::arg("x"), py::arg("params"));
    m.def("laplace_limit", &laplace_limit, py::arg("params"));
    m.def("truncated_limit", &truncated_limit, py::arg("n"), py::arg("params"));
    m.def("effective_diffusivity", [](const ModelParams& p) {
        const Diffusivity d = effective_diffusivity(p);
        return py::dict(py::arg("c") = d.c, py::arg("c_sq") = d.c_sq,
                        py::arg("total_variance_rate") = d.total_variance_rate);
    }, py::arg("params"));
    m.def("g_table", [](int n_max, double x_max, const ModelParams& p, int grid_size) {
        return table_dict(g_table(n_max, x_max, p, grid_size));
    }, py::arg("n_max"), py::arg("x_max"), py::arg("params"), py::arg("grid_size") = kDefaultGridSize);
    m.def("identity_suite", [](const ModelParams& p) {
        py::list out;
        for (const auto& c : identity_suite(p))
            out.append(py::dict(py::arg("name") = c.name, py::arg("lhs") = c.lhs, py::arg("rhs") = c.rhs,
                                py::arg("rel") = c.rel));
        return out;
    }, py::arg("params"));

    // field
    m.def("sample_field", [](double box_length, std::size_t grid_n, double eps, std::uint64_t seed,
                             const std::string& mollifier) {
        const auto f = sample_field(GridSpec{box_length, grid_n},
                                    make_mollifier(mollifier_kind_from_string(mollifier), eps), seed);
        py::array_t<double> out({grid_n, grid_n, std::size_t{2}});
        double* w = out.mutable_data();
        for (const auto& v : f.values) {
            *w++ = v[0];
            *w++ = v[1];
        }
        return out;
    }, py::arg("box_length"), py::arg("grid_n"), py::arg("eps"), py::arg("seed"),
       py::arg("mollifier") = "compact_bump",
       "Values indexed [iy, ix, component] on the periodic grid.");
    m.def("theoretical_covariance", [](double eps, std::array<double, 2> lag, const std::string& mollifier) {
        return theoretical_covariance(make_mollifier(mollifier_kind_from_string(mollifier), eps), lag);
    }, py::arg("eps"), py::arg("lag"), py::arg("mollifier") = "compact_bump");

    // sde
    m.def("annealed_moments", [](const ModelParams& p, double box_length, std::size_t grid_n, double t_final,
                                 std::vector<double> checkpoints, std::size_t n_replicas, std::uint64_t seed,
                                 unsigned threads) {
        const auto sched = make_schedule(t_final, diffusive_dt(p.eps, p.nu, t_final), std::move(checkpoints));
        AnnealedResult r;
        {
            py::gil_scoped_release release;
            r = annealed_moments(p, GridSpec{box_length, grid_n}, make_mollifier(MollifierKind::compact_bump, p.eps),
                                 sched, n_replicas, seed, AnnealedOptions{threads, Interp::bilinear});
        }
        py::dict stats;
        for (int s = 0; s < kNumStatistics; ++s) {
            std::vector<double> mean, sem;
            for (std::size_t k = 0; k < r.times.size(); ++k) {
                mean.push_back(r.at(k, static_cast<Statistic>(s)).mean);
                sem.push_back(r.at(k, static_cast<Statistic>(s)).sem);
            }
            stats[py::str(to_string(static_cast<Statistic>(s)))] =
                py::dict(py::arg("mean") = to_array(mean), py::arg("sem") = to_array(sem));
        }
        return py::dict(py::arg("times") = to_array(r.times), py::arg("stats") = stats,
                        py::arg("flagged_fraction") = r.flagged_fraction,
                        py::arg("bookkeeping_max") = r.bookkeeping_max, py::arg("dt") = sched.dt);
    }, py::arg("params"), py::arg("box_length"), py::arg("grid_n"), py::arg("t_final"),
       py::arg("checkpoints") = std::vector<double>{}, py::arg("n_replicas") = 100, py::arg("seed") = 0,
       py::arg("threads") = 1);

    // resolvent
    m.def("base_diffusivity", [](const ModelParams& p, double rel_tol) {
        QuadratureSpec q;
        q.rel_tol = rel_tol;
        return base_diffusivity(p, q).value;
    }, py::arg("params"), py::arg("rel_tol") = 1e-8);
    m.def("truncated_diffusivity", [](int n, const ModelParams& p, double rel_tol) {
        QuadratureSpec q;
        q.rel_tol = rel_tol;
        return truncated_diffusivity(n, p, q).value;
    }, py::arg("n"), py::arg("params"), py::arg("rel_tol") = 1e-8);
    m.def("mc_laplace_comparator", &mc_laplace_comparator, py::arg("times"), py::arg("values"), py::arg("lambda_"));
    m.def("replacement_residual", [](const ModelParams& p, std::array<double, 2> x_sum, const ScalarFn& h,
                                     const ScalarFn& h_plus) {
        const auto r = replacement_residual_parts(p, x_sum, h, h_plus);
        return py::dict(py::arg("two_d") = r.two_d, py::arg("one_d") = r.one_d, py::arg("residual") = r.residual);
    }, py::arg("params"), py::arg("x_sum"), py::arg("h"), py::arg("h_plus"));

    // harness
    m.def("command_names", &command_names);
    m.def("config_hash", [](const py::object& cfg) { return config_hash(config_from_py(cfg)); },
          py::arg("config") = py::none());
    m.def("run_command", [](const std::string& command, const py::object& cfg, bool dry_run) {
        const RunConfig c = config_from_py(cfg);
        c.validate();
        std::ostringstream log;
        CommandOutcome res;
        {
            py::gil_scoped_release release;
            res = run_command(command, c, dry_run, log);
        }
        return py::make_tuple(res.exit_code, res.files, log.str());
    }, py::arg("command"), py::arg("config") = py::none(), py::arg("dry_run") = false,
       "Returns (exit_code, files written relative to output_dir, log text).");
    m.def("run_criterion", [](int id, std::uint64_t seed) {
        AcceptanceOptions opt;
        opt.master_seed = seed;
        CriterionResult r;
        {
            py::gil_scoped_release release;
            r = run_criterion(id, opt);
        }
        return py::dict(py::arg("passed") = r.passed, py::arg("summary") = summary_line(r),
                        py::arg("json") = criterion_json(r).dump());
    }, py::arg("id"), py::arg("seed") = 20240611);
}
