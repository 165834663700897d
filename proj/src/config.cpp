#include "gffdrift/config.hpp"

#include "gffdrift/analytic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gffdrift {

namespace {

using nlohmann::json;

// Tracks consumed keys so leftovers can be reported as unknown.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw std::invalid_argument("config: '" + name() + "' must be an object");
    }

    ~Reader() = default;

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }

    const json& raw(const std::string& key) { return j_.at(key); }

    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void number(const std::string& key, double& out) {
        if (!has(key)) return;
        const json& v = raw(key);
        if (!v.is_number()) throw std::invalid_argument("config: '" + where(key) + "' must be a number");
        out = v.get<double>();
    }

    void number(const std::string& key, std::optional<double>& out) {
        if (!has(key)) return;
        double v = 0.0;
        number(key, v);
        out = v;
    }

    template <class U>
    void unsigned_int(const std::string& key, U& out) {
        if (!has(key)) return;
        const json& v = raw(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            throw std::invalid_argument("config: '" + where(key) + "' must be a non-negative integer");
        out = static_cast<U>(v.get<std::uint64_t>());
    }

    void integer(const std::string& key, int& out) {
        if (!has(key)) return;
        const json& v = raw(key);
        if (!v.is_number_integer()) throw std::invalid_argument("config: '" + where(key) + "' must be an integer");
        out = v.get<int>();
    }

    void string(const std::string& key, std::string& out) {
        if (!has(key)) return;
        const json& v = raw(key);
        if (!v.is_string()) throw std::invalid_argument("config: '" + where(key) + "' must be a string");
        out = v.get<std::string>();
    }

    void numbers(const std::string& key, std::vector<double>& out) {
        if (!has(key)) return;
        const json& v = raw(key);
        if (!v.is_array()) throw std::invalid_argument("config: '" + where(key) + "' must be an array");
        out.clear();
        for (const auto& e : v) {
            if (!e.is_number()) throw std::invalid_argument("config: '" + where(key) + "' must hold numbers");
            out.push_back(e.get<double>());
        }
    }

    void ints(const std::string& key, std::vector<int>& out) {
        if (!has(key)) return;
        const json& v = raw(key);
        if (!v.is_array()) throw std::invalid_argument("config: '" + where(key) + "' must be an array");
        out.clear();
        for (const auto& e : v) {
            if (!e.is_number_integer()) throw std::invalid_argument("config: '" + where(key) + "' must hold integers");
            out.push_back(e.get<int>());
        }
    }

    void points(const std::string& key, std::vector<Vec2>& out) {
        if (!has(key)) return;
        const json& v = raw(key);
        if (!v.is_array()) throw std::invalid_argument("config: '" + where(key) + "' must be an array");
        out.clear();
        for (const auto& e : v) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                throw std::invalid_argument("config: '" + where(key) + "' must hold [x, y] pairs");
            out.push_back({e[0].get<double>(), e[1].get<double>()});
        }
    }

    Reader child(const std::string& key) {
        seen_.insert(key);
        return Reader(j_.at(key), where(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw std::invalid_argument("config: unknown key '" + where(it.key()) + "'");
    }

private:
    std::string name() const { return path_.empty() ? "<root>" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_grid(Reader& r, GridOverride& g) {
    r.number("box_length", g.box_length);
    if (r.has("grid_n")) {
        std::size_t n = 0;
        r.unsigned_int("grid_n", n);
        g.grid_n = n;
    }
    r.finish();
}

json grid_json(const GridOverride& g) {
    json j = json::object();
    j["box_length"] = g.box_length ? json(*g.box_length) : json(nullptr);
    j["grid_n"] = g.grid_n ? json(*g.grid_n) : json(nullptr);
    return j;
}

json points_json(const std::vector<Vec2>& v) {
    json a = json::array();
    for (const auto& p : v) a.push_back({p[0], p[1]});
    return a;
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument("config: " + msg);
}

bool ascending_positive(const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!(v[i] > 0.0) || !std::isfinite(v[i]) || (i > 0 && !(v[i] > v[i - 1]))) return false;
    return true;
}

}  // namespace

void RunConfig::validate() const {
    model.validate();
    require(grid.box_length.value_or(1.0) > 0.0, "grid.box_length must be > 0");
    require(!grid.grid_n || *grid.grid_n >= 4, "grid.grid_n must be >= 4");
    require(schedule.t_final > 0.0 && std::isfinite(schedule.t_final), "schedule.t_final must be > 0");
    require(!schedule.dt || (*schedule.dt > 0.0 && *schedule.dt <= schedule.t_final),
            "schedule.dt must lie in (0, t_final]");
    require(ascending_positive(schedule.checkpoints), "schedule.checkpoints must be positive and ascending");
    require(schedule.checkpoints.empty() || schedule.checkpoints.back() <= schedule.t_final,
            "schedule.checkpoints must not exceed t_final");
    require(schedule.n_checkpoints >= 1, "schedule.n_checkpoints must be >= 1");
    require(schedule.fixed_lambda >= 0.0, "schedule.fixed_lambda must be >= 0");
    require(n_replicas >= 2, "n_replicas must be >= 2");
    require(threads >= 1, "threads must be >= 1");
    quadrature.validate();
    require(analytic.n_max >= 1 && analytic.n_max <= 200, "analytic.n_max must lie in [1, 200]");
    require(!analytic.x_max || *analytic.x_max > 0.0, "analytic.x_max must be > 0");
    require(analytic.grid_size >= 4, "analytic.grid_size must be >= 4");
    require(analytic.csv_points >= 2, "analytic.csv_points must be >= 2");
    require(analytic.truncation_max >= 1 && analytic.truncation_max <= 200,
            "analytic.truncation_max must lie in [1, 200]");
    require(sample_field.covariance_draws == 0 || sample_field.covariance_draws >= 2,
            "sample_field.covariance_draws must be 0 or >= 2");
    require(!sweep.eps_list.empty(), "sweep.eps_list must not be empty");
    for (double e : sweep.eps_list) require(e > 0.0 && e < 0.5, "sweep.eps_list entries must lie in (0, 1/2)");
    require(sweep.max_truncation >= 0, "sweep.max_truncation must be >= 0");
    const auto& sd = superdiffusivity;
    require(sd.lambda >= 0.0 && sd.nu > 0.0 && sd.field_eps > 0.0 && sd.field_eps <= 1.0,
            "superdiffusivity needs lambda >= 0, nu > 0, field_eps in (0, 1]");
    require(sd.t_list.size() >= 2 && ascending_positive(sd.t_list) && sd.t_list.front() > 1.0,
            "superdiffusivity.t_list needs >= 2 ascending times above 1");
    require(sd.n_replicas >= 2, "superdiffusivity.n_replicas must be >= 2");
    require(!sd.dt || *sd.dt > 0.0, "superdiffusivity.dt must be > 0");
    require(!resolvent.eps_list.empty(), "resolvent.eps_list must not be empty");
    for (double e : resolvent.eps_list) require(e > 0.0 && e < 0.5, "resolvent.eps_list entries must lie in (0, 1/2)");
    require(resolvent.n_max >= 1 && resolvent.n_max <= 200, "resolvent.n_max must lie in [1, 200]");
    for (int id : verify.criteria) require(id >= 1 && id <= 10, "verify.criteria ids must lie in [1, 10]");
    require(verify.c5_draws >= 2 && verify.c6_replicas >= 2 && verify.c7_replicas >= 2 && verify.c8_replicas >= 2,
            "verify sample counts must be >= 2");
    require(verify.c8_t_list.size() >= 2 && ascending_positive(verify.c8_t_list) && verify.c8_t_list.front() > 1.0,
            "verify.c8_t_list needs >= 2 ascending times above 1");
    require(inject_fault.empty() || inject_fault == "c_sq_offset", "inject_fault must be \"\" or \"c_sq_offset\"");
}

RunConfig config_from_json(const json& j) {
    RunConfig c;
    Reader r(j, "");
    if (r.has("model")) {
        Reader m = r.child("model");
        m.number("lambda_hat", c.model.lambda_hat);
        m.number("nu", c.model.nu);
        m.number("eps", c.model.eps);
        m.number("lambda", c.model.lambda);
        m.finish();
    }
    if (r.has("mollifier")) {
        std::string s;
        r.string("mollifier", s);
        c.mollifier = mollifier_kind_from_string(s);
    }
    if (r.has("grid")) {
        Reader g = r.child("grid");
        read_grid(g, c.grid);
    }
    if (r.has("schedule")) {
        Reader s = r.child("schedule");
        s.number("t_final", c.schedule.t_final);
        s.number("dt", c.schedule.dt);
        s.numbers("checkpoints", c.schedule.checkpoints);
        s.unsigned_int("n_checkpoints", c.schedule.n_checkpoints);
        if (s.has("mode")) {
            std::string mode;
            s.string("mode", mode);
            c.schedule.mode = coupling_mode_from_string(mode);
        }
        s.number("fixed_lambda", c.schedule.fixed_lambda);
        s.finish();
    }
    r.unsigned_int("n_replicas", c.n_replicas);
    r.unsigned_int("master_seed", c.master_seed);
    r.string("output_dir", c.output_dir);
    r.unsigned_int("threads", c.threads);
    if (r.has("quadrature")) {
        Reader q = r.child("quadrature");
        q.number("rel_tol", c.quadrature.rel_tol);
        q.unsigned_int("max_subdivisions", c.quadrature.max_subdivisions);
        if (q.has("substitution")) {
            std::string s;
            q.string("substitution", s);
            c.quadrature.substitution = substitution_from_string(s);
        }
        q.finish();
    }
    if (r.has("analytic")) {
        Reader a = r.child("analytic");
        a.integer("n_max", c.analytic.n_max);
        a.number("x_max", c.analytic.x_max);
        a.integer("grid_size", c.analytic.grid_size);
        a.integer("csv_points", c.analytic.csv_points);
        a.integer("truncation_max", c.analytic.truncation_max);
        a.finish();
    }
    if (r.has("sample_field")) {
        Reader s = r.child("sample_field");
        s.unsigned_int("covariance_draws", c.sample_field.covariance_draws);
        s.points("lags", c.sample_field.lags);
        s.finish();
    }
    if (r.has("sweep")) {
        Reader s = r.child("sweep");
        s.numbers("eps_list", c.sweep.eps_list);
        s.integer("max_truncation", c.sweep.max_truncation);
        s.finish();
    }
    if (r.has("superdiffusivity")) {
        Reader s = r.child("superdiffusivity");
        auto& sd = c.superdiffusivity;
        s.number("lambda", sd.lambda);
        s.number("nu", sd.nu);
        s.number("field_eps", sd.field_eps);
        s.numbers("t_list", sd.t_list);
        s.unsigned_int("n_replicas", sd.n_replicas);
        if (s.has("grid")) {
            Reader g = s.child("grid");
            read_grid(g, sd.grid);
        }
        s.number("dt", sd.dt);
        s.finish();
    }
    if (r.has("resolvent")) {
        Reader s = r.child("resolvent");
        s.numbers("eps_list", c.resolvent.eps_list);
        s.integer("n_max", c.resolvent.n_max);
        s.points("x_sums", c.resolvent.x_sums);
        s.finish();
    }
    if (r.has("verify")) {
        Reader v = r.child("verify");
        v.ints("criteria", c.verify.criteria);
        v.unsigned_int("c5_draws", c.verify.c5_draws);
        v.unsigned_int("c6_replicas", c.verify.c6_replicas);
        v.unsigned_int("c7_replicas", c.verify.c7_replicas);
        v.unsigned_int("c8_replicas", c.verify.c8_replicas);
        v.numbers("c8_t_list", c.verify.c8_t_list);
        v.finish();
    }
    r.string("inject_fault", c.inject_fault);
    r.finish();
    c.quadrature.mollifier = c.mollifier;
    c.validate();
    return c;
}

json config_to_json(const RunConfig& c) {
    json j;
    j["model"] = {{"lambda_hat", c.model.lambda_hat}, {"nu", c.model.nu}, {"eps", c.model.eps}, {"lambda", c.model.lambda}};
    j["mollifier"] = to_string(c.mollifier);
    j["grid"] = grid_json(c.grid);
    j["schedule"] = {{"t_final", c.schedule.t_final},
                     {"dt", c.schedule.dt ? json(*c.schedule.dt) : json(nullptr)},
                     {"checkpoints", c.schedule.checkpoints},
                     {"n_checkpoints", c.schedule.n_checkpoints},
                     {"mode", to_string(c.schedule.mode)},
                     {"fixed_lambda", c.schedule.fixed_lambda}};
    j["n_replicas"] = c.n_replicas;
    j["master_seed"] = c.master_seed;
    j["output_dir"] = c.output_dir;
    j["threads"] = c.threads;
    j["quadrature"] = {{"rel_tol", c.quadrature.rel_tol},
                       {"max_subdivisions", c.quadrature.max_subdivisions},
                       {"substitution", to_string(c.quadrature.substitution)}};
    j["analytic"] = {{"n_max", c.analytic.n_max},
                     {"x_max", c.analytic.x_max ? json(*c.analytic.x_max) : json(nullptr)},
                     {"grid_size", c.analytic.grid_size},
                     {"csv_points", c.analytic.csv_points},
                     {"truncation_max", c.analytic.truncation_max}};
    j["sample_field"] = {{"covariance_draws", c.sample_field.covariance_draws},
                         {"lags", points_json(c.sample_field.lags)}};
    j["sweep"] = {{"eps_list", c.sweep.eps_list}, {"max_truncation", c.sweep.max_truncation}};
    const auto& sd = c.superdiffusivity;
    j["superdiffusivity"] = {{"lambda", sd.lambda},
                             {"nu", sd.nu},
                             {"field_eps", sd.field_eps},
                             {"t_list", sd.t_list},
                             {"n_replicas", sd.n_replicas},
                             {"grid", grid_json(sd.grid)},
                             {"dt", sd.dt ? json(*sd.dt) : json(nullptr)}};
    j["resolvent"] = {{"eps_list", c.resolvent.eps_list},
                      {"n_max", c.resolvent.n_max},
                      {"x_sums", points_json(c.resolvent.x_sums)}};
    j["verify"] = {{"criteria", c.verify.criteria},
                   {"c5_draws", c.verify.c5_draws},
                   {"c6_replicas", c.verify.c6_replicas},
                   {"c7_replicas", c.verify.c7_replicas},
                   {"c8_replicas", c.verify.c8_replicas},
                   {"c8_t_list", c.verify.c8_t_list}};
    j["inject_fault"] = c.inject_fault;
    return j;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in, nullptr, true, false);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config: parse error in '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

std::string config_hash(const RunConfig& c) {
    json j = config_to_json(c);
    j.erase("threads");
    j.erase("output_dir");
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

GridSpec resolve_grid(const RunConfig& c) {
    const double rate = effective_diffusivity(c.model).total_variance_rate;
    GridSpec g = default_grid(c.model.eps, rate, c.schedule.t_final);
    if (c.grid.box_length) {
        g.box_length = *c.grid.box_length;
        g.grid_n = std::max<std::size_t>(
            next_pow2(static_cast<std::size_t>(std::ceil(8.0 * g.box_length / c.model.eps))), 16);
    }
    if (c.grid.grid_n) g.grid_n = *c.grid.grid_n;
    return g;
}

SimSchedule resolve_schedule(const RunConfig& c) {
    const double T = c.schedule.t_final;
    std::vector<double> cps = c.schedule.checkpoints;
    if (cps.empty())
        for (std::size_t k = 1; k <= c.schedule.n_checkpoints; ++k)
            cps.push_back(T * static_cast<double>(k) / static_cast<double>(c.schedule.n_checkpoints));
    const double dt = c.schedule.dt ? *c.schedule.dt : diffusive_dt(c.model.eps, c.model.nu, T);
    return make_schedule(T, dt, cps, c.schedule.mode, c.schedule.fixed_lambda);
}

GridSpec resolve_superdiff_grid(const RunConfig& c) {
    const auto& sd = c.superdiffusivity;
    ModelParams pr;
    pr.nu = sd.nu;
    pr.lambda_hat = sd.lambda;
    GridSpec g = default_grid(sd.field_eps, effective_diffusivity(pr).total_variance_rate, sd.t_list.back());
    if (sd.grid.box_length) {
        g.box_length = *sd.grid.box_length;
        g.grid_n = std::max<std::size_t>(
            next_pow2(static_cast<std::size_t>(std::ceil(8.0 * g.box_length / sd.field_eps))), 16);
    }
    if (sd.grid.grid_n) g.grid_n = *sd.grid.grid_n;
    return g;
}

}  // namespace gffdrift
