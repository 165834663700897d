#include "gffdrift/acceptance.hpp"
#include "gffdrift/commands.hpp"
#include "gffdrift/config.hpp"
#include "gffdrift/io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>

#include <sys/wait.h>

using namespace gffdrift;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("gffdrift_harness_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunConfig small() {
    RunConfig c;
    c.model.eps = 0.2;
    c.n_replicas = 16;
    c.schedule.t_final = 0.1;
    c.schedule.n_checkpoints = 4;
    c.grid.box_length = 3.2;
    c.resolvent.n_max = 2;
    return c;
}

}  // namespace

TEST(Config, StrictParsing) {
    EXPECT_THROW(config_from_json(json::parse(R"({"model": {"nuu": 1.0}})")), std::invalid_argument);
    EXPECT_THROW(config_from_json(json::parse(R"({"replicas": 10})")), std::invalid_argument);
    EXPECT_THROW(config_from_json(json::parse(R"({"n_replicas": "many"})")), std::invalid_argument);
    EXPECT_THROW(config_from_json(json::parse(R"({"n_replicas": -4})")), std::invalid_argument);
    EXPECT_THROW(config_from_json(json::parse(R"({"model": {"eps": 1.5}})")).validate(), std::invalid_argument);
    EXPECT_THROW(config_from_json(json::parse(R"({"mollifier": "tophat"})")), std::invalid_argument);
    const RunConfig c = config_from_json(json::parse(R"({"model": {"lambda_hat": 0.5}, "threads": 3})"));
    EXPECT_EQ(c.model.lambda_hat, 0.5);
    EXPECT_EQ(c.threads, 3u);
    EXPECT_EQ(c.model.nu, 1.0);
}

TEST(Config, RoundTripAndHash) {
    RunConfig c = small();
    c.schedule.checkpoints = {0.02, 0.05};
    c.superdiffusivity.grid.grid_n = 1024;
    const json j = config_to_json(c);
    const RunConfig back = config_from_json(j);
    EXPECT_EQ(config_to_json(back), j);
    EXPECT_EQ(config_hash(back), config_hash(c));
    EXPECT_EQ(config_hash(c).size(), 16u);

    RunConfig d = c;
    d.threads = 4;
    d.output_dir = "elsewhere";
    EXPECT_EQ(config_hash(d), config_hash(c));
    d.master_seed += 1;
    EXPECT_NE(config_hash(d), config_hash(c));
}

TEST(Config, ResolvedGridAndSchedule) {
    RunConfig c = small();
    const GridSpec g = resolve_grid(c);
    EXPECT_EQ(g.box_length, 3.2);
    EXPECT_EQ(g.grid_n, 128u);
    c.grid.grid_n = 256;
    EXPECT_EQ(resolve_grid(c).grid_n, 256u);
    const SimSchedule s = resolve_schedule(c);
    EXPECT_EQ(s.checkpoints.size(), 4u);
    EXPECT_EQ(s.checkpoints.back(), 0.1);
    EXPECT_LE(s.dt, 0.1 * 0.04 + 1e-15);
}

TEST(Io, CsvFormatting) {
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(fmt_num(0.1), "0.10000000000000001");
    EXPECT_EQ(fmt_num(std::nan("")), "nan");
    EXPECT_EQ(fmt_num(-1.0 / 0.0), "-inf");

    const fs::path dir = scratch("io");
    fs::create_directories(dir);
    write_csv((dir / "t.csv").string(), {"9.9", "abcd", 7, "demo"}, {"x", "label"}, {{"1", "a,b"}});
    EXPECT_EQ(slurp(dir / "t.csv"),
              "# gffdrift 9.9\n# command demo\n# config_hash abcd\n# master_seed 7\nx,label\n1,\"a,b\"\n");
    write_json((dir / "t.json").string(), {"9.9", "abcd", 7, "demo"}, json{{"v", 1}});
    const json j = json::parse(slurp(dir / "t.json"));
    EXPECT_EQ(j["meta"]["config_hash"], "abcd");
    EXPECT_EQ(j["v"], 1);
    fs::remove_all(dir);
}

TEST(Identities, HoldAndFaultIsDetected) {
    for (const auto& c : identity_suite(ModelParams{})) EXPECT_LE(c.rel, tolerance::identity_rel) << c.name;
    bool caught = false;
    for (const auto& c : identity_suite(ModelParams{}, "c_sq_offset")) caught |= c.rel > tolerance::identity_rel;
    EXPECT_TRUE(caught);
}

TEST(Commands, DryRunWritesNothing) {
    RunConfig c = small();
    c.output_dir = scratch("dry").string();
    std::ostringstream log;
    for (const auto& name : command_names()) {
        const auto res = run_command(name, c, true, log);
        EXPECT_EQ(res.exit_code, kExitOk);
        EXPECT_TRUE(res.files.empty());
    }
    EXPECT_FALSE(fs::exists(c.output_dir));
    const json d = json::parse(log.str().substr(0, log.str().find("\n}\n") + 2));
    EXPECT_EQ(d["command"], command_names().front());
    EXPECT_THROW(run_command("nonsense", c, true, log), std::invalid_argument);
}

TEST(Commands, AnalyticOutputs) {
    RunConfig c = small();
    c.analytic.n_max = 4;
    c.analytic.grid_size = 512;
    c.analytic.csv_points = 9;
    c.analytic.truncation_max = 3;
    c.output_dir = scratch("analytic").string();
    std::ostringstream log;
    const auto res = run_command("analytic", c, false, log);
    ASSERT_EQ(res.exit_code, kExitOk);
    const json k = json::parse(slurp(fs::path(c.output_dir) / "constants.json"));
    EXPECT_NEAR(k["c_sq"].get<double>(), 8.22403858144487753, 1e-12);
    EXPECT_EQ(k["meta"]["config_hash"], config_hash(c));
    std::istringstream csv(slurp(fs::path(c.output_dir) / "analytic.csv"));
    std::string line;
    int data = 0;
    bool header = false;
    while (std::getline(csv, line)) {
        if (line.rfind('#', 0) == 0) continue;
        if (!header) {
            EXPECT_EQ(line.rfind("x,G_1,G_2,G_3,G_4,", 0), 0u) << line;
            header = true;
        } else {
            ++data;
        }
    }
    EXPECT_EQ(data, 9);
    EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "config.resolved.json"));
    fs::remove_all(c.output_dir);
}

TEST(Commands, InjectedFaultFailsIdentitySuite) {
    RunConfig c = small();
    c.analytic.grid_size = 512;
    c.analytic.truncation_max = 2;
    c.inject_fault = "c_sq_offset";
    c.output_dir = scratch("fault").string();
    std::ostringstream log;
    const auto res = run_command("analytic", c, false, log);
    EXPECT_EQ(res.exit_code, kExitCheckFailed);
    EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "identity_diff.json"));
    EXPECT_FALSE(fs::exists(fs::path(c.output_dir) / "constants.json"));
    fs::remove_all(c.output_dir);
}

TEST(Commands, SimulateIsByteReproducibleAcrossThreads) {
    RunConfig c = small();
    std::ostringstream log;
    const fs::path root = scratch("repro");
    c.output_dir = (root / "a").string();
    const auto ra = run_command("simulate", c, false, log);
    c.output_dir = (root / "b").string();
    c.threads = 2;
    const auto rb = run_command("simulate", c, false, log);
    EXPECT_EQ(ra.exit_code, rb.exit_code);
    ASSERT_EQ(ra.files, rb.files);
    for (const auto& f : ra.files) EXPECT_EQ(slurp(root / "a" / f), slurp(root / "b" / f)) << f;
    fs::remove_all(root);
}

TEST(Acceptance, SummaryAndJsonShape) {
    AcceptanceOptions opt;
    opt.scale.criteria = {1, 2};
    std::vector<int> seen;
    const auto res = run_acceptance(opt, [&](const CriterionResult& r) { seen.push_back(r.id); });
    ASSERT_EQ(seen, (std::vector<int>{1, 2}));
    for (const auto& r : res) {
        EXPECT_TRUE(r.passed) << summary_line(r);
        EXPECT_EQ(summary_line(r).rfind("PASS", 0), 0u);
        const json j = criterion_json(r);
        EXPECT_EQ(j["id"], r.id);
        EXPECT_FALSE(j.contains("seconds"));
    }
    EXPECT_EQ(all_criteria().size(), 10u);
}

#ifdef GFFDRIFT_CLI
TEST(Cli, ExitCodes) {
    const fs::path dir = scratch("cli");
    const std::string exe = GFFDRIFT_CLI;
    auto code = [](const std::string& cmd) {
        const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    EXPECT_EQ(code(exe + " --version"), 0);
    EXPECT_NE(code(exe), 0);
    EXPECT_NE(code(exe + " bogus"), 0);
    EXPECT_EQ(code(exe + " analytic --dry-run"), 0);
    fs::create_directories(dir);
    {
        std::ofstream(dir / "bad.json") << R"({"model": {"lambda_hat": 1.0, "nuu": 1.0}})";
        std::ofstream(dir / "fault.json")
            << R"({"inject_fault": "c_sq_offset", "analytic": {"grid_size": 512, "truncation_max": 2}})";
    }
    EXPECT_EQ(code(exe + " --config " + (dir / "bad.json").string() + " analytic"), 1);
    EXPECT_EQ(code(exe + " --config " + (dir / "fault.json").string() + " --out " + (dir / "o").string() + " analytic"),
              2);
    EXPECT_NE(code(exe + " --threads 0 analytic --dry-run"), 0);
    fs::remove_all(dir);
}
#endif
