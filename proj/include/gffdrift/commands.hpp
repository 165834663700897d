#pragma once

#include "gffdrift/config.hpp"

#include <json.hpp>

#include <ostream>
#include <string>
#include <vector>

namespace gffdrift {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCheckFailed = 2;  // identity suite or acceptance criterion
inline constexpr int kExitUnreliable = 3;   // more than 1% of replicas left the box

struct CommandOutcome {
    int exit_code = kExitOk;
    std::vector<std::string> files;  // written, relative to output_dir
};

const std::vector<std::string>& command_names();

// L, N, dt and similar values the command would use; the dry run prints this.
nlohmann::json derived_defaults(const std::string& command, const RunConfig& cfg);

// Writes config.resolved.json and the command's outputs into cfg.output_dir.
// Progress and diff reports go to log. Throws on invalid input.
CommandOutcome run_command(const std::string& command, const RunConfig& cfg, bool dry_run, std::ostream& log);

CommandOutcome cmd_analytic(const RunConfig& cfg, std::ostream& log);
CommandOutcome cmd_sample_field(const RunConfig& cfg, std::ostream& log);
CommandOutcome cmd_simulate(const RunConfig& cfg, std::ostream& log);
CommandOutcome cmd_sweep(const RunConfig& cfg, std::ostream& log);
CommandOutcome cmd_superdiffusivity(const RunConfig& cfg, std::ostream& log);
CommandOutcome cmd_resolvent(const RunConfig& cfg, std::ostream& log);
CommandOutcome cmd_verify(const RunConfig& cfg, std::ostream& log);

}  // namespace gffdrift
