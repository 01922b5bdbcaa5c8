#pragma once

// Subcommand bodies behind the dirne executable. Each returns a JSON report
// and the process exit status; CSV output, when not written to a file, is
// returned in `csv`.

#include <filesystem>
#include <string>

#include "dirne/config.hpp"
#include "json.hpp"

namespace dirne {

enum ExitStatus : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitNoExpansion = 2,
    kExitConfig = 3,
    kExitNumerical = 4,
};

struct CommandResult {
    nlohmann::json report;
    int exit_code = kExitOk;
    std::string csv;
};

CommandResult cmd_certify(const Config& cfg);
CommandResult cmd_plan(const Config& cfg);
CommandResult cmd_simulate(const Config& cfg);
CommandResult cmd_score(const std::filesystem::path& tally_path);
CommandResult cmd_extract(const Config& cfg, bool oracle_check);
CommandResult cmd_curve(const Config& cfg);
CommandResult cmd_spacetime(const Config& cfg);

/// Runs one of the above by name and converts exceptions to exit statuses
/// (ConfigError and argument errors → 3, NumericalGuard → 4).
CommandResult dispatch(const std::string& command, const Config& cfg, const std::filesystem::path& tally_path = {},
                       bool oracle_check = false);

}  // namespace dirne
