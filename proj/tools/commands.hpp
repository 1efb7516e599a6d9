// Subcommand drivers. Each returns the process exit code and throws on domain errors.
#pragma once

#include <iosfwd>
#include <string>

#include "run_config.hpp"

namespace qkdmon::cli {

int cmd_size_window(const RunConfig& cfg, std::ostream& out);
int cmd_simulate(const RunConfig& cfg, std::ostream& out);
int cmd_session(const RunConfig& cfg, std::ostream& out);
int cmd_sweep(const RunConfig& cfg, std::ostream& out);
int cmd_fit(const std::string& csv_path, const RunConfig& cfg, std::ostream& out);
int cmd_coverage(const RunConfig& cfg, std::ostream& out);

}  // namespace qkdmon::cli
