#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace acs::cli {

// Commands in pipeline order; "all" runs each of them into a subdirectory.
const std::vector<std::string>& commands();

// Defaults for a command, then the config file, then the flags (later wins).
// Throws ConfigError on unknown keys, malformed values or a bad surface file.
nlohmann::json resolve_config(const std::string& command, const nlohmann::json& file, const nlohmann::json& flags);

// Runs one command into out_dir. The manifest is written before any work and
// rewritten with the artifact list (or the error) at the end. Returns the
// process exit status: 0, 2 (configuration) or 3 (numerical failure).
int run(const std::string& command, const nlohmann::json& config, const std::string& out_dir);

// argv front end.
int run_cli(int argc, char** argv);

}  // namespace acs::cli
