#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace litr::cli {

// Turns a JSON config file into flag tokens. Top-level scalar and array
// entries apply to every command; an object keyed by the command name applies
// to that command only. Keys become "--key"; true booleans become bare flags,
// false ones are dropped, and arrays repeat the flag.
std::vector<std::string> config_tokens(const nlohmann::json& config, const std::string& command);

// Inserts tokens from the file named by --config ahead of the user's own
// arguments, skipping any key the user set explicitly. `args` excludes the
// program name; args[0] is the command.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

}  // namespace litr::cli
