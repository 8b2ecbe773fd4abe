#include "cli_config.hpp"

#include <fstream>
#include <set>

#include "latent_itr/dataset_io.hpp"
#include "latent_itr/errors.hpp"

namespace litr::cli {
namespace {

using nlohmann::json;

std::string scalar_text(const json& value, const std::string& key) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return value.dump();
  if (value.is_number_float()) return format_double(value.get<double>());
  throw ValidationError("config key '" + key + "' must be a string, number or boolean");
}

void append_entry(const std::string& key, const json& value, std::vector<std::string>& out) {
  const std::string flag = "--" + key;
  if (value.is_boolean()) {
    if (value.get<bool>()) out.push_back(flag);
    return;
  }
  if (value.is_array()) {
    for (const json& v : value) {
      out.push_back(flag);
      out.push_back(scalar_text(v, key));
    }
    return;
  }
  out.push_back(flag);
  out.push_back(scalar_text(value, key));
}

std::string flag_name(const std::string& arg) {
  if (arg.size() < 3 || arg.compare(0, 2, "--") != 0) return {};
  return arg.substr(2, arg.find('=') == std::string::npos ? std::string::npos : arg.find('=') - 2);
}

}  // namespace

std::vector<std::string> config_tokens(const json& config, const std::string& command) {
  if (!config.is_object()) throw ValidationError("config file must hold a JSON object");
  std::vector<std::string> out;
  for (const auto& [key, value] : config.items()) {
    if (value.is_object()) continue;
    if (key == "config") throw ValidationError("config files cannot nest --config");
    append_entry(key, value, out);
  }
  if (auto it = config.find(command); it != config.end() && it->is_object()) {
    for (const auto& [key, value] : it->items()) {
      if (value.is_object()) throw ValidationError("config key '" + key + "' cannot be an object");
      if (key == "config") throw ValidationError("config files cannot nest --config");
      append_entry(key, value, out);
    }
  }
  return out;
}

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  if (args.empty()) return args;
  std::string path;
  std::set<std::string> user_keys;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string name = flag_name(args[i]);
    if (name.empty()) continue;
    user_keys.insert(name);
    if (name != "config") continue;
    if (const auto eq = args[i].find('='); eq != std::string::npos) {
      path = args[i].substr(eq + 1);
    } else if (i + 1 < args.size()) {
      path = args[i + 1];
    }
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  json config;
  try {
    config = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config file " + path + ": " + e.what());
  }
  const std::vector<std::string> tokens = config_tokens(config, args[0]);

  std::vector<std::string> out{args[0]};
  for (std::size_t i = 0; i < tokens.size();) {
    std::size_t next = i + 1;
    while (next < tokens.size() && flag_name(tokens[next]).empty()) ++next;
    if (!user_keys.contains(flag_name(tokens[i]))) {
      out.insert(out.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i),
                 tokens.begin() + static_cast<std::ptrdiff_t>(next));
    }
    i = next;
  }
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

}  // namespace litr::cli
