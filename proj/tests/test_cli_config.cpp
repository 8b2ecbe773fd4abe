#include <algorithm>
#include <filesystem>
#include <fstream>

#include "cli_config.hpp"
#include "doctest.h"
#include "latent_itr/errors.hpp"

using litr::ValidationError;
using litr::cli::config_tokens;
using litr::cli::expand_config;
using nlohmann::json;
using Tokens = std::vector<std::string>;

namespace {

std::string write_config(const std::string& text) {
  static int counter = 0;
  const auto path = std::filesystem::temp_directory_path() /
                    ("latent_itr_cfg_" + std::to_string(counter++) + ".json");
  std::ofstream(path) << text;
  return path.string();
}

}  // namespace

TEST_CASE("config tokens from scalars, booleans and arrays") {
  const json c = json::parse(R"({"seed": 7, "lr": 0.05, "standardize": true, "verbose": false,
                                 "outcome": ["a=y1", "b=y2"], "train": {"epochs": 3}, "simulate": {"n": 10}})");
  const Tokens t = config_tokens(c, "train");
  CHECK(t == Tokens{"--lr", "0.05", "--outcome", "a=y1", "--outcome", "b=y2", "--seed", "7", "--standardize",
                    "--epochs", "3"});
  const Tokens s = config_tokens(c, "simulate");
  CHECK(std::find(s.begin(), s.end(), "--n") != s.end());
  CHECK(std::find(s.begin(), s.end(), "--epochs") == s.end());
}

TEST_CASE("config tokens reject bad shapes") {
  CHECK_THROWS_AS(config_tokens(json::array(), "train"), ValidationError);
  CHECK_THROWS_AS(config_tokens(json::parse(R"({"config": "x.json"})"), "train"), ValidationError);
  CHECK_THROWS_AS(config_tokens(json::parse(R"({"train": {"hidden": {"a": 1}}})"), "train"), ValidationError);
  CHECK_THROWS_AS(config_tokens(json::parse(R"({"seed": null})"), "train"), ValidationError);
}

TEST_CASE("explicit flags win over the config file") {
  const auto path = write_config(R"({"seed": 3, "train": {"epochs": 2, "lr": 0.5}})");
  const Tokens out = expand_config({"train", "--config", path, "--seed", "9", "--lr=0.2"});
  std::filesystem::remove(path);
  CHECK(out == Tokens{"train", "--epochs", "2", "--config", path, "--seed", "9", "--lr=0.2"});
}

TEST_CASE("no config leaves arguments unchanged") {
  const Tokens args{"simulate", "--n", "10"};
  CHECK(expand_config(args) == args);
  CHECK(expand_config({}).empty());
}

TEST_CASE("unreadable or malformed config files are validation errors") {
  CHECK_THROWS_AS(expand_config({"train", "--config", "/nonexistent/latent_itr.json"}), ValidationError);
  const auto path = write_config("{not json");
  CHECK_THROWS_AS(expand_config({"train", "--config=" + path}), ValidationError);
  std::filesystem::remove(path);
}
