#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli_config.hpp"
#include "json.hpp"
#include "latent_itr/dataset_io.hpp"
#include "latent_itr/errors.hpp"
#include "latent_itr/evaluation.hpp"
#include "latent_itr/inference.hpp"
#include "latent_itr/kernels.hpp"
#include "latent_itr/model_io.hpp"
#include "latent_itr/simulator.hpp"
#include "latent_itr/trainer.hpp"
#include "latent_itr/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace litr::cli {
namespace {

struct Shared {
  std::string config;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
};

struct TrainFlags {
  int k = 3;
  int epochs = 6;
  int iterations = 6;
  double lr = 0.1;
  int batch_size = 0;
  std::string hidden = "20,10";
  std::string anchors;
  bool standardize = false;
  std::string aggregate = "sum";
  std::string weights_file;
  std::string direction = "minimize";
};

void add_shared(CLI::App* cmd, Shared& s, bool out_required) {
  cmd->add_option("--config", s.config, "JSON config file; explicit flags override it");
  cmd->add_option("--seed", s.seed, "Top-level random seed");
  cmd->add_option("--threads", s.threads, "Worker threads (0: runtime default)");
  auto* out = cmd->add_option("--out", s.out, "Output file");
  if (out_required) out->required();
}

void add_train_flags(CLI::App* cmd, TrainFlags& t) {
  cmd->add_option("--k", t.k, "Number of latent domains");
  cmd->add_option("--epochs", t.epochs, "Adam epochs per outer iteration");
  cmd->add_option("--iterations", t.iterations, "Outer alternation iterations");
  cmd->add_option("--lr", t.lr, "Adam learning rate");
  cmd->add_option("--batch-size", t.batch_size, "Mini-batch size (0: automatic)");
  cmd->add_option("--hidden", t.hidden, "Shared hidden layer widths, comma separated");
  cmd->add_option("--anchors", t.anchors,
                  "Anchors as domain:item:+1|-1, comma separated (default: item k on domain k)");
  cmd->add_flag("--standardize", t.standardize, "Standardise continuous items before fitting");
  cmd->add_option("--aggregate", t.aggregate, "Aggregate source: sum, model_scores or file")
      ->check(CLI::IsMember({"sum", "model_scores", "file"}));
  cmd->add_option("--weights-file", t.weights_file, "JSON array of aggregate weights");
  cmd->add_option("--direction", t.direction, "Whether larger outcomes are better")
      ->check(CLI::IsMember({"minimize", "maximize"}));
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, sep)) parts.push_back(part);
  return parts;
}

int parse_int(const std::string& text, const std::string& what) {
  const auto v = parse_double(text);
  if (!v || *v != static_cast<double>(static_cast<int>(*v))) {
    throw ValidationError(what + ": expected an integer, got '" + text + "'");
  }
  return static_cast<int>(*v);
}

TrainingConfig training_config(const TrainFlags& t, std::uint64_t seed, const ItemSchema& schema) {
  TrainingConfig c;
  c.latent_dim = t.k;
  c.epochs_per_iteration = t.epochs;
  c.outer_iterations = t.iterations;
  c.learning_rate = t.lr;
  c.batch_size = t.batch_size;
  c.seed = seed;
  c.standardize_continuous = t.standardize;
  c.hidden_widths.clear();
  for (const auto& w : split(t.hidden, ',')) c.hidden_widths.push_back(parse_int(w, "--hidden"));
  for (const auto& entry : split(t.anchors, ',')) {
    const auto fields = split(entry, ':');
    if (fields.size() != 3) throw ValidationError("--anchors: expected domain:item:direction, got '" + entry + "'");
    const auto item = schema.find(fields[1]);
    if (!item) throw ValidationError("--anchors: unknown item '" + fields[1] + "'");
    c.anchors.push_back({parse_int(fields[0], "--anchors"), static_cast<int>(*item),
                         parse_int(fields[2], "--anchors")});
  }
  if (c.outer_iterations < 1) throw ValidationError("--iterations must be at least 1");
  c.validate(schema);
  return c;
}

PolicySettings policy_settings(const TrainFlags& t) {
  PolicySettings s;
  s.direction = parse_direction(t.direction);
  if (t.aggregate == "model_scores") {
    s.source = AggregateSource::kModelScores;
  } else if (t.aggregate == "file") {
    if (t.weights_file.empty()) throw ValidationError("--aggregate file needs --weights-file");
    std::ifstream in(t.weights_file);
    if (!in) throw ValidationError("cannot open weights file " + t.weights_file);
    try {
      s.weights = json::parse(in).get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ValidationError("weights file: " + std::string(e.what()));
    }
    s.source = AggregateSource::kWeights;
  } else if (!t.weights_file.empty()) {
    throw ValidationError("--weights-file is only used with --aggregate file");
  }
  return s;
}

json train_flags_json(const TrainFlags& t, const PolicySettings& policy) {
  return {{"k", t.k},
          {"epochs", t.epochs},
          {"iterations", t.iterations},
          {"lr", t.lr},
          {"batch_size", t.batch_size},
          {"hidden", t.hidden},
          {"anchors", t.anchors},
          {"standardize", t.standardize},
          {"aggregate", t.aggregate},
          {"weights", policy.weights},
          {"direction", t.direction}};
}

SchemaFile schema_for(const std::string& data, const std::string& schema) {
  if (!schema.empty()) return load_schema(schema);
  fs::path p(data);
  p.replace_extension(".schema.json");
  if (!fs::exists(p)) throw ValidationError("no --schema given and " + p.string() + " does not exist");
  return load_schema(p);
}

std::vector<std::string> preamble(const json& config) {
  return {std::string("latent_itr ") + kVersion, "config " + config.dump()};
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << j.dump(1) << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
  fs::path p = out;
  p.replace_extension(suffix);
  return p;
}

// ---- simulate ----

struct SimulateCmd {
  Shared shared;
  SimConfig sim;
};

void run_simulate(SimulateCmd& cmd) {
  SimConfig c = cmd.sim;
  c.seed = cmd.shared.seed;
  c.validate();
  const Simulation s = simulate(c);
  json config = sim_config_to_json(c);
  config["command"] = "simulate";
  const fs::path out(cmd.shared.out);
  save_dataset(s.dataset, out, preamble(config));
  json schema = schema_to_json(s.dataset.schema, s.dataset.covariate_names);
  schema["version"] = kVersion;
  schema["config"] = config;
  write_json(schema, sibling(out, ".schema.json"));
  save_truth(s.truth, sibling(out, ".truth.json"));
}

// ---- train ----

struct TrainCmd {
  Shared shared;
  TrainFlags flags;
  std::string data;
  std::string schema;
};

void run_train(TrainCmd& cmd) {
  const SchemaFile schema = schema_for(cmd.data, cmd.schema);
  const TrainingConfig config = training_config(cmd.flags, cmd.shared.seed, schema.schema);
  const PolicySettings policy = policy_settings(cmd.flags);
  const Dataset ds = load_dataset(cmd.data, schema);
  FittedModel model = fit(ds, config);
  model.aggregate = resolve_aggregate(model, policy);
  json j = model_to_json(model);
  j["run"] = {{"command", "train"}, {"seed", cmd.shared.seed}, {"flags", train_flags_json(cmd.flags, policy)}};
  write_json(j, cmd.shared.out);
}

// ---- recommend ----

struct RecommendCmd {
  Shared shared;
  std::string model;
  std::string data;
  std::string schema;
};

void run_recommend(RecommendCmd& cmd) {
  const FittedModel model = load_model(cmd.model);
  const SchemaFile schema = cmd.schema.empty() ? SchemaFile{model.schema, model.covariate_names}
                                               : load_schema(cmd.schema);
  if (!(schema.schema.items().size() == model.schema.items().size() &&
        std::equal(schema.schema.items().begin(), schema.schema.items().end(),
                   model.schema.items().begin())) ||
      schema.covariates != model.covariate_names) {
    throw ValidationError("data schema does not match the model's schema");
  }
  const Dataset ds = load_dataset(cmd.data, schema);
  const auto recs = recommend_all(model, ds, model.aggregate);

  const json config = {{"command", "recommend"},
                       {"aggregate", model.aggregate.weights},
                       {"model_seed", model.config.seed}};
  std::ofstream out(cmd.shared.out, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + cmd.shared.out + "' for writing");
  for (const auto& line : preamble(config)) out << "# " << line << '\n';
  const int K = model.latent_dim;
  for (int k = 0; k < K; ++k) out << "z0_hat_" << (k + 1) << ',';
  out << "g_pos,g_neg,chosen_arm\n";
  for (const auto& r : recs) {
    for (int k = 0; k < K; ++k) out << static_cast<int>(r.z0_hat[k]) << ',';
    out << format_double(r.g_pos) << ',' << format_double(r.g_neg) << ',' << to_int(r.chosen_arm)
        << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + cmd.shared.out + "'");
}

// ---- evaluate ----

struct EvaluateCmd {
  Shared shared;
  std::string data;
  std::string schema;
  std::string policy;
  std::string truth;
  std::vector<std::string> outcomes;
};

std::vector<Arm> load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open policy file " + path);
  std::string line;
  std::size_t row = 0;
  std::ptrdiff_t column = -1;
  std::vector<Arm> arms;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (column < 0) {
      if (line.empty() || line[0] == '#') continue;
      const auto fields = split_fields(line);
      const auto it = std::find(fields.begin(), fields.end(), "chosen_arm");
      if (it == fields.end()) throw DataError(0, "chosen_arm", "policy file has no chosen_arm column");
      column = it - fields.begin();
      continue;
    }
    ++row;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (static_cast<std::ptrdiff_t>(fields.size()) <= column) {
      throw DataError(row, "chosen_arm", "missing value");
    }
    const std::string_view v = fields[static_cast<std::size_t>(column)];
    if (v == "1") {
      arms.push_back(Arm::kPositive);
    } else if (v == "-1") {
      arms.push_back(Arm::kNegative);
    } else {
      throw DataError(row, "chosen_arm", "arm must be 1 or -1, got '" + std::string(v) + "'");
    }
  }
  return arms;
}

void run_evaluate(EvaluateCmd& cmd) {
  const SchemaFile schema = schema_for(cmd.data, cmd.schema);
  std::vector<OutcomeSpec> outcomes;
  for (const auto& o : cmd.outcomes) outcomes.push_back(OutcomeSpec::parse(o, schema.schema));
  if (outcomes.empty()) outcomes.push_back(OutcomeSpec::sum_of_all(schema.schema));
  const Dataset ds = load_dataset(cmd.data, schema);
  const std::vector<Arm> policy = load_policy(cmd.policy);
  if (policy.size() != ds.size()) {
    throw ValidationError("policy has " + std::to_string(policy.size()) + " rows but the data has " +
                          std::to_string(ds.size()));
  }

  json report = {{"version", kVersion},
                 {"config", {{"command", "evaluate"}, {"outcomes", cmd.outcomes}}},
                 {"n", ds.size()}};
  json values = json::array();
  for (const auto& o : outcomes) {
    const PolicyEvaluation e = empirical_value(policy, ds, outcome_values(ds, o), o.name);
    values.push_back({{"outcome", e.outcome_name},
                      {"empirical_value", e.empirical_value},
                      {"standard_error", e.standard_error},
                      {"n_matched", e.n_matched}});
  }
  report["empirical"] = values;
  if (!cmd.truth.empty()) {
    const GroundTruth truth = load_truth(cmd.truth);
    if (truth.size() != ds.size()) throw ValidationError("truth file does not match the data size");
    report["oracle"] = {{"latent_sum", oracle_value(policy, truth, "latent_sum")},
                        {"item_subset", oracle_value(policy, truth, "item_subset")},
                        {"optimal_accuracy", optimal_accuracy(policy, truth.optimal_arm)},
                        {"optimal_latent_sum", oracle_value(truth.optimal_arm, truth, "latent_sum")}};
  }
  write_json(report, cmd.shared.out);
}

// ---- crossval ----

struct CrossvalCmd {
  Shared shared;
  TrainFlags flags;
  std::string data;
  std::string schema;
  int folds = 4;
  int repeats = 1;
  std::vector<std::string> outcomes;
};

void run_crossval(CrossvalCmd& cmd) {
  const SchemaFile schema = schema_for(cmd.data, cmd.schema);
  const TrainingConfig training = training_config(cmd.flags, cmd.shared.seed, schema.schema);
  CrossvalConfig cv;
  cv.folds = cmd.folds;
  cv.repeats = cmd.repeats;
  cv.seed = cmd.shared.seed;
  cv.policy = policy_settings(cmd.flags);
  for (const auto& o : cmd.outcomes) cv.outcomes.push_back(OutcomeSpec::parse(o, schema.schema));
  if (cv.folds < 2) throw ValidationError("--folds must be at least 2");
  if (cv.repeats < 1) throw ValidationError("--repeats must be at least 1");
  const Dataset ds = load_dataset(cmd.data, schema);
  const CrossvalReport report = crossval(ds, cv, training);
  json j = crossval_report_to_json(report);
  j["version"] = kVersion;
  j["run"] = {{"command", "crossval"},
              {"seed", cmd.shared.seed},
              {"folds", cmd.folds},
              {"repeats", cmd.repeats},
              {"outcomes", cmd.outcomes},
              {"flags", train_flags_json(cmd.flags, cv.policy)}};
  write_json(j, cmd.shared.out);
}

int run(int argc, char** argv) {
  CLI::App app{"Latent-state individualized treatment rules"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SimulateCmd sim;
  auto* c_sim = app.add_subcommand("simulate", "Draw a dataset and its ground truth from the reference process");
  add_shared(c_sim, sim.shared, true);
  c_sim->add_option("--n", sim.sim.n, "Subjects");
  c_sim->add_option("--k", sim.sim.latent_dim, "Latent domains");
  c_sim->add_option("--discrete-items", sim.sim.discrete_items, "Discrete items");
  c_sim->add_option("--categories", sim.sim.num_categories, "Categories per discrete item");
  c_sim->add_option("--continuous-items", sim.sim.continuous_items, "Continuous items");
  c_sim->add_option("--covariates", sim.sim.covariates, "Observed covariates");
  c_sim->add_option("--propensity", sim.sim.propensity, "P(A = +1)");
  c_sim->add_option("--loading-strength", sim.sim.loading_strength, "Discrete loading strength");
  c_sim->add_option("--noise-scale", sim.sim.noise_scale, "Continuous noise and cross-loading scale");
  c_sim->add_option("--effect-scale", sim.sim.effect_scale, "Treatment-interaction multiplier");
  c_sim->add_option("--param-seed", sim.sim.param_seed, "Seed of the generating parameters");

  TrainCmd train;
  auto* c_train = app.add_subcommand("train", "Fit the latent-state model");
  add_shared(c_train, train.shared, true);
  add_train_flags(c_train, train.flags);
  c_train->add_option("--data", train.data, "Training data CSV")->required();
  c_train->add_option("--schema", train.schema, "Schema JSON (default: <data>.schema.json)");

  RecommendCmd rec;
  auto* c_rec = app.add_subcommand("recommend", "Recommend an arm for every subject in a data file");
  add_shared(c_rec, rec.shared, true);
  c_rec->add_option("--model", rec.model, "Model JSON")->required();
  c_rec->add_option("--data", rec.data, "Data CSV")->required();
  c_rec->add_option("--schema", rec.schema, "Schema JSON (default: the model's)");

  EvaluateCmd eval;
  auto* c_eval = app.add_subcommand("evaluate", "Score a policy by IPW and, with ground truth, by oracle value");
  add_shared(c_eval, eval.shared, true);
  c_eval->add_option("--data", eval.data, "Data CSV")->required();
  c_eval->add_option("--schema", eval.schema, "Schema JSON (default: <data>.schema.json)");
  c_eval->add_option("--policy", eval.policy, "CSV with a chosen_arm column")->required();
  c_eval->add_option("--truth,--oracle", eval.truth, "Ground-truth JSON from simulate");
  c_eval->add_option("--outcome", eval.outcomes, "name=item+item (repeatable; default: sum of all items)");

  CrossvalCmd cv;
  auto* c_cv = app.add_subcommand("crossval", "Cross-validated comparison with the linear Q baseline");
  add_shared(c_cv, cv.shared, true);
  add_train_flags(c_cv, cv.flags);
  c_cv->add_option("--data", cv.data, "Data CSV")->required();
  c_cv->add_option("--schema", cv.schema, "Schema JSON (default: <data>.schema.json)");
  c_cv->add_option("--folds", cv.folds, "Folds (at least 2)");
  c_cv->add_option("--repeats", cv.repeats, "Repeated fold splits");
  c_cv->add_option("--outcome", cv.outcomes, "name=item+item (repeatable; default: sum of all items)");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = expand_config(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto threads = [&](const Shared& s) {
    if (s.threads < 0) throw ValidationError("--threads must be non-negative");
    set_thread_count(s.threads);
  };
  if (c_sim->parsed()) {
    threads(sim.shared);
    run_simulate(sim);
  } else if (c_train->parsed()) {
    threads(train.shared);
    run_train(train);
  } else if (c_rec->parsed()) {
    threads(rec.shared);
    run_recommend(rec);
  } else if (c_eval->parsed()) {
    threads(eval.shared);
    run_evaluate(eval);
  } else if (c_cv->parsed()) {
    threads(cv.shared);
    run_crossval(cv);
  }
  return 0;
}

}  // namespace
}  // namespace litr::cli

int main(int argc, char** argv) {
  try {
    return litr::cli::run(argc, argv);
  } catch (const litr::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
