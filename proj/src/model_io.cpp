#include "latent_itr/model_io.hpp"

#include <fstream>

#include "latent_itr/dataset_io.hpp"
#include "latent_itr/errors.hpp"
#include "latent_itr/version.hpp"

namespace litr {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw ValidationError(std::string("model file: ") + what + " has the wrong number of rows");
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ValidationError(std::string("model file: ") + what + " has the wrong number of columns");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[c].get<double>();
  }
  return m;
}

Vector vector_from_json(const json& j, Eigen::Index size, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size) {
    throw ValidationError(std::string("model file: ") + what + " has the wrong length");
  }
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v[i] = j[i].get<double>();
  return v;
}

json layer_to_json(const AffineLayer& layer) {
  return {{"weight", matrix_to_json(layer.weight)}, {"bias", vector_to_json(layer.bias)}};
}

void layer_from_json(const json& j, AffineLayer& layer, const char* what) {
  layer.weight = matrix_from_json(j.at("weight"), layer.weight.rows(), layer.weight.cols(), what);
  layer.bias = vector_from_json(j.at("bias"), layer.bias.size(), what);
}

}  // namespace

json training_config_to_json(const TrainingConfig& config) {
  json anchors = json::array();
  for (const auto& a : config.anchors) {
    anchors.push_back({{"domain", a.domain}, {"item", a.item}, {"direction", a.direction}});
  }
  return {{"latent_dim", config.latent_dim},
          {"epochs_per_iteration", config.epochs_per_iteration},
          {"outer_iterations", config.outer_iterations},
          {"learning_rate", config.learning_rate},
          {"batch_size", config.batch_size},
          {"adam_beta1", config.adam_beta1},
          {"adam_beta2", config.adam_beta2},
          {"adam_epsilon", config.adam_epsilon},
          {"seed", config.seed},
          {"hidden_widths", config.hidden_widths},
          {"anchors", anchors},
          {"standardize_continuous", config.standardize_continuous}};
}

TrainingConfig training_config_from_json(const json& j) {
  TrainingConfig c;
  c.latent_dim = j.at("latent_dim").get<int>();
  c.epochs_per_iteration = j.at("epochs_per_iteration").get<int>();
  c.outer_iterations = j.at("outer_iterations").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.adam_beta2 = j.at("adam_beta2").get<double>();
  c.adam_epsilon = j.at("adam_epsilon").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.hidden_widths = j.at("hidden_widths").get<std::vector<int>>();
  for (const auto& a : j.at("anchors")) {
    c.anchors.push_back({a.at("domain").get<int>(), a.at("item").get<int>(),
                         a.at("direction").get<int>()});
  }
  c.standardize_continuous = j.at("standardize_continuous").get<bool>();
  return c;
}

json model_params_to_json(const ModelParams& params) {
  json items = json::array();
  for (const auto& item : params.measurement.items) {
    items.push_back({{"intercept", vector_to_json(item.intercept)},
                     {"loading", matrix_to_json(item.loading)}});
  }
  json shared = json::array();
  for (const auto& layer : params.transition.shared) shared.push_back(layer_to_json(layer));
  return {{"measurement", {{"items", items}}},
          {"transition",
           {{"shared", shared},
            {"head_pos", layer_to_json(params.transition.head_pos)},
            {"head_neg", layer_to_json(params.transition.head_neg)}}}};
}

ModelParams model_params_from_json(const json& j, const ItemSchema& schema) {
  const json& items = j.at("measurement").at("items");
  const json& transition = j.at("transition");
  const json& shared = transition.at("shared");
  if (!items.is_array() || items.size() != schema.size()) {
    throw ValidationError("model file: decoder item count does not match the schema");
  }
  if (items.empty()) throw ValidationError("model file: no decoder items");
  const int K = static_cast<int>(items[0].at("loading").size());
  const json& head = transition.at("head_pos").at("weight");
  std::vector<int> widths;
  for (const auto& layer : shared) widths.push_back(static_cast<int>(layer.at("bias").size()));
  const int input_dim = shared.empty() ? static_cast<int>(head.at(0).size())
                                       : static_cast<int>(shared[0].at("weight").at(0).size());
  const int covariate_dim = input_dim - K;
  if (covariate_dim < 0) throw ValidationError("model file: inconsistent transition input width");

  ModelParams params = ModelParams::zeros(schema, covariate_dim, K, widths);
  for (std::size_t jj = 0; jj < schema.size(); ++jj) {
    ItemParams& item = params.measurement.items[jj];
    item.intercept = vector_from_json(items[jj].at("intercept"), item.intercept.size(), "intercept");
    item.loading = matrix_from_json(items[jj].at("loading"), item.loading.rows(),
                                    item.loading.cols(), "loading");
  }
  for (std::size_t l = 0; l < shared.size(); ++l) {
    layer_from_json(shared[l], params.transition.shared[l], "shared layer");
  }
  layer_from_json(transition.at("head_pos"), params.transition.head_pos, "head_pos");
  layer_from_json(transition.at("head_neg"), params.transition.head_neg, "head_neg");
  return params;
}

json model_to_json(const FittedModel& model) {
  json log = json::array();
  for (const auto& e : model.log) {
    log.push_back({{"iteration", e.iteration}, {"phase", e.phase}, {"objective", e.objective}});
  }
  return {{"format", "latent_itr.model"},
          {"version", kVersion},
          {"schema", schema_to_json(model.schema, model.covariate_names)},
          {"latent_dim", model.latent_dim},
          {"config", training_config_to_json(model.config)},
          {"standardization",
           {{"enabled", model.standardization.enabled},
            {"center", model.standardization.center},
            {"scale", model.standardization.scale}}},
          {"aggregate", {{"weights", model.aggregate.weights}}},
          {"parameters", model_params_to_json(model.params)},
          {"objective_log", log}};
}

FittedModel model_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "latent_itr.model") {
      throw ValidationError("not a latent_itr model file");
    }
    FittedModel model;
    SchemaFile schema = schema_from_json(j.at("schema"));
    model.schema = std::move(schema.schema);
    model.covariate_names = std::move(schema.covariates);
    model.latent_dim = j.at("latent_dim").get<int>();
    model.config = training_config_from_json(j.at("config"));
    const json& s = j.at("standardization");
    model.standardization = {s.at("enabled").get<bool>(), s.at("center").get<std::vector<double>>(),
                             s.at("scale").get<std::vector<double>>()};
    if (model.standardization.center.size() != model.schema.size() ||
        model.standardization.scale.size() != model.schema.size()) {
      throw ValidationError("model file: standardisation does not match the schema");
    }
    model.aggregate.weights = j.at("aggregate").at("weights").get<std::vector<double>>();
    model.params = model_params_from_json(j.at("parameters"), model.schema);
    if (model.params.latent_dim() != model.latent_dim ||
        model.params.transition.covariate_dim != static_cast<int>(model.covariate_names.size())) {
      throw ValidationError("model file: parameter shapes disagree with K or the covariates");
    }
    model.aggregate.validate(model.latent_dim);
    for (const auto& e : j.at("objective_log")) {
      model.log.push_back({e.at("iteration").get<int>(), e.at("phase").get<std::string>(),
                           e.at("objective").get<double>()});
    }
    return model;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  }
}

void save_model(const FittedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << model_to_json(model).dump(1) << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

FittedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("model file '" + path.string() + "': " + e.what());
  }
  return model_from_json(j);
}

}  // namespace litr
