#include "latent_itr/simulator.hpp"
#include "latent_itr/version.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "latent_itr/dataset_io.hpp"
#include "latent_itr/errors.hpp"
#include "latent_itr/model_io.hpp"
#include "latent_itr/rng.hpp"
#include "latent_itr/transition.hpp"

namespace litr {

namespace {

using nlohmann::json;

ItemSchema make_schema(const SimConfig& c) {
  std::vector<ItemSpec> items;
  for (int j = 0; j < c.discrete_items; ++j) {
    items.push_back({"d" + std::to_string(j + 1), ItemKind::kDiscrete, c.num_categories});
  }
  for (int j = 0; j < c.continuous_items; ++j) {
    items.push_back({"c" + std::to_string(j + 1), ItemKind::kContinuous, 0});
  }
  return ItemSchema(std::move(items));
}

// Discrete item j loads on domain j % K with a centred ramp: at z_k = 0 the
// logits are -s (m - l/2), at z_k = 1 they are +s (m - l/2). Other domains get
// weak loadings uniform in [-noise_scale, noise_scale]. Continuous items draw
// an intercept in [-1, 1] and the same weak loadings on every domain.
MeasurementParams make_measurement(const SimConfig& c, const ItemSchema& schema, Rng& rng,
                                   std::vector<int>& primary) {
  MeasurementParams m = MeasurementParams::zeros(schema.items(), c.latent_dim);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double s = c.loading_strength;
  primary.assign(schema.size(), -1);
  for (int j = 0; j < c.discrete_items; ++j) {
    ItemParams& item = m.items[j];
    const int domain = j % c.latent_dim;
    primary[j] = domain;
    const double half = (c.num_categories - 1) / 2.0;
    for (int cat = 0; cat < c.num_categories; ++cat) {
      item.intercept[cat] = -s * (cat - half);
      for (int k = 0; k < c.latent_dim; ++k) {
        item.loading(k, cat) = k == domain ? 2.0 * s * (cat - half) : c.noise_scale * unit(rng);
      }
    }
  }
  for (int j = c.discrete_items; j < c.discrete_items + c.continuous_items; ++j) {
    ItemParams& item = m.items[j];
    item.intercept[0] = unit(rng);
    for (int k = 0; k < c.latent_dim; ++k) item.loading(k, 0) = c.noise_scale * unit(rng);
  }
  return m;
}

// Treatment interactions are drawn large enough that the sigmoid saturates,
// so the arm contrast is far from linear in (x, z0).
constexpr double kEffectSd = 3.0;

// intercept ~ U(-1/2, 1/2), covariate ~ N(0, 1/4), baseline diagonal 1 with
// N(0, 1/16) off-diagonal, interactions ~ N(0, kEffectSd^2) * effect_scale.
TransitionCoefficients make_transition(const SimConfig& c, Rng& rng) {
  const int K = c.latent_dim;
  const int P = c.covariates;
  std::uniform_real_distribution<double> half(-0.5, 0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  TransitionCoefficients t{Vector(K), Matrix(K, P), Matrix(K, K), Matrix(K, P), Matrix(K, K)};
  for (int k = 0; k < K; ++k) {
    t.intercept[k] = half(rng);
    for (int p = 0; p < P; ++p) t.covariate(k, p) = 0.5 * normal(rng);
    for (int l = 0; l < K; ++l) t.baseline(k, l) = k == l ? 1.0 : 0.25 * normal(rng);
    for (int p = 0; p < P; ++p) t.effect_covariate(k, p) = kEffectSd * c.effect_scale * normal(rng);
    for (int l = 0; l < K; ++l) t.effect_baseline(k, l) = kEffectSd * c.effect_scale * normal(rng);
  }
  return t;
}

double draw_item(const MeasurementParams& m, std::size_t j, const Vector& z, double u,
                 double gaussian, double noise_scale) {
  const ItemParams& item = m.items[j];
  const Vector eta = item.intercept + item.loading.transpose() * z;
  if (item.kind == ItemKind::kContinuous) return eta[0] + noise_scale * gaussian;
  const Vector probs = (eta.array() - eta.maxCoeff()).exp();
  const double total = probs.sum();
  double cumulative = 0.0;
  for (Eigen::Index cat = 0; cat + 1 < probs.size(); ++cat) {
    cumulative += probs[cat] / total;
    if (u < cumulative) return static_cast<double>(cat);
  }
  return static_cast<double>(probs.size() - 1);
}

double expected_item(const MeasurementParams& m, std::size_t j, const Vector& z) {
  const ItemParams& item = m.items[j];
  const Vector eta = item.intercept + item.loading.transpose() * z;
  if (item.kind == ItemKind::kContinuous) return eta[0];
  const Vector probs = (eta.array() - eta.maxCoeff()).exp();
  double mean = 0.0;
  for (Eigen::Index cat = 0; cat < probs.size(); ++cat) mean += cat * probs[cat];
  return mean / probs.sum();
}

// E[sum_{j in items} y_j] when z_k ~ Bernoulli(p_k) independently.
double expected_subset(const MeasurementParams& m, std::span<const std::size_t> items,
                       const Vector& p) {
  const int K = static_cast<int>(p.size());
  Vector z(K);
  double total = 0.0;
  for (std::uint32_t code = 0; code < (1U << K); ++code) {
    double weight = 1.0;
    for (int k = 0; k < K; ++k) {
      z[k] = static_cast<double>((code >> (K - 1 - k)) & 1U);
      weight *= z[k] > 0.5 ? p[k] : 1.0 - p[k];
    }
    double value = 0.0;
    for (std::size_t j : items) value += expected_item(m, j, z);
    total += weight * value;
  }
  return total;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[c] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from(const json& j, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  if (static_cast<Eigen::Index>(j.size()) != rows) throw ValidationError("truth file: bad matrix shape");
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[r].size()) != cols) throw ValidationError("truth file: bad matrix shape");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

std::vector<int> arms_to_ints(const std::vector<Arm>& arms) {
  std::vector<int> v;
  v.reserve(arms.size());
  for (Arm a : arms) v.push_back(to_int(a));
  return v;
}

}  // namespace

void SimConfig::validate() const {
  if (n < 1) throw ValidationError("simulation needs n >= 1");
  if (latent_dim < 1 || latent_dim > 20) throw ValidationError("simulation needs 1 <= K <= 20");
  if (discrete_items < latent_dim) {
    throw ValidationError("simulation needs at least one discrete item per latent domain");
  }
  if (num_categories < 2) throw ValidationError("discrete items need at least 2 categories");
  if (continuous_items < 0 || covariates < 0) throw ValidationError("item and covariate counts must be >= 0");
  if (!(propensity > 0.0 && propensity < 1.0)) {
    throw ValidationError("propensity must lie strictly inside (0, 1)");
  }
  if (!(loading_strength >= 0.0) || !std::isfinite(loading_strength)) {
    throw ValidationError("loading strength must be finite and >= 0");
  }
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
    throw ValidationError("noise scale must be finite and >= 0");
  }
  if (!std::isfinite(effect_scale)) throw ValidationError("effect scale must be finite");
}

Vector TransitionCoefficients::probabilities(std::span<const double> x, const Vector& z0,
                                             Arm arm) const {
  const Eigen::Map<const Vector> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const double a = to_int(arm);
  Vector eta = intercept + covariate * xv + baseline * z0 + a * (effect_covariate * xv + effect_baseline * z0);
  for (Eigen::Index k = 0; k < eta.size(); ++k) eta[k] = sigmoid(eta[k]);
  return eta;
}

Simulation simulate(const SimConfig& config) {
  config.validate();
  const ItemSchema schema = make_schema(config);
  const int K = config.latent_dim;
  const int P = config.covariates;
  const std::size_t J = schema.size();
  const std::size_t n = config.n;

  GroundTruth truth;
  truth.config = config;
  Rng param_rng = make_rng(config.param_seed, "sim_params");
  truth.measurement = make_measurement(config, schema, param_rng, truth.primary_domain);
  truth.transition = make_transition(config, param_rng);

  for (int k = 0; k < K; ++k) truth.indicative_items.push_back(static_cast<std::size_t>(k));
  std::vector<std::size_t> continuous(config.continuous_items);
  std::iota(continuous.begin(), continuous.end(), static_cast<std::size_t>(config.discrete_items));
  std::stable_sort(continuous.begin(), continuous.end(), [&](std::size_t a, std::size_t b) {
    return truth.measurement.items[a].loading.cwiseAbs().sum() >
           truth.measurement.items[b].loading.cwiseAbs().sum();
  });
  for (std::size_t c = 0; c < std::min<std::size_t>(2, continuous.size()); ++c) {
    truth.indicative_items.push_back(continuous[c]);
  }
  std::sort(truth.indicative_items.begin(), truth.indicative_items.end());

  Dataset ds;
  ds.schema = schema;
  for (int p = 0; p < P; ++p) ds.covariate_names.push_back("x" + std::to_string(p + 1));
  ds.records.resize(n);

  truth.z0.resize(n);
  truth.p1_pos.resize(n);
  truth.p1_neg.resize(n);
  truth.z1_pos.resize(n);
  truth.z1_neg.resize(n);
  truth.y1_pos.resize(n);
  truth.y1_neg.resize(n);
  truth.expected_latent_sum_pos.resize(n);
  truth.expected_latent_sum_neg.resize(n);
  truth.expected_subset_pos.resize(n);
  truth.expected_subset_neg.resize(n);
  truth.optimal_arm.resize(n);

  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    Rng rng = make_rng(config.seed, "simulate", i);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    Vector z0(K);
    truth.z0[i].resize(K);
    for (int k = 0; k < K; ++k) {
      truth.z0[i][k] = uniform(rng) < 0.5 ? 1 : 0;
      z0[k] = truth.z0[i][k];
    }
    SubjectRecord& r = ds.records[i];
    r.x.resize(P);
    for (int p = 0; p < P; ++p) r.x[p] = normal(rng);
    r.arm = uniform(rng) < config.propensity ? Arm::kPositive : Arm::kNegative;
    r.propensity = r.arm == Arm::kPositive ? config.propensity : 1.0 - config.propensity;

    const Vector p_pos = truth.transition.probabilities(r.x, z0, Arm::kPositive);
    const Vector p_neg = truth.transition.probabilities(r.x, z0, Arm::kNegative);
    Vector z1_pos(K), z1_neg(K);
    truth.z1_pos[i].resize(K);
    truth.z1_neg[i].resize(K);
    for (int k = 0; k < K; ++k) {
      const double u = uniform(rng);  // shared by both arms
      truth.z1_pos[i][k] = u < p_pos[k] ? 1 : 0;
      truth.z1_neg[i][k] = u < p_neg[k] ? 1 : 0;
      z1_pos[k] = truth.z1_pos[i][k];
      z1_neg[k] = truth.z1_neg[i][k];
    }

    r.y0.resize(J);
    for (std::size_t j = 0; j < J; ++j) {
      r.y0[j] = draw_item(truth.measurement, j, z0, uniform(rng), normal(rng), config.noise_scale);
    }
    truth.y1_pos[i].resize(J);
    truth.y1_neg[i].resize(J);
    for (std::size_t j = 0; j < J; ++j) {
      const double u = uniform(rng);
      const double g = normal(rng);
      truth.y1_pos[i][j] = draw_item(truth.measurement, j, z1_pos, u, g, config.noise_scale);
      truth.y1_neg[i][j] = draw_item(truth.measurement, j, z1_neg, u, g, config.noise_scale);
    }
    r.y1 = r.arm == Arm::kPositive ? truth.y1_pos[i] : truth.y1_neg[i];

    truth.p1_pos[i].assign(p_pos.data(), p_pos.data() + K);
    truth.p1_neg[i].assign(p_neg.data(), p_neg.data() + K);
    truth.expected_latent_sum_pos[i] = p_pos.sum();
    truth.expected_latent_sum_neg[i] = p_neg.sum();
    truth.expected_subset_pos[i] = expected_subset(truth.measurement, truth.indicative_items, p_pos);
    truth.expected_subset_neg[i] = expected_subset(truth.measurement, truth.indicative_items, p_neg);
    truth.optimal_arm[i] = truth.expected_latent_sum_pos[i] <= truth.expected_latent_sum_neg[i]
                               ? Arm::kPositive
                               : Arm::kNegative;
  }
  return {std::move(ds), std::move(truth)};
}

double oracle_value(std::span<const Arm> policy, const GroundTruth& truth, std::string_view outcome) {
  const std::vector<double>* pos = nullptr;
  const std::vector<double>* neg = nullptr;
  if (outcome == "latent_sum") {
    pos = &truth.expected_latent_sum_pos;
    neg = &truth.expected_latent_sum_neg;
  } else if (outcome == "item_subset") {
    pos = &truth.expected_subset_pos;
    neg = &truth.expected_subset_neg;
  } else {
    throw ValidationError("unknown oracle outcome '" + std::string(outcome) +
                          "' (expected latent_sum or item_subset)");
  }
  if (policy.size() != truth.size()) throw ValidationError("policy is not aligned with the ground truth");
  if (policy.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < policy.size(); ++i) {
    total += policy[i] == Arm::kPositive ? (*pos)[i] : (*neg)[i];
  }
  return total / static_cast<double>(policy.size());
}

double latent_recovery_accuracy(std::span<const LatentState> estimated, const GroundTruth& truth) {
  if (estimated.size() != truth.size()) throw ValidationError("estimates not aligned with the truth");
  if (estimated.empty()) return 0.0;
  std::size_t agree = 0, total = 0;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    const int K = static_cast<int>(truth.z0[i].size());
    if (estimated[i].size() != K) throw ValidationError("latent dimension mismatch");
    for (int k = 0; k < K; ++k) {
      agree += static_cast<int>(estimated[i][k]) == truth.z0[i][k];
      ++total;
    }
  }
  return static_cast<double>(agree) / static_cast<double>(total);
}

json sim_config_to_json(const SimConfig& c) {
  return {{"n", c.n},
          {"seed", c.seed},
          {"param_seed", c.param_seed},
          {"latent_dim", c.latent_dim},
          {"discrete_items", c.discrete_items},
          {"num_categories", c.num_categories},
          {"continuous_items", c.continuous_items},
          {"covariates", c.covariates},
          {"propensity", c.propensity},
          {"loading_strength", c.loading_strength},
          {"noise_scale", c.noise_scale},
          {"effect_scale", c.effect_scale}};
}

SimConfig sim_config_from_json(const json& j) {
  SimConfig c;
  c.n = j.at("n").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.param_seed = j.at("param_seed").get<std::uint64_t>();
  c.latent_dim = j.at("latent_dim").get<int>();
  c.discrete_items = j.at("discrete_items").get<int>();
  c.num_categories = j.at("num_categories").get<int>();
  c.continuous_items = j.at("continuous_items").get<int>();
  c.covariates = j.at("covariates").get<int>();
  c.propensity = j.at("propensity").get<double>();
  c.loading_strength = j.at("loading_strength").get<double>();
  c.noise_scale = j.at("noise_scale").get<double>();
  c.effect_scale = j.at("effect_scale").get<double>();
  return c;
}

json truth_to_json(const GroundTruth& t) {
  ModelParams wrapper;
  wrapper.measurement = t.measurement;
  const json measurement = model_params_to_json(wrapper)["measurement"];
  return {{"format", "latent_itr.truth"},
          {"version", kVersion},
          {"config", sim_config_to_json(t.config)},
          {"measurement", measurement},
          {"transition",
           {{"intercept", std::vector<double>(t.transition.intercept.data(),
                                              t.transition.intercept.data() + t.transition.intercept.size())},
            {"covariate", matrix_json(t.transition.covariate)},
            {"baseline", matrix_json(t.transition.baseline)},
            {"effect_covariate", matrix_json(t.transition.effect_covariate)},
            {"effect_baseline", matrix_json(t.transition.effect_baseline)}}},
          {"primary_domain", t.primary_domain},
          {"indicative_items", t.indicative_items},
          {"z0", t.z0},
          {"p1_pos", t.p1_pos},
          {"p1_neg", t.p1_neg},
          {"z1_pos", t.z1_pos},
          {"z1_neg", t.z1_neg},
          {"y1_pos", t.y1_pos},
          {"y1_neg", t.y1_neg},
          {"expected_latent_sum_pos", t.expected_latent_sum_pos},
          {"expected_latent_sum_neg", t.expected_latent_sum_neg},
          {"expected_subset_pos", t.expected_subset_pos},
          {"expected_subset_neg", t.expected_subset_neg},
          {"optimal_arm", arms_to_ints(t.optimal_arm)}};
}

GroundTruth truth_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "latent_itr.truth") {
      throw ValidationError("not a latent_itr ground-truth file");
    }
    GroundTruth t;
    t.config = sim_config_from_json(j.at("config"));
    const int K = t.config.latent_dim;
    const int P = t.config.covariates;
    const ItemSchema schema = make_schema(t.config);
    t.measurement = MeasurementParams::zeros(schema.items(), K);
    const json& items = j.at("measurement").at("items");
    if (items.size() != schema.size()) throw ValidationError("truth file: item count mismatch");
    for (std::size_t jj = 0; jj < schema.size(); ++jj) {
      ItemParams& item = t.measurement.items[jj];
      const auto intercept = items[jj].at("intercept").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(intercept.size()) != item.intercept.size()) {
        throw ValidationError("truth file: intercept shape mismatch");
      }
      item.intercept = Eigen::Map<const Vector>(intercept.data(), item.intercept.size());
      item.loading = matrix_from(items[jj].at("loading"), K, item.num_outputs());
    }
    const json& tr = j.at("transition");
    const auto intercept = tr.at("intercept").get<std::vector<double>>();
    if (static_cast<int>(intercept.size()) != K) throw ValidationError("truth file: bad intercept");
    t.transition.intercept = Eigen::Map<const Vector>(intercept.data(), K);
    t.transition.covariate = matrix_from(tr.at("covariate"), K, P);
    t.transition.baseline = matrix_from(tr.at("baseline"), K, K);
    t.transition.effect_covariate = matrix_from(tr.at("effect_covariate"), K, P);
    t.transition.effect_baseline = matrix_from(tr.at("effect_baseline"), K, K);
    t.primary_domain = j.at("primary_domain").get<std::vector<int>>();
    t.indicative_items = j.at("indicative_items").get<std::vector<std::size_t>>();
    t.z0 = j.at("z0").get<std::vector<std::vector<int>>>();
    t.p1_pos = j.at("p1_pos").get<std::vector<std::vector<double>>>();
    t.p1_neg = j.at("p1_neg").get<std::vector<std::vector<double>>>();
    t.z1_pos = j.at("z1_pos").get<std::vector<std::vector<int>>>();
    t.z1_neg = j.at("z1_neg").get<std::vector<std::vector<int>>>();
    t.y1_pos = j.at("y1_pos").get<std::vector<std::vector<double>>>();
    t.y1_neg = j.at("y1_neg").get<std::vector<std::vector<double>>>();
    t.expected_latent_sum_pos = j.at("expected_latent_sum_pos").get<std::vector<double>>();
    t.expected_latent_sum_neg = j.at("expected_latent_sum_neg").get<std::vector<double>>();
    t.expected_subset_pos = j.at("expected_subset_pos").get<std::vector<double>>();
    t.expected_subset_neg = j.at("expected_subset_neg").get<std::vector<double>>();
    for (int a : j.at("optimal_arm").get<std::vector<int>>()) t.optimal_arm.push_back(arm_from_int(a));
    const std::size_t n = t.z0.size();
    if (t.optimal_arm.size() != n || t.expected_latent_sum_pos.size() != n ||
        t.expected_latent_sum_neg.size() != n || t.expected_subset_pos.size() != n ||
        t.expected_subset_neg.size() != n) {
      throw ValidationError("truth file: per-subject arrays have inconsistent lengths");
    }
    return t;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("truth file: ") + e.what());
  }
}

void save_truth(const GroundTruth& truth, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << truth_to_json(truth).dump() << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

GroundTruth load_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ground-truth file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("truth file '" + path.string() + "': " + e.what());
  }
  return truth_from_json(j);
}

}  // namespace litr
