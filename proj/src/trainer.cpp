#include "latent_itr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "latent_itr/errors.hpp"
#include "latent_itr/rng.hpp"

namespace litr {

void TrainingConfig::validate(const ItemSchema& schema) const {
  if (latent_dim < 1) throw ValidationError("K must be >= 1");
  if (latent_dim > kMaxExactSearchDim) {
    throw ValidationError("K must be <= " + std::to_string(kMaxExactSearchDim) +
                          " for exact latent search");
  }
  if (epochs_per_iteration < 1) throw ValidationError("epochs per iteration must be >= 1");
  if (outer_iterations < 0) throw ValidationError("outer iterations must be >= 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning rate must be > 0");
  }
  if (batch_size < 0) throw ValidationError("batch size must be >= 1 (or 0 for the default)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ValidationError("Adam moment decay rates must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ValidationError("Adam epsilon must be > 0");
  for (int w : hidden_widths) {
    if (w < 1) throw ValidationError("hidden layer widths must be >= 1");
  }
  resolved_anchors(schema);
}

std::vector<Anchor> TrainingConfig::resolved_anchors(const ItemSchema& schema) const {
  std::vector<Anchor> result = anchors;
  if (result.empty()) {
    if (schema.size() < static_cast<std::size_t>(latent_dim)) {
      throw ValidationError("default anchors need at least K items; configure anchors explicitly");
    }
    for (int k = 0; k < latent_dim; ++k) result.push_back({k, k, 1});
  }
  std::set<int> domains, items;
  for (const auto& a : result) {
    if (a.domain < 0 || a.domain >= latent_dim) {
      throw ValidationError("anchor domain " + std::to_string(a.domain) + " out of range");
    }
    if (a.item < 0 || static_cast<std::size_t>(a.item) >= schema.size()) {
      throw ValidationError("anchor item " + std::to_string(a.item) + " out of range");
    }
    if (a.direction != 1 && a.direction != -1) {
      throw ValidationError("anchor direction must be +1 or -1");
    }
    if (!domains.insert(a.domain).second) {
      throw ValidationError("latent domain " + std::to_string(a.domain) + " has more than one anchor");
    }
    if (!items.insert(a.item).second) {
      throw ValidationError("item " + std::to_string(a.item) + " anchors more than one domain");
    }
  }
  if (static_cast<int>(domains.size()) != latent_dim) {
    throw ValidationError("every latent domain needs exactly one anchor item");
  }
  std::sort(result.begin(), result.end(),
            [](const Anchor& a, const Anchor& b) { return a.domain < b.domain; });
  return result;
}

int default_batch_size(std::size_t n) {
  const double quarter = static_cast<double>(n) / 4.0;
  long rounded = std::lround(quarter / 50.0) * 50;
  rounded = std::clamp(rounded, 50L, 500L);
  return static_cast<int>(std::max<long>(1, std::min<long>(rounded, static_cast<long>(n))));
}

int TrainingConfig::resolved_batch_size(std::size_t n) const {
  if (batch_size > 0) return static_cast<int>(std::min<std::size_t>(batch_size, std::max<std::size_t>(n, 1)));
  return default_batch_size(n);
}

Standardization Standardization::identity(const ItemSchema& schema) {
  return {false, std::vector<double>(schema.size(), 0.0), std::vector<double>(schema.size(), 1.0)};
}

Standardization Standardization::fit(const Dataset& ds) {
  Standardization s = identity(ds.schema);
  s.enabled = true;
  const std::size_t n = ds.size();
  if (n == 0) return s;
  for (std::size_t j = 0; j < ds.schema.size(); ++j) {
    if (ds.schema[j].is_discrete()) continue;
    double sum = 0.0;
    for (const auto& r : ds.records) sum += r.y0[j] + r.y1[j];
    const double mean = sum / (2.0 * static_cast<double>(n));
    double ss = 0.0;
    for (const auto& r : ds.records) {
      ss += (r.y0[j] - mean) * (r.y0[j] - mean) + (r.y1[j] - mean) * (r.y1[j] - mean);
    }
    const double sd = std::sqrt(ss / (2.0 * static_cast<double>(n)));
    s.center[j] = mean;
    s.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

std::vector<double> Standardization::apply(std::span<const double> items) const {
  std::vector<double> out(items.begin(), items.end());
  if (!enabled) return out;
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = (out[j] - center[j]) / scale[j];
  return out;
}

Dataset Standardization::apply(const Dataset& ds) const {
  if (!enabled) return ds;
  Dataset out = ds;
  for (auto& r : out.records) {
    r.y0 = apply(r.y0);
    r.y1 = apply(r.y1);
  }
  return out;
}

AdamState AdamState::zeros_like(const ModelParams& shape) {
  return {GradientTape::zeros_like(shape), GradientTape::zeros_like(shape), 0};
}

std::vector<double> project_monotone(std::span<const double> values, int direction) {
  const double sign = direction >= 0 ? 1.0 : -1.0;
  // Pool adjacent violators on sign * values (non-decreasing fit).
  std::vector<double> level;
  std::vector<std::size_t> width;
  for (double v : values) {
    level.push_back(sign * v);
    width.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const std::size_t w = width[width.size() - 2] + width.back();
      const double merged =
          (level[level.size() - 2] * static_cast<double>(width[width.size() - 2]) +
           level.back() * static_cast<double>(width.back())) /
          static_cast<double>(w);
      level.pop_back();
      width.pop_back();
      level.back() = merged;
      width.back() = w;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (std::size_t b = 0; b < level.size(); ++b) out.insert(out.end(), width[b], sign * level[b]);
  return out;
}

void project_anchors(ModelParams& params, std::span<const Anchor> anchors) {
  for (const auto& a : anchors) {
    ItemParams& item = params.measurement.items.at(a.item);
    const int C = item.num_outputs();
    std::vector<double> row(C);
    for (int m = 0; m < C; ++m) row[m] = item.loading(a.domain, m);
    if (item.kind == ItemKind::kContinuous) {
      if (a.direction * row[0] < 0.0) item.loading(a.domain, 0) = 0.0;
      continue;
    }
    const auto projected = project_monotone(row, a.direction);
    for (int m = 0; m < C; ++m) item.loading(a.domain, m) = projected[m];
  }
}

ModelParams initialize_params(const Dataset& ds, const TrainingConfig& config) {
  ModelParams params = ModelParams::zeros(ds.schema, static_cast<int>(ds.num_covariates()),
                                          config.latent_dim, config.hidden_widths);
  Rng rng = make_rng(config.seed, "init");
  init_glorot_uniform(params.transition, rng);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (auto& item : params.measurement.items) {
    for (Eigen::Index c = 0; c < item.loading.cols(); ++c) {
      for (Eigen::Index k = 0; k < item.loading.rows(); ++k) item.loading(k, c) = noise(rng);
    }
  }
  for (const auto& a : config.resolved_anchors(ds.schema)) {
    ItemParams& item = params.measurement.items[a.item];
    for (int m = 0; m < item.num_outputs(); ++m) {
      item.loading(a.domain, m) = a.direction * (item.kind == ItemKind::kDiscrete ? m : 1.0);
    }
  }
  return params;
}

void adam_update(ModelParams& params, AdamState& state, const GradientTape& gradient,
                 const TrainingConfig& config) {
  ++state.step;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  auto theta = parameter_blocks(params);
  auto g = parameter_blocks(gradient.grad);
  auto m = parameter_blocks(state.first.grad);
  auto v = parameter_blocks(state.second.grad);
  for (std::size_t b = 0; b < theta.size(); ++b) {
    for (std::size_t i = 0; i < theta[b].size(); ++i) {
      m[b][i] = b1 * m[b][i] + (1.0 - b1) * g[b][i];
      v[b][i] = b2 * v[b][i] + (1.0 - b2) * g[b][i] * g[b][i];
      const double m_hat = m[b][i] / correction1;
      const double v_hat = v[b][i] / correction2;
      theta[b][i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
    }
  }
}

void adam_epoch(ModelParams& params, AdamState& state, const LatentAssignment& latents,
                const Dataset& ds, const TrainingConfig& config, int epoch) {
  const std::size_t n = ds.size();
  if (n == 0) return;
  const std::size_t batch = static_cast<std::size_t>(config.resolved_batch_size(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(config.seed, "shuffle", static_cast<std::uint64_t>(epoch));
  std::shuffle(order.begin(), order.end(), rng);

  const auto anchors = config.resolved_anchors(ds.schema);
  const auto names = parameter_block_names(params);
  GradientTape tape = GradientTape::zeros_like(params);
  for (std::size_t begin = 0; begin < n; begin += batch) {
    const std::size_t end = std::min(begin + batch, n);
    batch_gradient(params, ds, latents, std::span(order).subspan(begin, end - begin), tape);
    const auto blocks = parameter_blocks(std::as_const(tape.grad));
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      for (double v : blocks[b]) {
        if (!std::isfinite(v)) {
          throw std::runtime_error("non-finite gradient in parameter block " + names[b] +
                                   " (epoch " + std::to_string(epoch) + ")");
        }
      }
    }
    adam_update(params, state, tape, config);
    project_anchors(params, anchors);
  }
}

FittedModel fit(const Dataset& ds, const TrainingConfig& config) {
  ds.validate(/*require_both_arms=*/true);
  config.validate(ds.schema);

  FittedModel model;
  model.schema = ds.schema;
  model.covariate_names = ds.covariate_names;
  model.latent_dim = config.latent_dim;
  model.config = config;
  model.config.anchors = config.resolved_anchors(ds.schema);
  model.aggregate = AggregateSpec::sum(config.latent_dim);
  model.standardization =
      config.standardize_continuous ? Standardization::fit(ds) : Standardization::identity(ds.schema);
  const Dataset train = model.standardization.apply(ds);

  model.params = initialize_params(train, model.config);
  LatentAssignment latents(train.size(), config.latent_dim);
  search_sweep(model.params, train, latents);

  auto log = [&model](int iteration, const char* phase, double objective) {
    if (!std::isfinite(objective)) {
      throw std::runtime_error(std::string("objective became non-finite after phase ") + phase +
                               " of iteration " + std::to_string(iteration));
    }
    model.log.push_back({iteration, phase, objective});
  };
  log(0, "init", total_objective(model.params, latents, train));

  AdamState adam = AdamState::zeros_like(model.params);
  int epoch = 0;
  for (int it = 1; it <= config.outer_iterations; ++it) {
    for (int e = 0; e < config.epochs_per_iteration; ++e) {
      adam_epoch(model.params, adam, latents, train, model.config, epoch++);
    }
    const double before = total_objective(model.params, latents, train);
    log(it, "adam", before);
    search_sweep(model.params, train, latents);
    const double after = total_objective(model.params, latents, train);
    if (after > before + 1e-9 * std::max(1.0, std::abs(before))) {
      throw std::logic_error("exact latent search increased the objective at iteration " +
                             std::to_string(it));
    }
    log(it, "search", after);
  }
  model.training_latents = std::move(latents);
  return model;
}

}  // namespace litr
