#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "latent_itr/dataset.hpp"
#include "latent_itr/kernels.hpp"
#include "latent_itr/model.hpp"

namespace litr {

// Fixes the sign and label of latent domain `domain`: the anchor item's
// loading vector on that domain is kept monotone (direction +1 increasing in
// category, -1 decreasing; for a continuous item, the sign of its loading).
struct Anchor {
  int domain = 0;
  int item = 0;
  int direction = 1;

  friend bool operator==(const Anchor&, const Anchor&) = default;
};

struct TrainingConfig {
  int latent_dim = 3;
  int epochs_per_iteration = 6;
  int outer_iterations = 6;
  double learning_rate = 0.1;
  int batch_size = 0;  // 0 selects default_batch_size(n)
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  std::vector<int> hidden_widths{20, 10};
  std::vector<Anchor> anchors;  // empty: domain k anchored to item k, increasing
  bool standardize_continuous = false;

  // Throws ValidationError. outer_iterations may be 0 (initialisation only).
  void validate(const ItemSchema& schema) const;
  std::vector<Anchor> resolved_anchors(const ItemSchema& schema) const;
  int resolved_batch_size(std::size_t n) const;

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

// min(n/4 rounded to a multiple of 50 (at least 50), 500), never above n.
int default_batch_size(std::size_t n);

// Per-item affine rescaling of continuous items (identity for discrete ones).
struct Standardization {
  bool enabled = false;
  std::vector<double> center;
  std::vector<double> scale;

  static Standardization identity(const ItemSchema& schema);
  // Mean and population sd of each continuous item over pooled y0 and y1.
  static Standardization fit(const Dataset& ds);
  std::vector<double> apply(std::span<const double> items) const;
  Dataset apply(const Dataset& ds) const;

  friend bool operator==(const Standardization&, const Standardization&) = default;
};

struct ObjectiveLogEntry {
  int iteration = 0;
  std::string phase;  // "init", "adam", "search"
  double objective = 0.0;

  friend bool operator==(const ObjectiveLogEntry&, const ObjectiveLogEntry&) = default;
};

struct FittedModel {
  ItemSchema schema;
  std::vector<std::string> covariate_names;
  int latent_dim = 0;
  ModelParams params;
  AggregateSpec aggregate;
  TrainingConfig config;
  Standardization standardization;
  std::vector<ObjectiveLogEntry> log;
  // In-memory only: final hard baseline states of the training subjects.
  LatentAssignment training_latents;
};

struct AdamState {
  GradientTape first;
  GradientTape second;
  long step = 0;

  static AdamState zeros_like(const ModelParams& shape);
};

// Nearest (least squares) monotone vector by pool-adjacent-violators;
// direction +1 non-decreasing, -1 non-increasing.
std::vector<double> project_monotone(std::span<const double> values, int direction);

void project_anchors(ModelParams& params, std::span<const Anchor> anchors);

// Seeded initial parameters: Glorot transition weights, 0.01-scale decoder
// loadings, anchors set to the ramp direction * (0, 1, 2, ...).
ModelParams initialize_params(const Dataset& ds, const TrainingConfig& config);

void adam_update(ModelParams& params, AdamState& state, const GradientTape& gradient,
                 const TrainingConfig& config);

// One pass over seeded-shuffled batches with Adam updates and anchor
// projection. Throws std::runtime_error on a non-finite gradient.
void adam_epoch(ModelParams& params, AdamState& state, const LatentAssignment& latents,
                const Dataset& ds, const TrainingConfig& config, int epoch);

FittedModel fit(const Dataset& ds, const TrainingConfig& config);

}  // namespace litr
