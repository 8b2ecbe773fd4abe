#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "latent_itr/dataset.hpp"
#include "latent_itr/measurement.hpp"

namespace litr {

struct SimConfig {
  std::size_t n = 1000;
  std::uint64_t seed = 0;        // subject draws
  std::uint64_t param_seed = 2020;  // generating parameters, shared by train and test sets
  int latent_dim = 3;
  int discrete_items = 9;
  int num_categories = 3;
  int continuous_items = 5;
  int covariates = 3;
  double propensity = 0.5;  // P(A = +1)
  double loading_strength = 2.0;
  double noise_scale = 0.5;
  double effect_scale = 1.0;  // multiplies the treatment-interaction coefficients

  void validate() const;
  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

// P(z1_k = 1 | x, z0, a) = sigmoid(intercept_k + covariate_k.x + baseline_k.z0
//                                  + a (effect_covariate_k.x + effect_baseline_k.z0))
struct TransitionCoefficients {
  Vector intercept;         // K
  Matrix covariate;         // K x P
  Matrix baseline;          // K x K
  Matrix effect_covariate;  // K x P
  Matrix effect_baseline;   // K x K

  Vector probabilities(std::span<const double> x, const Vector& z0, Arm arm) const;
};

struct GroundTruth {
  SimConfig config;
  MeasurementParams measurement;
  TransitionCoefficients transition;
  std::vector<int> primary_domain;           // per item; -1 for continuous items
  std::vector<std::size_t> indicative_items;  // items summed by the "item_subset" outcome

  std::vector<std::vector<int>> z0;
  std::vector<std::vector<double>> p1_pos, p1_neg;  // transition probabilities per arm
  std::vector<std::vector<int>> z1_pos, z1_neg;     // realised potential states
  std::vector<std::vector<double>> y1_pos, y1_neg;  // realised potential items
  std::vector<double> expected_latent_sum_pos, expected_latent_sum_neg;
  std::vector<double> expected_subset_pos, expected_subset_neg;
  std::vector<Arm> optimal_arm;  // minimises the expected latent sum; ties go to +1

  std::size_t size() const noexcept { return z0.size(); }
};

struct Simulation {
  Dataset dataset;
  GroundTruth truth;
};

// Reference data-generating process; see README for the full description.
Simulation simulate(const SimConfig& config);

// Mean expected outcome under the arms chosen by `policy`. `outcome` is
// "latent_sum" or "item_subset"; anything else throws ValidationError.
double oracle_value(std::span<const Arm> policy, const GroundTruth& truth, std::string_view outcome);

// Fraction of (subject, domain) entries where `estimated` equals the true z0.
double latent_recovery_accuracy(std::span<const LatentState> estimated, const GroundTruth& truth);

nlohmann::json sim_config_to_json(const SimConfig& config);
SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const nlohmann::json& j);
void save_truth(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth load_truth(const std::filesystem::path& path);

}  // namespace litr
