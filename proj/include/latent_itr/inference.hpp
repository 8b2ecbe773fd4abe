#pragma once

#include <span>
#include <vector>

#include "latent_itr/trainer.hpp"

namespace litr {

struct Recommendation {
  LatentState z0_hat = LatentState::zeros(1);
  LatentState z1_soft_pos = LatentState::zeros(1);
  LatentState z1_soft_neg = LatentState::zeros(1);
  double g_pos = 0.0;
  double g_neg = 0.0;
  Arm chosen_arm = Arm::kPositive;  // argmax g; ties go to +1
};

// Hard state minimising the pre-treatment measurement loss of y0 (raw item
// scale; the model's standardisation is applied internally). `x` does not
// enter the criterion.
LatentState estimate_baseline_state(const FittedModel& model, std::span<const double> y0,
                                    std::span<const double> x);

Recommendation recommend(const FittedModel& model, std::span<const double> y0,
                         std::span<const double> x, const AggregateSpec& aggregate);
inline Recommendation recommend(const FittedModel& model, std::span<const double> y0,
                                std::span<const double> x) {
  return recommend(model, y0, x, model.aggregate);
}

// One recommendation per record, computed in parallel.
std::vector<Recommendation> recommend_all(const FittedModel& model, const Dataset& ds,
                                          const AggregateSpec& aggregate);
std::vector<Arm> chosen_arms(std::span<const Recommendation> recs);

// Weights from the sign trends of the fitted decoder loadings.
AggregateSpec score_aggregate_from_model(const FittedModel& model);

}  // namespace litr
