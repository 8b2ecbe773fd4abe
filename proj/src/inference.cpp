#include "latent_itr/inference.hpp"

#include "latent_itr/errors.hpp"

namespace litr {

namespace {

void check_inputs(const FittedModel& model, std::span<const double> y0, std::span<const double> x) {
  if (y0.size() != model.schema.size()) throw ValidationError("y0 does not match the model schema");
  if (x.size() != model.covariate_names.size()) {
    throw ValidationError("covariate vector does not match the model");
  }
  for (std::size_t j = 0; j < y0.size(); ++j) model.schema.check_value(j, y0[j]);
}

}  // namespace

LatentState estimate_baseline_state(const FittedModel& model, std::span<const double> y0,
                                    std::span<const double> x) {
  check_inputs(model, y0, x);
  const auto scaled = model.standardization.apply(y0);
  return exact_baseline_search(model.params.measurement, scaled);
}

Recommendation recommend(const FittedModel& model, std::span<const double> y0,
                         std::span<const double> x, const AggregateSpec& aggregate) {
  aggregate.validate(model.latent_dim);
  Recommendation rec;
  rec.z0_hat = estimate_baseline_state(model, y0, x);
  rec.z1_soft_pos = forward(model.params.transition, x, rec.z0_hat, Arm::kPositive);
  rec.z1_soft_neg = forward(model.params.transition, x, rec.z0_hat, Arm::kNegative);
  rec.g_pos = aggregate.evaluate(rec.z1_soft_pos.values());
  rec.g_neg = aggregate.evaluate(rec.z1_soft_neg.values());
  rec.chosen_arm = rec.g_pos >= rec.g_neg ? Arm::kPositive : Arm::kNegative;
  return rec;
}

std::vector<Recommendation> recommend_all(const FittedModel& model, const Dataset& ds,
                                          const AggregateSpec& aggregate) {
  aggregate.validate(model.latent_dim);
  std::vector<Recommendation> out(ds.size());
  const auto n = static_cast<std::ptrdiff_t>(ds.size());
  // Exceptions may not escape an OpenMP region; validate up front.
  for (const auto& r : ds.records) check_inputs(model, r.y0, r.x);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = recommend(model, ds.records[i].y0, ds.records[i].x, aggregate);
  }
  return out;
}

std::vector<Arm> chosen_arms(std::span<const Recommendation> recs) {
  std::vector<Arm> arms;
  arms.reserve(recs.size());
  for (const auto& r : recs) arms.push_back(r.chosen_arm);
  return arms;
}

AggregateSpec score_aggregate_from_model(const FittedModel& model) {
  return {domain_scores(model.params.measurement)};
}

}  // namespace litr
