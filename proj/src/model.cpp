#include "latent_itr/model.hpp"

#include <cmath>

#include "latent_itr/errors.hpp"

namespace litr {

namespace {

template <typename Params, typename Fn>
void visit_blocks(Params& params, Fn&& fn) {
  for (std::size_t j = 0; j < params.measurement.items.size(); ++j) {
    auto& item = params.measurement.items[j];
    const std::string prefix = "measurement.item[" + std::to_string(j) + "]";
    fn(prefix + ".intercept", item.intercept);
    fn(prefix + ".loading", item.loading);
  }
  for (std::size_t l = 0; l < params.transition.shared.size(); ++l) {
    auto& layer = params.transition.shared[l];
    const std::string prefix = "transition.shared[" + std::to_string(l) + "]";
    fn(prefix + ".weight", layer.weight);
    fn(prefix + ".bias", layer.bias);
  }
  fn(std::string("transition.head_pos.weight"), params.transition.head_pos.weight);
  fn(std::string("transition.head_pos.bias"), params.transition.head_pos.bias);
  fn(std::string("transition.head_neg.weight"), params.transition.head_neg.weight);
  fn(std::string("transition.head_neg.bias"), params.transition.head_neg.bias);
}

}  // namespace

ModelParams ModelParams::zeros(const ItemSchema& schema, int covariate_dim, int latent_dim,
                               std::span<const int> hidden_widths) {
  return {MeasurementParams::zeros(schema.items(), latent_dim),
          TransitionParams::zeros(covariate_dim, latent_dim, hidden_widths)};
}

std::vector<std::span<double>> parameter_blocks(ModelParams& params) {
  std::vector<std::span<double>> blocks;
  visit_blocks(params, [&](const std::string&, auto& array) {
    blocks.emplace_back(array.data(), static_cast<std::size_t>(array.size()));
  });
  return blocks;
}

std::vector<std::span<const double>> parameter_blocks(const ModelParams& params) {
  std::vector<std::span<const double>> blocks;
  visit_blocks(params, [&](const std::string&, const auto& array) {
    blocks.emplace_back(array.data(), static_cast<std::size_t>(array.size()));
  });
  return blocks;
}

std::vector<std::string> parameter_block_names(const ModelParams& params) {
  std::vector<std::string> names;
  visit_blocks(params, [&](const std::string& name, const auto&) { names.push_back(name); });
  return names;
}

std::size_t parameter_count(const ModelParams& params) {
  std::size_t n = 0;
  for (auto block : parameter_blocks(params)) n += block.size();
  return n;
}

GradientTape GradientTape::zeros_like(const ModelParams& shape) {
  GradientTape tape{shape};
  tape.zero();
  return tape;
}

void GradientTape::zero() {
  for (auto block : parameter_blocks(grad)) std::fill(block.begin(), block.end(), 0.0);
}

GradientTape& GradientTape::operator+=(const GradientTape& other) {
  auto mine = parameter_blocks(grad);
  auto theirs = parameter_blocks(other.grad);
  for (std::size_t b = 0; b < mine.size(); ++b) {
    for (std::size_t i = 0; i < mine[b].size(); ++i) mine[b][i] += theirs[b][i];
  }
  return *this;
}

double AggregateSpec::evaluate(const Vector& z1) const {
  double g = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) g += weights[k] * z1[static_cast<Eigen::Index>(k)];
  return g;
}

void AggregateSpec::validate(int latent_dim) const {
  if (static_cast<int>(weights.size()) != latent_dim) {
    throw ValidationError("aggregate weights must have length K = " + std::to_string(latent_dim));
  }
  for (double w : weights) {
    if (!std::isfinite(w)) throw ValidationError("aggregate weights must be finite");
  }
}

double pre_treatment_loss(const MeasurementParams& measurement, const Vector& z0,
                          std::span<const double> y0) {
  double loss = 0.0;
  for (std::size_t j = 0; j < y0.size(); ++j) loss += item_loss_raw(measurement.items[j], z0, y0[j]);
  return loss;
}

double post_treatment_loss(const ModelParams& params, const SubjectRecord& record,
                           const Vector& z0) {
  TransitionPass pass;
  const Vector& z1 = pass.run(params.transition, record.x, z0, record.arm);
  return pre_treatment_loss(params.measurement, z1, record.y1);
}

SubjectLoss subject_loss(const ModelParams& params, const SubjectRecord& record,
                         const LatentState& z0) {
  if (z0.size() != params.latent_dim()) throw ValidationError("latent state length mismatch");
  if (record.y0.size() != params.measurement.num_items() ||
      record.y1.size() != params.measurement.num_items()) {
    throw ValidationError("item vector length mismatch");
  }
  return {pre_treatment_loss(params.measurement, z0.values(), record.y0),
          post_treatment_loss(params, record, z0.values())};
}

SubjectLoss accumulate_subject_gradient(const ModelParams& params, const SubjectRecord& record,
                                        const LatentState& z0, double scale, GradientTape& tape) {
  SubjectLoss loss;
  const MeasurementParams& measurement = params.measurement;
  const std::size_t J = measurement.num_items();
  for (std::size_t j = 0; j < J; ++j) {
    loss.pre += item_loss_gradient(measurement, z0.values(), j, record.y0[j], scale,
                                   tape.grad.measurement.items[j], nullptr);
  }

  TransitionPass pass;
  const Vector& z1 = pass.run(params.transition, record.x, z0.values(), record.arm);
  Vector grad_z1 = Vector::Zero(z1.size());
  for (std::size_t j = 0; j < J; ++j) {
    loss.post += item_loss_gradient(measurement, z1, j, record.y1[j], scale,
                                    tape.grad.measurement.items[j], &grad_z1);
  }
  pass.backward(params.transition, grad_z1, tape.grad.transition);
  return loss;
}

}  // namespace litr
