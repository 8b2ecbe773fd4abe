#pragma once

#include <span>
#include <string>
#include <vector>

#include "latent_itr/dataset.hpp"
#include "latent_itr/measurement.hpp"
#include "latent_itr/transition.hpp"

namespace litr {

// Everything learned by gradient descent: the shared decoder and the
// transition network.
struct ModelParams {
  MeasurementParams measurement;
  TransitionParams transition;

  static ModelParams zeros(const ItemSchema& schema, int covariate_dim, int latent_dim,
                           std::span<const int> hidden_widths);
  int latent_dim() const noexcept { return measurement.latent_dim; }
};

// Flat views over every parameter array, in a fixed order shared by all
// ModelParams of the same shape.
std::vector<std::span<double>> parameter_blocks(ModelParams& params);
std::vector<std::span<const double>> parameter_blocks(const ModelParams& params);
std::vector<std::string> parameter_block_names(const ModelParams& params);
std::size_t parameter_count(const ModelParams& params);

// Accumulated partial derivatives, shaped like ModelParams.
struct GradientTape {
  ModelParams grad;

  static GradientTape zeros_like(const ModelParams& shape);
  void zero();
  GradientTape& operator+=(const GradientTape& other);
};

// g(z1) = sum_k weights_k z1_k. The default is the plain sum.
struct AggregateSpec {
  std::vector<double> weights;

  static AggregateSpec sum(int latent_dim) { return {std::vector<double>(latent_dim, 1.0)}; }
  double evaluate(const Vector& z1) const;
  void validate(int latent_dim) const;

  friend bool operator==(const AggregateSpec&, const AggregateSpec&) = default;
};

struct SubjectLoss {
  double pre = 0.0;   // sum_j L(f0j(z0), y0j)
  double post = 0.0;  // sum_j L(f1j(x, z0), y1j) under the received arm
  double total() const noexcept { return pre + post; }
};

double pre_treatment_loss(const MeasurementParams& measurement, const Vector& z0,
                          std::span<const double> y0);
double post_treatment_loss(const ModelParams& params, const SubjectRecord& record,
                           const Vector& z0);

SubjectLoss subject_loss(const ModelParams& params, const SubjectRecord& record,
                         const LatentState& z0);

// Adds scale * d(subject loss)/d(params) into tape. The decoder receives
// contributions from the hard z0 path and the soft z1 path; z0 itself gets none.
SubjectLoss accumulate_subject_gradient(const ModelParams& params, const SubjectRecord& record,
                                        const LatentState& z0, double scale, GradientTape& tape);

}  // namespace litr
