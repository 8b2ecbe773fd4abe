#pragma once

#include <span>
#include <vector>

#include "latent_itr/dataset.hpp"
#include "latent_itr/linalg.hpp"
#include "latent_itr/measurement.hpp"
#include "latent_itr/rng.hpp"

namespace litr {

struct AffineLayer {
  Matrix weight;  // out x in
  Vector bias;

  static AffineLayer zeros(int in, int out) { return {Matrix::Zero(out, in), Vector::Zero(out)}; }
  int in_dim() const noexcept { return static_cast<int>(weight.cols()); }
  int out_dim() const noexcept { return static_cast<int>(weight.rows()); }
};

// h(a)(x, z0): rectified shared layers over concat(x, z0), then one sigmoid
// head per treatment arm producing a soft post-treatment state.
struct TransitionParams {
  int covariate_dim = 0;
  int latent_dim = 0;
  std::vector<AffineLayer> shared;
  AffineLayer head_pos;
  AffineLayer head_neg;

  static TransitionParams zeros(int covariate_dim, int latent_dim,
                                std::span<const int> hidden_widths);

  int input_dim() const noexcept { return covariate_dim + latent_dim; }
  const AffineLayer& head(Arm a) const { return a == Arm::kPositive ? head_pos : head_neg; }
  AffineLayer& head(Arm a) { return a == Arm::kPositive ? head_pos : head_neg; }
};

// Weights uniform in [-r, r], r = sqrt(6 / (fan_in + fan_out)); biases zero.
void init_glorot_uniform(TransitionParams& params, Rng& rng);

LatentState forward(const TransitionParams& params, std::span<const double> x,
                    const LatentState& z0, Arm arm);

// One recorded forward pass. backward() pushes an output gradient through the
// same activations; calling it before run() is an error.
class TransitionPass {
 public:
  const Vector& run(const TransitionParams& params, std::span<const double> x, const Vector& z0,
                    Arm arm);

  // Adds d(loss)/d(params) into grad, given d(loss)/d(output). Only the layers
  // on the recorded arm's path receive gradient.
  void backward(const TransitionParams& params, const Vector& grad_output,
                TransitionParams& grad) const;

  bool recorded() const noexcept { return recorded_; }
  const Vector& output() const noexcept { return output_; }

 private:
  bool recorded_ = false;
  Arm arm_ = Arm::kPositive;
  std::vector<Vector> inputs_;  // input to shared layer l, then input to the head
  std::vector<Vector> pre_;     // pre-activation of shared layer l
  Vector output_;
};

inline double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace litr
