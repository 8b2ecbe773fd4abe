#include "latent_itr/transition.hpp"

#include <cmath>
#include <stdexcept>

#include "latent_itr/errors.hpp"

namespace litr {

TransitionParams TransitionParams::zeros(int covariate_dim, int latent_dim,
                                         std::span<const int> hidden_widths) {
  if (covariate_dim < 0 || latent_dim < 1) throw ValidationError("bad transition dimensions");
  TransitionParams p;
  p.covariate_dim = covariate_dim;
  p.latent_dim = latent_dim;
  int in = covariate_dim + latent_dim;
  for (int width : hidden_widths) {
    if (width < 1) throw ValidationError("hidden layer widths must be >= 1");
    p.shared.push_back(AffineLayer::zeros(in, width));
    in = width;
  }
  p.head_pos = AffineLayer::zeros(in, latent_dim);
  p.head_neg = AffineLayer::zeros(in, latent_dim);
  return p;
}

void init_glorot_uniform(TransitionParams& params, Rng& rng) {
  auto fill = [&rng](AffineLayer& layer) {
    const double r = std::sqrt(6.0 / (layer.in_dim() + layer.out_dim()));
    std::uniform_real_distribution<double> dist(-r, r);
    // Column-major fill order keeps draws tied to the storage layout.
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index o = 0; o < layer.weight.rows(); ++o) layer.weight(o, c) = dist(rng);
    }
    layer.bias.setZero();
  };
  for (auto& layer : params.shared) fill(layer);
  fill(params.head_pos);
  fill(params.head_neg);
}

const Vector& TransitionPass::run(const TransitionParams& params, std::span<const double> x,
                                  const Vector& z0, Arm arm) {
  if (static_cast<int>(x.size()) != params.covariate_dim || z0.size() != params.latent_dim) {
    throw ValidationError("transition input dimension mismatch");
  }
  const std::size_t L = params.shared.size();
  inputs_.resize(L + 1);
  pre_.resize(L);
  Vector& input = inputs_[0];
  input.resize(params.input_dim());
  for (int p = 0; p < params.covariate_dim; ++p) input[p] = x[p];
  input.tail(params.latent_dim) = z0;

  for (std::size_t l = 0; l < L; ++l) {
    const AffineLayer& layer = params.shared[l];
    pre_[l] = layer.bias;
    pre_[l].noalias() += layer.weight * inputs_[l];
    inputs_[l + 1] = pre_[l].cwiseMax(0.0);
  }
  const AffineLayer& head = params.head(arm);
  output_ = head.bias;
  output_.noalias() += head.weight * inputs_[L];
  for (Eigen::Index k = 0; k < output_.size(); ++k) output_[k] = sigmoid(output_[k]);
  arm_ = arm;
  recorded_ = true;
  return output_;
}

void TransitionPass::backward(const TransitionParams& params, const Vector& grad_output,
                              TransitionParams& grad) const {
  if (!recorded_) throw std::logic_error("TransitionPass::backward called before run");
  if (grad_output.size() != output_.size()) {
    throw std::logic_error("TransitionPass::backward: output gradient has the wrong length");
  }
  const std::size_t L = params.shared.size();

  // sigmoid'(u) = s (1 - s)
  Vector delta = grad_output.cwiseProduct(output_.cwiseProduct((1.0 - output_.array()).matrix()));
  AffineLayer& head_grad = grad.head(arm_);
  head_grad.bias += delta;
  head_grad.weight.noalias() += delta * inputs_[L].transpose();
  Vector upstream = params.head(arm_).weight.transpose() * delta;

  for (std::size_t l = L; l-- > 0;) {
    // rectifier subgradient, taken as 0 at 0
    delta = (pre_[l].array() > 0.0).select(upstream.array(), 0.0).matrix();
    grad.shared[l].bias += delta;
    grad.shared[l].weight.noalias() += delta * inputs_[l].transpose();
    if (l > 0) upstream = params.shared[l].weight.transpose() * delta;
  }
}

LatentState forward(const TransitionParams& params, std::span<const double> x,
                    const LatentState& z0, Arm arm) {
  TransitionPass pass;
  return LatentState::soft(pass.run(params, x, z0.values(), arm));
}

}  // namespace litr
