#pragma once

#include <cmath>
#include <random>
#include <string>

#include "latent_itr/model.hpp"
#include "support/oracles.hpp"

namespace gradcheck {

struct Result {
  bool ok = true;
  bool skipped = false;  // a rectifier input sat too close to its kink
  double worst = 0.0;
  std::string worst_block;
};

// Relative error with a 1e-5 floor on the denominator, so gradients that are
// numerically zero are compared on an absolute scale.
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-5});
}

// Compares accumulate_subject_gradient with central differences of the
// oracle subject loss for one random (network, decoder, input) triple.
inline Result check_instance(std::mt19937_64& rng, double step = 1e-5, double tolerance = 1e-4) {
  Result result;
  auto inst = oracle::random_instance(rng, 3, 0.7);
  const int K = inst.params.latent_dim();
  const auto z0 = litr::LatentState::from_code(
      std::uniform_int_distribution<std::uint32_t>(0, (1U << K) - 1)(rng), K);
  const oracle::Vec z0v = oracle::to_vec(z0);

  const auto trace = oracle::forward(inst.params.transition, inst.record.x, z0v, inst.record.arm);
  for (const auto& pre : trace.pre) {
    for (double v : pre) {
      if (std::abs(v) < 1e-3) {
        result.skipped = true;
        return result;
      }
    }
  }

  auto tape = litr::GradientTape::zeros_like(inst.params);
  litr::accumulate_subject_gradient(inst.params, inst.record, z0, 1.0, tape);

  auto blocks = litr::parameter_blocks(inst.params);
  const auto grads = litr::parameter_blocks(static_cast<const litr::ModelParams&>(tape.grad));
  const auto names = litr::parameter_block_names(inst.params);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t e = 0; e < blocks[b].size(); ++e) {
      double& theta = blocks[b][e];
      const double saved = theta;
      theta = saved + step;
      const double up = oracle::subject_loss(inst.params, inst.record, z0v);
      theta = saved - step;
      const double down = oracle::subject_loss(inst.params, inst.record, z0v);
      theta = saved;
      const double err = relative_error(grads[b][e], (up - down) / (2.0 * step));
      if (err > result.worst) {
        result.worst = err;
        result.worst_block = names[b];
      }
    }
  }
  result.ok = result.worst < tolerance;
  return result;
}

}  // namespace gradcheck
