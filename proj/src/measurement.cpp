#include "latent_itr/measurement.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "latent_itr/errors.hpp"

namespace litr {

namespace {

const double kMaxCrossEntropy = -std::log(kProbabilityFloor);

// Negative log-likelihood of category y under softmax(eta), clamped so the
// implied probability never drops below kProbabilityFloor. Writes softmax(eta)
// into probs.
double softmax_nll(const Vector& eta, int y, Vector& probs) {
  const double max_eta = eta.maxCoeff();
  probs = (eta.array() - max_eta).exp();
  const double sum = probs.sum();
  probs /= sum;
  const double nll = max_eta + std::log(sum) - eta[y];
  return std::min(nll, kMaxCrossEntropy);
}

}  // namespace

LatentState LatentState::hard(std::span<const int> bits) {
  if (bits.empty()) throw ValidationError("latent state needs K >= 1");
  Vector v(bits.size());
  for (std::size_t k = 0; k < bits.size(); ++k) {
    if (bits[k] != 0 && bits[k] != 1) throw ValidationError("hard latent entries must be 0 or 1");
    v[static_cast<Eigen::Index>(k)] = bits[k];
  }
  return {std::move(v), LatentMode::kHard};
}

LatentState LatentState::from_code(std::uint32_t code, int K) {
  if (K < 1 || K > 31) throw ValidationError("latent dimension out of range");
  Vector v(K);
  for (int k = 0; k < K; ++k) v[k] = static_cast<double>((code >> (K - 1 - k)) & 1U);
  return {std::move(v), LatentMode::kHard};
}

LatentState LatentState::soft(Vector values) {
  if (values.size() < 1) throw ValidationError("latent state needs K >= 1");
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    if (!(values[k] >= 0.0 && values[k] <= 1.0)) {
      throw ValidationError("soft latent entries must lie in [0, 1]");
    }
  }
  return {std::move(values), LatentMode::kSoft};
}

LatentState LatentState::zeros(int K) { return from_code(0, K); }

std::uint32_t LatentState::code() const {
  if (mode_ != LatentMode::kHard) throw std::logic_error("code() requires a hard latent state");
  std::uint32_t code = 0;
  for (Eigen::Index k = 0; k < values_.size(); ++k) {
    code = (code << 1) | static_cast<std::uint32_t>(values_[k] != 0.0);
  }
  return code;
}

MeasurementParams MeasurementParams::zeros(std::span<const ItemSpec> items, int latent_dim) {
  if (latent_dim < 1) throw ValidationError("latent dimension K must be >= 1");
  MeasurementParams params;
  params.latent_dim = latent_dim;
  params.items.reserve(items.size());
  for (const auto& spec : items) {
    const int C = spec.num_outputs();
    params.items.push_back({spec.kind, Vector::Zero(C), Matrix::Zero(latent_dim, C)});
  }
  return params;
}

ItemPrediction decode_item(const MeasurementParams& params, const LatentState& z, std::size_t j) {
  const ItemParams& item = params.items.at(j);
  if (z.size() != params.latent_dim) throw ValidationError("latent state length mismatch");
  const Vector eta = item.intercept + item.loading.transpose() * z.values();
  ItemPrediction out;
  out.kind = item.kind;
  if (item.kind == ItemKind::kDiscrete) {
    const double max_eta = eta.maxCoeff();
    out.probabilities = (eta.array() - max_eta).exp();
    out.probabilities /= out.probabilities.sum();
  } else {
    out.mean = eta[0];
  }
  return out;
}

double item_loss_raw(const ItemParams& item, const Vector& z, double y) {
  const Vector eta = item.intercept + item.loading.transpose() * z;
  if (item.kind == ItemKind::kDiscrete) {
    Vector probs;
    return softmax_nll(eta, static_cast<int>(y), probs);
  }
  const double r = y - eta[0];
  return r * r;
}

double item_loss(const MeasurementParams& params, const LatentState& z, std::size_t j, double y) {
  if (z.size() != params.latent_dim) throw ValidationError("latent state length mismatch");
  const ItemParams& item = params.items.at(j);
  if (item.kind == ItemKind::kDiscrete && (y < 0 || y >= item.num_outputs() || y != std::floor(y))) {
    throw ValidationError("observed category out of range for item " + std::to_string(j));
  }
  return item_loss_raw(item, z.values(), y);
}

double subject_measurement_loss(const MeasurementParams& params, const LatentState& z,
                                std::span<const double> y) {
  if (y.size() != params.num_items()) throw ValidationError("item vector length mismatch");
  double total = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) total += item_loss(params, z, j, y[j]);
  return total;
}

double item_loss_gradient(const MeasurementParams& params, const Vector& z, std::size_t j,
                          double y, double scale, ItemParams& grad_item, Vector* grad_z) {
  const ItemParams& item = params.items[j];
  const Vector eta = item.intercept + item.loading.transpose() * z;
  double loss = 0.0;
  Vector d_eta;
  if (item.kind == ItemKind::kDiscrete) {
    Vector probs;
    const int category = static_cast<int>(y);
    loss = softmax_nll(eta, category, probs);
    if (loss >= kMaxCrossEntropy) return loss;  // clamped: flat in every parameter
    d_eta = probs;
    d_eta[category] -= 1.0;
  } else {
    const double r = eta[0] - y;
    loss = r * r;
    d_eta = Vector::Constant(1, 2.0 * r);
  }
  d_eta *= scale;
  grad_item.intercept += d_eta;
  grad_item.loading.noalias() += z * d_eta.transpose();
  if (grad_z != nullptr) grad_z->noalias() += item.loading * d_eta;
  return loss;
}

std::vector<double> domain_scores(const MeasurementParams& params) {
  const int K = params.latent_dim;
  std::vector<long> decreasing(K, 0), increasing(K, 0), pairs(K, 0);
  bool any_discrete = false;
  for (const auto& item : params.items) {
    if (item.kind != ItemKind::kDiscrete) continue;
    any_discrete = true;
    for (int k = 0; k < K; ++k) {
      for (int m = 0; m + 1 < item.num_outputs(); ++m) {
        const double a = item.loading(k, m);
        const double b = item.loading(k, m + 1);
        if (b < a) ++decreasing[k];
        if (b > a) ++increasing[k];
        ++pairs[k];
      }
    }
  }
  if (!any_discrete) throw ValidationError("domain scores need at least one discrete item");
  std::vector<double> scores(K);
  for (int k = 0; k < K; ++k) {
    scores[k] = static_cast<double>(decreasing[k] - increasing[k]) / static_cast<double>(pairs[k]);
  }
  return scores;
}

}  // namespace litr
