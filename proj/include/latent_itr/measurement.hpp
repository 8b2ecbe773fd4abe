#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "latent_itr/dataset.hpp"
#include "latent_itr/linalg.hpp"

namespace litr {

enum class LatentMode { kHard, kSoft };

// Binary (hard) or relaxed (soft, entries in [0,1]) latent state of length K.
class LatentState {
 public:
  static LatentState hard(std::span<const int> bits);
  // Bit k of the lexicographic code is entry k counted from the most
  // significant end, so increasing codes enumerate states in lexicographic order.
  static LatentState from_code(std::uint32_t code, int K);
  static LatentState soft(Vector values);
  static LatentState zeros(int K);

  const Vector& values() const noexcept { return values_; }
  LatentMode mode() const noexcept { return mode_; }
  int size() const noexcept { return static_cast<int>(values_.size()); }
  double operator[](int k) const { return values_[k]; }
  std::uint32_t code() const;  // hard states only

  friend bool operator==(const LatentState& a, const LatentState& b) {
    return a.mode_ == b.mode_ && a.values_ == b.values_;
  }

 private:
  LatentState(Vector values, LatentMode mode) : values_(std::move(values)), mode_(mode) {}

  Vector values_;
  LatentMode mode_;
};

// Decoder parameters for one item. For a discrete item with C categories the
// linear predictor is intercept + loading^T z, with loading a K x C matrix;
// continuous items use a single column.
struct ItemParams {
  ItemKind kind = ItemKind::kContinuous;
  Vector intercept;
  Matrix loading;

  int num_outputs() const noexcept { return static_cast<int>(intercept.size()); }
};

struct MeasurementParams {
  int latent_dim = 0;
  std::vector<ItemParams> items;

  static MeasurementParams zeros(std::span<const ItemSpec> items, int latent_dim);
  std::size_t num_items() const noexcept { return items.size(); }
};

struct ItemPrediction {
  ItemKind kind = ItemKind::kContinuous;
  Vector probabilities;  // discrete only
  double mean = 0.0;     // continuous only
};

// Cross entropy uses max(p, kProbabilityFloor).
inline constexpr double kProbabilityFloor = 1e-12;

ItemPrediction decode_item(const MeasurementParams& params, const LatentState& z, std::size_t j);
double item_loss(const MeasurementParams& params, const LatentState& z, std::size_t j, double y);
double subject_measurement_loss(const MeasurementParams& params, const LatentState& z,
                                std::span<const double> y);

// Loss of item j at latent input z, with scale * d(loss) added into grad_item
// (same shape as params.items[j]) and, when grad_z is non-null, into grad_z.
double item_loss_gradient(const MeasurementParams& params, const Vector& z, std::size_t j,
                          double y, double scale, ItemParams& grad_item, Vector* grad_z);

// item_loss without argument checks, on a raw latent vector.
double item_loss_raw(const ItemParams& item, const Vector& z, double y);

// Per-domain score in [-1, 1]: (#decreasing - #increasing adjacent category
// loadings) / #pairs, pooled over discrete items. Throws if there are none.
std::vector<double> domain_scores(const MeasurementParams& params);

}  // namespace litr
