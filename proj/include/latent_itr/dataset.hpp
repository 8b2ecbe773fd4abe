#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace litr {

enum class ItemKind { kDiscrete, kContinuous };

struct ItemSpec {
  std::string name;
  ItemKind kind = ItemKind::kContinuous;
  // Discrete items take values 0..num_categories-1. Unused for continuous.
  int num_categories = 0;

  bool is_discrete() const noexcept { return kind == ItemKind::kDiscrete; }
  // Width of the item's linear predictor: categories for discrete, 1 otherwise.
  int num_outputs() const noexcept { return is_discrete() ? num_categories : 1; }

  friend bool operator==(const ItemSpec&, const ItemSpec&) = default;
};

// Ordered list of measurement items. Non-empty, unique names, discrete items
// with at least two categories.
class ItemSchema {
 public:
  ItemSchema() = default;
  explicit ItemSchema(std::vector<ItemSpec> items);

  std::size_t size() const noexcept { return items_.size(); }
  const ItemSpec& operator[](std::size_t j) const { return items_[j]; }
  const std::vector<ItemSpec>& items() const noexcept { return items_; }
  std::optional<std::size_t> find(std::string_view name) const;
  bool has_discrete() const;

  // Throws ValidationError naming the offending item.
  void check_value(std::size_t j, double value) const;

  friend bool operator==(const ItemSchema&, const ItemSchema&) = default;

 private:
  std::vector<ItemSpec> items_;
};

enum class Arm : int { kNegative = -1, kPositive = 1 };

inline int to_int(Arm a) noexcept { return static_cast<int>(a); }
Arm arm_from_int(int value);
inline Arm opposite(Arm a) noexcept {
  return a == Arm::kPositive ? Arm::kNegative : Arm::kPositive;
}

struct SubjectRecord {
  std::vector<double> y0;  // pre-treatment items, discrete entries integral
  std::vector<double> x;   // covariates
  Arm arm = Arm::kPositive;
  double propensity = 0.5;  // P(A = arm | X)
  std::vector<double> y1;  // post-treatment items under the received arm

  // Inverse-probability weight 1 / P(A_i | X_i).
  double weight() const noexcept { return 1.0 / propensity; }

  friend bool operator==(const SubjectRecord&, const SubjectRecord&) = default;
};

struct ArmCounts {
  std::size_t positive = 0;
  std::size_t negative = 0;
};

// Immutable after construction; shared read-only by the parallel kernels.
struct Dataset {
  ItemSchema schema;
  std::vector<std::string> covariate_names;
  std::vector<SubjectRecord> records;

  std::size_t size() const noexcept { return records.size(); }
  std::size_t num_covariates() const noexcept { return covariate_names.size(); }
  ArmCounts arm_counts() const;

  // Checks every record against the schema. Row numbers in errors are
  // 1-based record indices.
  void validate(bool require_both_arms = false) const;

  Dataset subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

}  // namespace litr
