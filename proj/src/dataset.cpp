#include "latent_itr/dataset.hpp"

#include <cmath>
#include <set>

#include "latent_itr/errors.hpp"

namespace litr {

namespace {

bool valid_name(std::string_view name) {
  if (name.empty()) return false;
  for (char c : name) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r' || c == '#') return false;
  }
  return true;
}

}  // namespace

ItemSchema::ItemSchema(std::vector<ItemSpec> items) : items_(std::move(items)) {
  if (items_.empty()) throw ValidationError("item schema must contain at least one item");
  std::set<std::string_view> seen;
  for (const auto& item : items_) {
    if (!valid_name(item.name)) {
      throw ValidationError("invalid item name '" + item.name + "'");
    }
    if (!seen.insert(item.name).second) {
      throw ValidationError("duplicate item name '" + item.name + "'");
    }
    if (item.is_discrete() && item.num_categories < 2) {
      throw ValidationError("discrete item '" + item.name + "' needs at least 2 categories");
    }
  }
}

std::optional<std::size_t> ItemSchema::find(std::string_view name) const {
  for (std::size_t j = 0; j < items_.size(); ++j) {
    if (items_[j].name == name) return j;
  }
  return std::nullopt;
}

bool ItemSchema::has_discrete() const {
  for (const auto& item : items_) {
    if (item.is_discrete()) return true;
  }
  return false;
}

void ItemSchema::check_value(std::size_t j, double value) const {
  const ItemSpec& item = items_.at(j);
  if (!std::isfinite(value)) {
    throw ValidationError("item '" + item.name + "' has a non-finite value");
  }
  if (item.is_discrete()) {
    if (value != std::floor(value)) {
      throw ValidationError("item '" + item.name + "' expects an integer category");
    }
    if (value < 0 || value >= item.num_categories) {
      throw ValidationError("item '" + item.name + "' category out of range 0.." +
                            std::to_string(item.num_categories - 1));
    }
  }
}

Arm arm_from_int(int value) {
  if (value == 1) return Arm::kPositive;
  if (value == -1) return Arm::kNegative;
  throw ValidationError("treatment must be -1 or 1, got " + std::to_string(value));
}

ArmCounts Dataset::arm_counts() const {
  ArmCounts counts;
  for (const auto& r : records) {
    (r.arm == Arm::kPositive ? counts.positive : counts.negative) += 1;
  }
  return counts;
}

void Dataset::validate(bool require_both_arms) const {
  if (schema.size() == 0) throw ValidationError("dataset has an empty item schema");
  std::set<std::string_view> names;
  for (const auto& item : schema.items()) {
    names.insert(item.name);
  }
  for (const auto& c : covariate_names) {
    if (!valid_name(c)) throw ValidationError("invalid covariate name '" + c + "'");
    if (c == "treatment" || c == "propensity" || c.starts_with("y0_") || c.starts_with("y1_")) {
      throw ValidationError("covariate name '" + c + "' collides with a reserved column");
    }
    if (!names.insert(c).second) throw ValidationError("duplicate name '" + c + "'");
  }

  const std::size_t J = schema.size();
  const std::size_t P = covariate_names.size();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::size_t row = i + 1;
    if (r.y0.size() != J || r.y1.size() != J) {
      throw DataError(row, "y0/y1", "expected " + std::to_string(J) + " items");
    }
    if (r.x.size() != P) {
      throw DataError(row, "covariates", "expected " + std::to_string(P) + " covariates");
    }
    for (std::size_t j = 0; j < J; ++j) {
      try {
        schema.check_value(j, r.y0[j]);
      } catch (const ValidationError& e) {
        throw DataError(row, "y0_" + schema[j].name, e.what());
      }
      try {
        schema.check_value(j, r.y1[j]);
      } catch (const ValidationError& e) {
        throw DataError(row, "y1_" + schema[j].name, e.what());
      }
    }
    for (std::size_t p = 0; p < P; ++p) {
      if (!std::isfinite(r.x[p])) throw DataError(row, covariate_names[p], "non-finite value");
    }
    if (r.arm != Arm::kPositive && r.arm != Arm::kNegative) {
      throw DataError(row, "treatment", "treatment must be -1 or 1");
    }
    if (!(r.propensity > 0.0 && r.propensity < 1.0)) {
      throw DataError(row, "propensity", "propensity must lie strictly inside (0, 1)");
    }
  }

  if (require_both_arms) {
    const ArmCounts counts = arm_counts();
    if (counts.positive == 0 || counts.negative == 0) {
      throw ValidationError("training data must contain at least one record per treatment arm");
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out{schema, covariate_names, {}};
  out.records.reserve(indices.size());
  for (std::size_t i : indices) out.records.push_back(records.at(i));
  return out;
}

}  // namespace litr
