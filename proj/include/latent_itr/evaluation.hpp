#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "latent_itr/dataset.hpp"
#include "latent_itr/rng.hpp"
#include "latent_itr/trainer.hpp"

namespace litr {

enum class Direction { kMaximize, kMinimize };

Direction parse_direction(std::string_view text);
std::string to_string(Direction d);

struct PolicyEvaluation {
  double empirical_value = 0.0;
  std::size_t n_matched = 0;
  std::string outcome_name;
  // Monte Carlo standard error of the IPW mean.
  double standard_error = 0.0;
};

// (1/n) sum_i R_i 1{A_i = d_i} / P(A_i | X_i).
PolicyEvaluation empirical_value(std::span<const Arm> policy, const Dataset& ds,
                                 std::span<const double> outcome, std::string outcome_name = {});

double optimal_accuracy(std::span<const Arm> policy, std::span<const Arm> truth);

// An outcome R_i = sum of the listed post-treatment items.
struct OutcomeSpec {
  std::string name;
  std::vector<std::size_t> items;

  static OutcomeSpec sum_of_all(const ItemSchema& schema);
  // "name=item_a+item_b+..."; items are schema item names.
  static OutcomeSpec parse(std::string_view text, const ItemSchema& schema);
};

std::vector<double> outcome_values(const Dataset& ds, const OutcomeSpec& outcome);

// Q(f, a) = b0 + b.f + a (c0 + c.f) with f = (y0 as numbers, x).
struct LinearQBaseline {
  std::vector<double> coefficients;  // [1, f..., a, a*f...]
  std::size_t feature_count = 0;

  static std::vector<double> features(const SubjectRecord& record);
  double predict(std::span<const double> features, Arm arm) const;
  // Q(+1) - Q(-1)
  double contrast(std::span<const double> features) const;
  // Arm with the better predicted outcome; ties go to +1.
  Arm recommend(const SubjectRecord& record, Direction direction) const;
};

// Ridge-stabilised least squares of R on the interaction design.
LinearQBaseline fit_linear_q(const Dataset& ds, std::span<const double> outcome,
                             double ridge = 1e-6);
std::vector<Arm> recommend_linear_q(const LinearQBaseline& baseline, const Dataset& ds,
                                    Direction direction);

enum class AggregateSource { kSum, kModelScores, kWeights };

// How the proposed method turns soft z1 into g. With kSum the weights are +1
// when maximising and -1 when minimising; the other sources are used as is.
struct PolicySettings {
  Direction direction = Direction::kMinimize;
  AggregateSource source = AggregateSource::kSum;
  std::vector<double> weights;  // kWeights only
};

AggregateSpec resolve_aggregate(const FittedModel& model, const PolicySettings& settings);

// Per-arm index lists shuffled and dealt round-robin into `folds` groups.
std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& ds, int folds, Rng& rng);

struct CrossvalConfig {
  int folds = 4;
  int repeats = 1;
  std::uint64_t seed = 0;
  std::vector<OutcomeSpec> outcomes;  // empty: sum of all y1 items
  PolicySettings policy;
};

struct FoldValue {
  int repeat = 0;
  int fold = 0;
  std::string method;
  std::string outcome;
  double value = 0.0;
  std::size_t n_test = 0;
};

struct MethodSummary {
  std::string method;
  std::string outcome;
  std::vector<double> per_repeat;  // fold-averaged value per repeat
  double mean = 0.0;
  double sd = 0.0;
};

// Paired t statistic of proposed minus baseline over repeats. Repeats share
// data, so the statistic overstates significance.
struct PairedComparison {
  std::string outcome;
  double mean_difference = 0.0;
  double t_statistic = 0.0;
  int repeats = 0;
};

struct CrossvalReport {
  CrossvalConfig config;
  std::vector<FoldValue> folds;
  std::vector<MethodSummary> summary;
  std::vector<PairedComparison> comparisons;
};

inline constexpr const char* kProposedMethod = "proposed";
inline constexpr const char* kBaselineMethod = "linear_q";

// Fits both methods on each training complement and scores them on the held
// out fold. The baseline is fitted to the first outcome.
CrossvalReport crossval(const Dataset& ds, const CrossvalConfig& config,
                        const TrainingConfig& training);
nlohmann::json crossval_report_to_json(const CrossvalReport& report);

}  // namespace litr
