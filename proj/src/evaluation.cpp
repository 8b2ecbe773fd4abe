#include "latent_itr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "latent_itr/errors.hpp"
#include "latent_itr/inference.hpp"

namespace litr {

namespace {

double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

Direction parse_direction(std::string_view text) {
  if (text == "maximize" || text == "max") return Direction::kMaximize;
  if (text == "minimize" || text == "min") return Direction::kMinimize;
  throw ValidationError("direction must be 'maximize' or 'minimize', got '" + std::string(text) + "'");
}

std::string to_string(Direction d) { return d == Direction::kMaximize ? "maximize" : "minimize"; }

PolicyEvaluation empirical_value(std::span<const Arm> policy, const Dataset& ds,
                                 std::span<const double> outcome, std::string outcome_name) {
  const std::size_t n = ds.size();
  if (policy.size() != n || outcome.size() != n) {
    throw ValidationError("policy and outcome must be aligned with the dataset");
  }
  PolicyEvaluation eval;
  eval.outcome_name = std::move(outcome_name);
  if (n == 0) return eval;
  std::vector<double> terms(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const SubjectRecord& r = ds.records[i];
    if (r.arm == policy[i]) {
      terms[i] = outcome[i] / r.propensity;
      ++eval.n_matched;
    }
  }
  eval.empirical_value = mean_of(terms);
  eval.standard_error = n > 1 ? sample_sd(terms) / std::sqrt(static_cast<double>(n)) : 0.0;
  return eval;
}

double optimal_accuracy(std::span<const Arm> policy, std::span<const Arm> truth) {
  if (policy.size() != truth.size()) throw ValidationError("policy and truth must be aligned");
  if (policy.empty()) return 0.0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < policy.size(); ++i) agree += policy[i] == truth[i];
  return static_cast<double>(agree) / static_cast<double>(policy.size());
}

OutcomeSpec OutcomeSpec::sum_of_all(const ItemSchema& schema) {
  OutcomeSpec spec{"y1_sum", {}};
  for (std::size_t j = 0; j < schema.size(); ++j) spec.items.push_back(j);
  return spec;
}

OutcomeSpec OutcomeSpec::parse(std::string_view text, const ItemSchema& schema) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0 || eq + 1 == text.size()) {
    throw ValidationError("outcome must look like name=item+item, got '" + std::string(text) + "'");
  }
  OutcomeSpec spec{std::string(text.substr(0, eq)), {}};
  std::string_view rest = text.substr(eq + 1);
  while (!rest.empty()) {
    const auto plus = rest.find('+');
    const std::string_view name = rest.substr(0, plus);
    auto j = schema.find(name);
    if (!j) throw ValidationError("outcome '" + spec.name + "' names unknown item '" + std::string(name) + "'");
    spec.items.push_back(*j);
    if (plus == std::string_view::npos) break;
    rest.remove_prefix(plus + 1);
  }
  return spec;
}

std::vector<double> outcome_values(const Dataset& ds, const OutcomeSpec& outcome) {
  std::vector<double> values(ds.size(), 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j : outcome.items) values[i] += ds.records[i].y1.at(j);
  }
  return values;
}

std::vector<double> LinearQBaseline::features(const SubjectRecord& record) {
  std::vector<double> f(record.y0.begin(), record.y0.end());
  f.insert(f.end(), record.x.begin(), record.x.end());
  return f;
}

double LinearQBaseline::predict(std::span<const double> f, Arm arm) const {
  const double a = to_int(arm);
  const std::size_t p = feature_count;
  double main = coefficients[0];
  double inter = coefficients[p + 1];
  for (std::size_t c = 0; c < p; ++c) {
    main += coefficients[1 + c] * f[c];
    inter += coefficients[p + 2 + c] * f[c];
  }
  return main + a * inter;
}

double LinearQBaseline::contrast(std::span<const double> f) const {
  return predict(f, Arm::kPositive) - predict(f, Arm::kNegative);
}

Arm LinearQBaseline::recommend(const SubjectRecord& record, Direction direction) const {
  const double c = contrast(features(record));
  if (direction == Direction::kMaximize) return c >= 0.0 ? Arm::kPositive : Arm::kNegative;
  return c <= 0.0 ? Arm::kPositive : Arm::kNegative;
}

LinearQBaseline fit_linear_q(const Dataset& ds, std::span<const double> outcome, double ridge) {
  if (outcome.size() != ds.size()) throw ValidationError("outcome must be aligned with the dataset");
  const std::size_t p = ds.schema.size() + ds.num_covariates();
  const std::size_t cols = 2 * (p + 1);
  Matrix design(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(cols));
  Vector response(static_cast<Eigen::Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto f = LinearQBaseline::features(ds.records[i]);
    const double a = to_int(ds.records[i].arm);
    const auto row = static_cast<Eigen::Index>(i);
    design(row, 0) = 1.0;
    design(row, static_cast<Eigen::Index>(p + 1)) = a;
    for (std::size_t c = 0; c < p; ++c) {
      design(row, static_cast<Eigen::Index>(1 + c)) = f[c];
      design(row, static_cast<Eigen::Index>(p + 2 + c)) = a * f[c];
    }
    response[row] = outcome[i];
  }
  Matrix gram = design.transpose() * design;
  gram.diagonal().array() += ridge;
  const Vector beta = gram.ldlt().solve(design.transpose() * response);
  return {std::vector<double>(beta.data(), beta.data() + beta.size()), p};
}

std::vector<Arm> recommend_linear_q(const LinearQBaseline& baseline, const Dataset& ds,
                                    Direction direction) {
  std::vector<Arm> arms;
  arms.reserve(ds.size());
  for (const auto& r : ds.records) arms.push_back(baseline.recommend(r, direction));
  return arms;
}

AggregateSpec resolve_aggregate(const FittedModel& model, const PolicySettings& settings) {
  switch (settings.source) {
    case AggregateSource::kSum: {
      const double w = settings.direction == Direction::kMaximize ? 1.0 : -1.0;
      return {std::vector<double>(model.latent_dim, w)};
    }
    case AggregateSource::kModelScores:
      return score_aggregate_from_model(model);
    case AggregateSource::kWeights: {
      AggregateSpec spec{settings.weights};
      spec.validate(model.latent_dim);
      return spec;
    }
  }
  throw std::logic_error("unhandled aggregate source");
}

std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& ds, int folds, Rng& rng) {
  if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
  if (static_cast<std::size_t>(folds) > ds.size()) {
    throw ValidationError("more folds than subjects");
  }
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (ds.records[i].arm == Arm::kPositive ? pos : neg).push_back(i);
  }
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  std::vector<std::vector<std::size_t>> out(folds);
  std::size_t slot = 0;
  for (const auto* arm : {&pos, &neg}) {
    for (std::size_t i : *arm) out[slot++ % folds].push_back(i);
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

CrossvalReport crossval(const Dataset& ds, const CrossvalConfig& config,
                        const TrainingConfig& training) {
  if (config.folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
  if (config.repeats < 1) throw ValidationError("cross-validation needs at least 1 repeat");
  ds.validate(true);
  training.validate(ds.schema);

  CrossvalReport report;
  report.config = config;
  if (report.config.outcomes.empty()) {
    report.config.outcomes.push_back(OutcomeSpec::sum_of_all(ds.schema));
  }
  const auto& outcomes = report.config.outcomes;
  const std::vector<std::string> methods{kProposedMethod, kBaselineMethod};

  // per_repeat[method][outcome][repeat]
  std::vector<std::vector<std::vector<double>>> per_repeat(
      methods.size(), std::vector<std::vector<double>>(outcomes.size()));

  for (int rep = 0; rep < config.repeats; ++rep) {
    Rng rng = make_rng(config.seed, "folds", static_cast<std::uint64_t>(rep));
    const auto folds = stratified_folds(ds, config.folds, rng);
    std::vector<std::vector<double>> fold_sum(methods.size(), std::vector<double>(outcomes.size(), 0.0));

    for (int f = 0; f < config.folds; ++f) {
      const auto& test_idx = folds[f];
      std::vector<char> in_test(ds.size(), 0);
      for (std::size_t i : test_idx) in_test[i] = 1;
      std::vector<std::size_t> train_idx;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        if (!in_test[i]) train_idx.push_back(i);
      }
      const Dataset train = ds.subset(train_idx);
      const Dataset test = ds.subset(test_idx);
      const ArmCounts counts = train.arm_counts();
      if (counts.positive == 0 || counts.negative == 0) {
        throw ValidationError("fold " + std::to_string(f) +
                              " leaves a training complement without both arms");
      }

      TrainingConfig fold_training = training;
      fold_training.seed = derive_seed(config.seed, "crossval_fit",
                                       static_cast<std::uint64_t>(rep * config.folds + f));
      const FittedModel model = fit(train, fold_training);
      const AggregateSpec aggregate = resolve_aggregate(model, config.policy);
      const auto recs = recommend_all(model, test, aggregate);
      const std::vector<Arm> proposed = chosen_arms(recs);

      const auto train_outcome = outcome_values(train, outcomes.front());
      const LinearQBaseline baseline = fit_linear_q(train, train_outcome);
      const std::vector<Arm> linear = recommend_linear_q(baseline, test, config.policy.direction);

      for (std::size_t o = 0; o < outcomes.size(); ++o) {
        const auto r = outcome_values(test, outcomes[o]);
        const std::vector<Arm>* policies[] = {&proposed, &linear};
        for (std::size_t m = 0; m < methods.size(); ++m) {
          const double v = empirical_value(*policies[m], test, r, outcomes[o].name).empirical_value;
          report.folds.push_back({rep, f, methods[m], outcomes[o].name, v, test.size()});
          fold_sum[m][o] += v;
        }
      }
    }
    for (std::size_t m = 0; m < methods.size(); ++m) {
      for (std::size_t o = 0; o < outcomes.size(); ++o) {
        per_repeat[m][o].push_back(fold_sum[m][o] / config.folds);
      }
    }
  }

  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (std::size_t o = 0; o < outcomes.size(); ++o) {
      const auto& v = per_repeat[m][o];
      report.summary.push_back({methods[m], outcomes[o].name, v, mean_of(v), sample_sd(v)});
    }
  }
  for (std::size_t o = 0; o < outcomes.size(); ++o) {
    std::vector<double> diff(config.repeats);
    for (int r = 0; r < config.repeats; ++r) diff[r] = per_repeat[0][o][r] - per_repeat[1][o][r];
    const double md = mean_of(diff);
    const double sd = sample_sd(diff);
    const double t = sd > 0.0 ? md / (sd / std::sqrt(static_cast<double>(config.repeats))) : 0.0;
    report.comparisons.push_back({outcomes[o].name, md, t, config.repeats});
  }
  return report;
}

nlohmann::json crossval_report_to_json(const CrossvalReport& report) {
  using nlohmann::json;
  json outcomes = json::array();
  for (const auto& o : report.config.outcomes) {
    outcomes.push_back({{"name", o.name}, {"items", o.items}});
  }
  json summary = json::array();
  for (const auto& s : report.summary) {
    summary.push_back({{"method", s.method},
                       {"outcome", s.outcome},
                       {"mean", s.mean},
                       {"sd", s.sd},
                       {"per_repeat", s.per_repeat}});
  }
  json folds = json::array();
  for (const auto& f : report.folds) {
    folds.push_back({{"repeat", f.repeat},
                     {"fold", f.fold},
                     {"method", f.method},
                     {"outcome", f.outcome},
                     {"value", f.value},
                     {"n_test", f.n_test}});
  }
  json comparisons = json::array();
  for (const auto& c : report.comparisons) {
    comparisons.push_back({{"outcome", c.outcome},
                           {"proposed_minus_baseline", c.mean_difference},
                           {"paired_t", c.t_statistic},
                           {"repeats", c.repeats}});
  }
  return {{"folds", report.config.folds},
          {"repeats", report.config.repeats},
          {"seed", report.config.seed},
          {"direction", to_string(report.config.policy.direction)},
          {"outcomes", outcomes},
          {"summary", summary},
          {"fold_values", folds},
          {"comparisons", comparisons},
          {"notes",
           "paired t statistics treat cross-validation repeats as independent although they "
           "reuse the same subjects; read them as descriptive"}};
}

}  // namespace litr
