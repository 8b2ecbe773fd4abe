#include <random>

#include "doctest.h"
#include "latent_itr/errors.hpp"
#include "latent_itr/evaluation.hpp"
#include "latent_itr/simulator.hpp"

using namespace litr;

namespace {

Dataset two_subjects() {
  Dataset ds;
  ds.schema = ItemSchema({{"c", ItemKind::kContinuous, 0}});
  ds.records = {{{0.0}, {}, Arm::kPositive, 0.5, {2.0}}, {{0.0}, {}, Arm::kNegative, 0.5, {3.0}}};
  return ds;
}

Dataset linear_dataset(std::size_t n, std::uint64_t seed) {
  Dataset ds;
  ds.schema = ItemSchema({{"d", ItemKind::kDiscrete, 3}, {"c", ItemKind::kContinuous, 0}});
  ds.covariate_names = {"x1", "x2"};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::uniform_int_distribution<int> cat(0, 2);
  for (std::size_t i = 0; i < n; ++i) {
    SubjectRecord r;
    r.y0 = {static_cast<double>(cat(rng)), n01(rng)};
    r.y1 = {static_cast<double>(cat(rng)), n01(rng)};
    r.x = {n01(rng), n01(rng)};
    r.arm = i % 2 ? Arm::kPositive : Arm::kNegative;
    r.propensity = 0.5;
    ds.records.push_back(r);
  }
  return ds;
}

}  // namespace

TEST_CASE("empirical value hand examples") {
  const Dataset ds = two_subjects();
  const std::vector<double> r{2.0, 5.0};
  const std::vector<Arm> none{Arm::kNegative, Arm::kPositive};
  CHECK(empirical_value(none, ds, r).empirical_value == 0.0);
  CHECK(empirical_value(none, ds, r).n_matched == 0);
  const std::vector<Arm> first{Arm::kPositive, Arm::kPositive};
  const auto e = empirical_value(first, ds, r, "R");
  CHECK(e.empirical_value == 2.0);
  CHECK(e.n_matched == 1);
  CHECK(e.outcome_name == "R");
  const std::vector<Arm> all{Arm::kPositive, Arm::kNegative};
  CHECK(empirical_value(all, ds, r).empirical_value == doctest::Approx((2.0 + 5.0) / 2.0 / 0.5));
  CHECK_THROWS_AS(empirical_value(std::vector<Arm>{Arm::kPositive}, ds, r), ValidationError);
}

TEST_CASE("empirical value is linear in R and equals mean(R)/p for a matching policy") {
  std::mt19937_64 rng(5);
  Dataset ds = linear_dataset(301, 1);
  for (auto& rec : ds.records) rec.propensity = 0.4;
  std::vector<double> r(ds.size());
  std::vector<Arm> policy;
  for (double& v : r) v = std::normal_distribution<double>(1.0, 2.0)(rng);
  for (const auto& rec : ds.records) policy.push_back(rec.arm);
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= static_cast<double>(r.size());
  CHECK(empirical_value(policy, ds, r).empirical_value == doctest::Approx(mean / 0.4).epsilon(1e-13));
  std::vector<double> scaled = r;
  for (double& v : scaled) v *= -3.0;
  CHECK(empirical_value(policy, ds, scaled).empirical_value ==
        doctest::Approx(-3.0 * empirical_value(policy, ds, r).empirical_value).epsilon(1e-13));
}

TEST_CASE("optimal accuracy") {
  std::mt19937_64 rng(9);
  std::vector<Arm> truth, random;
  for (int i = 0; i < 10000; ++i) {
    truth.push_back(i % 2 ? Arm::kPositive : Arm::kNegative);
    random.push_back(std::bernoulli_distribution(0.5)(rng) ? Arm::kPositive : Arm::kNegative);
  }
  CHECK(optimal_accuracy(truth, truth) == 1.0);
  std::vector<Arm> negated;
  for (Arm a : truth) negated.push_back(opposite(a));
  CHECK(optimal_accuracy(negated, truth) == 0.0);
  // Four binomial standard deviations at n = 10,000.
  CHECK(std::abs(optimal_accuracy(random, truth) - 0.5) < 0.02);
}

TEST_CASE("outcome specifications") {
  const ItemSchema schema({{"a", ItemKind::kContinuous, 0}, {"b", ItemKind::kContinuous, 0}});
  const auto s = OutcomeSpec::parse("pair=b+a", schema);
  CHECK(s.name == "pair");
  CHECK(s.items == std::vector<std::size_t>{1, 0});
  CHECK(OutcomeSpec::sum_of_all(schema).items == std::vector<std::size_t>{0, 1});
  CHECK_THROWS_AS(OutcomeSpec::parse("pair=a+zz", schema), ValidationError);
  CHECK_THROWS_AS(OutcomeSpec::parse("noequals", schema), ValidationError);
  Dataset ds{schema, {}, {{{0, 0}, {}, Arm::kPositive, 0.5, {1.5, 2.0}}}};
  CHECK(outcome_values(ds, s) == std::vector<double>{3.5});
}

TEST_CASE("linear Q: zero outcome gives zero coefficients") {
  const Dataset ds = linear_dataset(200, 2);
  const std::vector<double> zeros(ds.size(), 0.0);
  const auto q = fit_linear_q(ds, zeros);
  CHECK(q.coefficients.size() == 2 * (1 + q.feature_count));
  for (double c : q.coefficients) CHECK(std::abs(c) < 1e-12);
}

TEST_CASE("linear Q recovers a noiseless linear model") {
  const Dataset ds = linear_dataset(400, 3);
  const std::vector<double> truth{0.5, 1.0, -2.0, 0.3, 0.7, -0.25, 1.5, 0.0, -1.0, 2.0};
  std::vector<double> r;
  for (const auto& rec : ds.records) {
    const auto f = LinearQBaseline::features(rec);
    const double a = to_int(rec.arm);
    double v = truth[0] + truth[5] * a;
    for (std::size_t c = 0; c < 4; ++c) v += truth[1 + c] * f[c] + truth[6 + c] * a * f[c];
    r.push_back(v);
  }
  const auto q = fit_linear_q(ds, r);
  REQUIRE(q.coefficients.size() == truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) CHECK(std::abs(q.coefficients[i] - truth[i]) < 1e-6);
}

TEST_CASE("linear Q recommendation follows the contrast and flips with R") {
  const Dataset ds = linear_dataset(300, 4);
  std::mt19937_64 rng(6);
  std::vector<double> r, neg;
  for (const auto& rec : ds.records) {
    r.push_back(rec.x[0] * to_int(rec.arm) + std::normal_distribution<double>(0.0, 0.5)(rng));
    neg.push_back(-r.back());
  }
  const auto q = fit_linear_q(ds, r);
  const auto q_neg = fit_linear_q(ds, neg);
  const auto a = recommend_linear_q(q, ds, Direction::kMaximize);
  const auto b = recommend_linear_q(q_neg, ds, Direction::kMaximize);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double c = q.contrast(LinearQBaseline::features(ds.records[i]));
    CHECK(a[i] == (c >= 0.0 ? Arm::kPositive : Arm::kNegative));
    if (c != 0.0) CHECK(a[i] == opposite(b[i]));
  }
  const auto m = recommend_linear_q(q, ds, Direction::kMinimize);
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(m[i] == b[i]);
}

TEST_CASE("stratified folds") {
  const Dataset ds = linear_dataset(103, 5);
  Rng rng = make_rng(1, "folds");
  const auto folds = stratified_folds(ds, 4, rng);
  REQUIRE(folds.size() == 4);
  std::vector<int> seen(ds.size(), 0);
  for (const auto& f : folds) {
    std::size_t pos = 0;
    for (std::size_t i : f) {
      ++seen[i];
      pos += ds.records[i].arm == Arm::kPositive;
    }
    CHECK(f.size() >= 25);
    CHECK(pos >= 12);
    CHECK(pos <= 13);
    CHECK(std::is_sorted(f.begin(), f.end()));
  }
  for (int s : seen) CHECK(s == 1);
  CHECK_THROWS_AS(stratified_folds(ds, 1, rng), ValidationError);
  CHECK_THROWS_AS(stratified_folds(ds, 104, rng), ValidationError);
}

TEST_CASE("crossval is deterministic and reports both methods") {
  SimConfig sim;
  sim.n = 160;
  sim.seed = 3;
  const Dataset ds = simulate(sim).dataset;
  CrossvalConfig cv;
  cv.folds = 3;
  cv.repeats = 2;
  cv.seed = 11;
  cv.outcomes = {OutcomeSpec::sum_of_all(ds.schema), OutcomeSpec::parse("pair=d1+c1", ds.schema)};
  TrainingConfig t;
  t.outer_iterations = 2;
  const auto a = crossval_report_to_json(crossval(ds, cv, t));
  const auto b = crossval_report_to_json(crossval(ds, cv, t));
  CHECK(a.dump() == b.dump());
  CHECK(a["summary"].size() == 4);
  CHECK(a["fold_values"].size() == 2 * 3 * 2 * 2);
  CHECK(a["comparisons"].size() == 2);
  CHECK(a.contains("notes"));
  cv.seed = 12;
  CHECK(crossval_report_to_json(crossval(ds, cv, t)).dump() != a.dump());
}

TEST_CASE("leave-one-out crossval") {
  SimConfig sim;
  sim.n = 12;
  sim.seed = 4;
  const Dataset ds = simulate(sim).dataset;
  REQUIRE(ds.arm_counts().positive >= 2);
  REQUIRE(ds.arm_counts().negative >= 2);
  CrossvalConfig cv;
  cv.folds = static_cast<int>(ds.size());
  TrainingConfig t;
  t.outer_iterations = 1;
  const auto report = crossval(ds, cv, t);
  CHECK(report.folds.size() == 2 * ds.size());
  for (const auto& f : report.folds) CHECK(f.n_test == 1);
}

TEST_CASE("crossval rejects bad settings") {
  SimConfig sim;
  sim.n = 30;
  const Dataset ds = simulate(sim).dataset;
  CrossvalConfig cv;
  cv.folds = 1;
  CHECK_THROWS_AS(crossval(ds, cv, TrainingConfig{}), ValidationError);
  cv.folds = 2;
  cv.repeats = 0;
  CHECK_THROWS_AS(crossval(ds, cv, TrainingConfig{}), ValidationError);
}
