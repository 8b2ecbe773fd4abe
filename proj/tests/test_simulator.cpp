#include <filesystem>
#include <random>

#include "doctest.h"
#include "latent_itr/errors.hpp"
#include "latent_itr/evaluation.hpp"
#include "latent_itr/inference.hpp"
#include "latent_itr/kernels.hpp"
#include "latent_itr/simulator.hpp"
#include "latent_itr/trainer.hpp"

using namespace litr;

namespace {

SimConfig config_n(std::size_t n, std::uint64_t seed = 1) {
  SimConfig c;
  c.n = n;
  c.seed = seed;
  return c;
}

std::vector<Arm> constant(std::size_t n, Arm a) { return std::vector<Arm>(n, a); }

}  // namespace

TEST_CASE("simulation is deterministic and independent of thread count") {
  const auto a = simulate(config_n(300, 5));
  const auto b = simulate(config_n(300, 5));
  CHECK(a.dataset == b.dataset);
  CHECK(truth_to_json(a.truth).dump() == truth_to_json(b.truth).dump());
  set_thread_count(1);
  const auto c = simulate(config_n(300, 5));
  set_thread_count(0);
  CHECK(a.dataset == c.dataset);
  CHECK(simulate(config_n(300, 6)).dataset != a.dataset);
}

TEST_CASE("train and test draws share generating parameters") {
  const auto a = simulate(config_n(10, 1));
  const auto b = simulate(config_n(10, 2));
  CHECK(truth_to_json(a.truth)["transition"] == truth_to_json(b.truth)["transition"]);
  CHECK(truth_to_json(a.truth)["measurement"] == truth_to_json(b.truth)["measurement"]);
}

TEST_CASE("generated data respect the schema and the propensity") {
  SimConfig c = config_n(2000, 7);
  c.propensity = 0.3;
  const auto s = simulate(c);
  CHECK_NOTHROW(s.dataset.validate(true));
  CHECK(s.dataset.schema.size() == 14);
  CHECK(s.dataset.num_covariates() == 3);
  std::size_t pos = 0;
  for (const auto& r : s.dataset.records) {
    CHECK(r.propensity == (r.arm == Arm::kPositive ? 0.3 : 0.7));
    pos += r.arm == Arm::kPositive;
  }
  CHECK(std::abs(static_cast<double>(pos) / 2000.0 - 0.3) < 0.045);
  for (std::size_t i = 0; i < s.truth.size(); ++i) {
    const auto& r = s.dataset.records[i];
    CHECK(r.y1 == (r.arm == Arm::kPositive ? s.truth.y1_pos[i] : s.truth.y1_neg[i]));
  }
  // Indicative subset: one anchor item per domain plus two continuous items.
  CHECK(s.truth.indicative_items.size() == 5);
}

TEST_CASE("optimal arms minimise the expected latent sum") {
  const auto s = simulate(config_n(3000, 8));
  const auto& t = s.truth;
  const std::size_t n = t.size();
  const double best = oracle_value(t.optimal_arm, t, "latent_sum");
  std::vector<Arm> anti;
  for (Arm a : t.optimal_arm) anti.push_back(opposite(a));
  const double worst = oracle_value(anti, t, "latent_sum");
  CHECK(best <= oracle_value(constant(n, Arm::kPositive), t, "latent_sum"));
  CHECK(best <= oracle_value(constant(n, Arm::kNegative), t, "latent_sum"));
  CHECK(worst >= oracle_value(constant(n, Arm::kPositive), t, "latent_sum"));
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Arm> random;
    for (std::size_t i = 0; i < n; ++i) random.push_back(rng() & 1 ? Arm::kPositive : Arm::kNegative);
    const double v = oracle_value(random, t, "latent_sum");
    CHECK(best <= v);
    CHECK(v <= worst);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sum_pos = 0, sum_neg = 0;
    for (double p : t.p1_pos[i]) sum_pos += p;
    for (double p : t.p1_neg[i]) sum_neg += p;
    CHECK(t.optimal_arm[i] == (sum_pos <= sum_neg ? Arm::kPositive : Arm::kNegative));
  }
  CHECK_THROWS_AS(oracle_value(t.optimal_arm, t, "total"), ValidationError);
}

TEST_CASE("null treatment effect") {
  SimConfig c = config_n(10000, 9);
  c.effect_scale = 0.0;
  const auto s = simulate(c);
  const auto& t = s.truth;
  CHECK(t.p1_pos == t.p1_neg);
  CHECK(t.z1_pos == t.z1_neg);
  const double gap = oracle_value(constant(t.size(), Arm::kPositive), t, "latent_sum") -
                     oracle_value(constant(t.size(), Arm::kNegative), t, "latent_sum");
  CHECK(gap == 0.0);
  std::mt19937_64 rng(4);
  std::vector<Arm> random;
  for (std::size_t i = 0; i < t.size(); ++i) random.push_back(rng() & 1 ? Arm::kPositive : Arm::kNegative);
  CHECK(std::abs(optimal_accuracy(random, t.optimal_arm) - 0.5) < 0.02);
}

TEST_CASE("IPW value matches the oracle value at n = 100,000") {
  SimConfig c = config_n(100000, 10);
  const auto s = simulate(c);
  const auto& ds = s.dataset;
  std::vector<Arm> policy;
  for (const auto& r : ds.records) policy.push_back(r.x[0] > 0 ? Arm::kPositive : Arm::kNegative);

  // Realised latent sum under the received arm.
  std::vector<double> latent_sum(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& z = ds.records[i].arm == Arm::kPositive ? s.truth.z1_pos[i] : s.truth.z1_neg[i];
    for (int v : z) latent_sum[i] += v;
  }
  const auto e = empirical_value(policy, ds, latent_sum);
  CHECK(std::abs(e.empirical_value - oracle_value(policy, s.truth, "latent_sum")) <= 3 * e.standard_error);

  OutcomeSpec subset{"subset", s.truth.indicative_items};
  const auto e2 = empirical_value(policy, ds, outcome_values(ds, subset));
  CHECK(std::abs(e2.empirical_value - oracle_value(policy, s.truth, "item_subset")) <= 3 * e2.standard_error);
}

TEST_CASE("strong loadings make baseline states recoverable") {
  SimConfig c = config_n(500, 11);
  c.loading_strength = 10.0;
  const auto train = simulate(c);
  TrainingConfig t;
  t.seed = 1;
  const auto model = fit(train.dataset, t);
  c.n = 2000;
  c.seed = 12;
  const auto test = simulate(c);
  std::vector<LatentState> est;
  for (const auto& r : test.dataset.records) est.push_back(estimate_baseline_state(model, r.y0, r.x));
  CHECK(latent_recovery_accuracy(est, test.truth) > 0.99);
}

TEST_CASE("recovery accuracy is element-wise") {
  const auto s = simulate(config_n(2, 13));
  std::vector<LatentState> est;
  for (const auto& z : s.truth.z0) est.push_back(LatentState::hard(z));
  CHECK(latent_recovery_accuracy(est, s.truth) == 1.0);
  std::vector<int> flipped = s.truth.z0[0];
  flipped[0] = 1 - flipped[0];
  est[0] = LatentState::hard(flipped);
  CHECK(latent_recovery_accuracy(est, s.truth) == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("truth files round-trip") {
  const auto s = simulate(config_n(25, 14));
  const auto path = std::filesystem::temp_directory_path() / "latent_itr_truth.json";
  save_truth(s.truth, path);
  const auto back = load_truth(path);
  std::filesystem::remove(path);
  CHECK(truth_to_json(back).dump() == truth_to_json(s.truth).dump());
  CHECK(back.optimal_arm == s.truth.optimal_arm);
  CHECK(sim_config_from_json(sim_config_to_json(s.truth.config)) == s.truth.config);
}

TEST_CASE("simulation config validation") {
  SimConfig c;
  c.propensity = 1.5;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.n = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.discrete_items = 2;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.num_categories = 1;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}
