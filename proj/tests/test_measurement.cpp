#include <cmath>
#include <random>

#include "doctest.h"
#include "latent_itr/errors.hpp"
#include "latent_itr/measurement.hpp"
#include "support/oracles.hpp"

using namespace litr;

namespace {

MeasurementParams one_item(ItemKind kind, int outputs, int K) {
  const std::vector<ItemSpec> items{{"a", kind, kind == ItemKind::kDiscrete ? outputs : 0}};
  return MeasurementParams::zeros(items, K);
}

LatentState z_of(std::vector<int> bits) { return LatentState::hard(bits); }

// One domain, three discrete items with loadings taken from `rows`.
MeasurementParams with_loadings(const std::vector<std::vector<double>>& rows) {
  std::vector<ItemSpec> items;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    items.push_back({"i" + std::to_string(j), ItemKind::kDiscrete, static_cast<int>(rows[j].size())});
  }
  MeasurementParams m = MeasurementParams::zeros(items, 1);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    for (std::size_t c = 0; c < rows[j].size(); ++c) m.items[j].loading(0, c) = rows[j][c];
  }
  return m;
}

}  // namespace

TEST_CASE("latent states") {
  const LatentState z = LatentState::from_code(0b101, 3);
  CHECK(z[0] == 1);
  CHECK(z[1] == 0);
  CHECK(z[2] == 1);
  CHECK(z.code() == 0b101);
  CHECK(z.mode() == LatentMode::kHard);
  CHECK_THROWS_AS(LatentState::hard(std::vector<int>{0, 2}), ValidationError);
  CHECK_THROWS_AS(LatentState::hard(std::vector<int>{}), ValidationError);
  Vector v(2);
  v << 0.25, 1.5;
  CHECK_THROWS_AS(LatentState::soft(v), ValidationError);
  v[1] = 1.0;
  CHECK(LatentState::soft(v).mode() == LatentMode::kSoft);
}

TEST_CASE("zero parameters decode to a uniform distribution") {
  const auto m = one_item(ItemKind::kDiscrete, 3, 2);
  const auto p = decode_item(m, z_of({1, 0}), 0).probabilities;
  for (int c = 0; c < 3; ++c) CHECK(p[c] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("softmax with an ln 3 loading") {
  auto m = one_item(ItemKind::kDiscrete, 2, 1);
  m.items[0].loading(0, 1) = std::log(3.0);
  const auto p1 = decode_item(m, z_of({1}), 0).probabilities;
  CHECK(std::abs(p1[0] - 0.25) < 1e-12);
  CHECK(std::abs(p1[1] - 0.75) < 1e-12);
  const auto p0 = decode_item(m, z_of({0}), 0).probabilities;
  CHECK(std::abs(p0[0] - 0.5) < 1e-12);
  CHECK(std::abs(p0[1] - 0.5) < 1e-12);
}

TEST_CASE("continuous item loss") {
  auto m = one_item(ItemKind::kContinuous, 1, 1);
  m.items[0].intercept[0] = 1.0;
  m.items[0].loading(0, 0) = 2.0;
  CHECK(decode_item(m, z_of({1}), 0).mean == 3.0);
  CHECK(item_loss(m, z_of({1}), 0, 3.0) == 0.0);
  CHECK(item_loss(m, z_of({1}), 0, 5.0) == 4.0);
}

TEST_CASE("uniform cross entropy is ln 3 for every category") {
  const auto m = one_item(ItemKind::kDiscrete, 3, 1);
  for (int y = 0; y < 3; ++y) CHECK(item_loss(m, z_of({0}), 0, y) == doctest::Approx(std::log(3.0)));
  CHECK_THROWS_AS(item_loss(m, z_of({0}), 0, 3.0), ValidationError);
  CHECK_THROWS_AS(item_loss(m, z_of({0}), 0, 0.5), ValidationError);
}

TEST_CASE("subject loss is additive") {
  const std::vector<ItemSpec> items{{"c", ItemKind::kContinuous, 0}, {"d", ItemKind::kDiscrete, 3}};
  auto m = MeasurementParams::zeros(items, 1);
  m.items[0].intercept[0] = 1.0;
  m.items[0].loading(0, 0) = 2.0;
  const std::vector<double> y{5.0, 2.0};
  CHECK(subject_measurement_loss(m, z_of({1}), y) == doctest::Approx(4.0 + std::log(3.0)).epsilon(1e-14));

  MeasurementParams empty;
  empty.latent_dim = 1;
  CHECK(subject_measurement_loss(empty, z_of({1}), std::vector<double>{}) == 0.0);
}

TEST_CASE("clamped probabilities keep the loss finite") {
  auto m = one_item(ItemKind::kDiscrete, 2, 1);
  m.items[0].intercept[1] = 1e6;
  const double loss = item_loss(m, z_of({0}), 0, 0.0);
  CHECK(std::isfinite(loss));
  CHECK(loss == doctest::Approx(-std::log(kProbabilityFloor)));
  ItemParams grad = m.items[0];
  grad.intercept.setZero();
  grad.loading.setZero();
  Vector zv = Vector::Zero(1);
  item_loss_gradient(m, zv, 0, 0.0, 1.0, grad, nullptr);
  CHECK(grad.intercept.allFinite());
}

TEST_CASE("random decodes: probabilities sum to one and match the oracle") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    auto inst = oracle::random_instance(rng, 4, 2.0);
    const auto& m = inst.params.measurement;
    const auto z = LatentState::from_code(
        std::uniform_int_distribution<std::uint32_t>(0, (1U << m.latent_dim) - 1)(rng), m.latent_dim);
    for (std::size_t j = 0; j < m.num_items(); ++j) {
      const auto pred = decode_item(m, z, j);
      if (m.items[j].kind == ItemKind::kDiscrete) {
        CHECK(std::abs(pred.probabilities.sum() - 1.0) < 1e-12);
        CHECK((pred.probabilities.array() > 0.0).all());
        CHECK((pred.probabilities.array() < 1.0).all());
      }
    }
    const double ours = subject_measurement_loss(m, z, inst.record.y0);
    const double theirs = oracle::measurement_loss(m, oracle::to_vec(z), inst.record.y0);
    CHECK(ours >= 0.0);
    CHECK(ours == doctest::Approx(theirs).epsilon(1e-12));
  }
}

TEST_CASE("softmax shift invariance") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  for (int t = 0; t < 100; ++t) {
    auto m = one_item(ItemKind::kDiscrete, 4, 3);
    oracle::fill_normal({m.items[0].intercept.data(), 4}, rng, 1.0);
    oracle::fill_normal({m.items[0].loading.data(), 12}, rng, 1.0);
    const auto z = LatentState::from_code(static_cast<std::uint32_t>(t % 8), 3);
    const Vector before = decode_item(m, z, 0).probabilities;

    auto shifted = m;
    const double c = n(rng);
    shifted.items[0].intercept.array() += c;
    CHECK((decode_item(shifted, z, 0).probabilities - before).cwiseAbs().maxCoeff() < 1e-12);

    // Same constant added to every category's loading on one domain.
    shifted = m;
    shifted.items[0].loading.row(1).array() += n(rng);
    CHECK((decode_item(shifted, z, 0).probabilities - before).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("domain scores") {
  CHECK(domain_scores(with_loadings({{0, 1, 2}, {-1, 0, 3}, {0, 0.5}})) == std::vector<double>{-1.0});
  CHECK(domain_scores(with_loadings({{2, 1, 0}, {3, 0, -1}, {0.5, 0}})) == std::vector<double>{1.0});
  CHECK(domain_scores(with_loadings({{0, 1, 0}, {1, 0, 1}})) == std::vector<double>{0.0});
  // Ties count toward neither side.
  CHECK(domain_scores(with_loadings({{1, 1, 2}})) == std::vector<double>{-0.5});

  const std::vector<ItemSpec> continuous{{"c", ItemKind::kContinuous, 0}};
  CHECK_THROWS_AS(domain_scores(MeasurementParams::zeros(continuous, 2)), ValidationError);
}

TEST_CASE("domain scores ignore order-preserving rescaling") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 50; ++t) {
    auto inst = oracle::random_instance(rng, 3);
    auto& m = inst.params.measurement;
    bool has_discrete = false;
    for (const auto& item : m.items) has_discrete |= item.kind == ItemKind::kDiscrete;
    if (!has_discrete) continue;
    const auto before = domain_scores(m);
    for (auto& item : m.items) item.loading = (item.loading.array() * 3.0 + 1.0).exp().matrix();
    CHECK(domain_scores(m) == before);
  }
}
