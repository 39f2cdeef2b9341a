#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cgnn/metrics.hpp"
#include "cgnn/random.hpp"

using namespace cgnn;

TEST_CASE("pehe examples") {
  const std::vector<double> pred{0.5, 1.0}, truth{0.0, 0.0};
  const MetricResult r = pehe(pred, truth, EffectKind::Main);
  CHECK(std::abs(r.value - std::sqrt((0.25 + 1.0) / 2.0)) < 1e-12);
  CHECK(std::abs(r.value - 0.790569415) < 1e-9);
  CHECK(r.n == 2);
  CHECK(r.name == "pehe_main");

  const std::vector<double> shifted{2.3, -0.7, 5.0}, base{2.0, -1.0, 4.7};
  CHECK(std::abs(pehe(shifted, base, EffectKind::Total).value - 0.3) < 1e-12);
}

TEST_CASE("mse examples") {
  const std::vector<double> a{1, 2, 3}, b{1, 1, 1};
  CHECK(std::abs(mse(a, b).value - 5.0 / 3.0) < 1e-12);
  const std::vector<double> ones{1, 1}, zeros{0, 0};
  CHECK(mse(ones, zeros).value == 1.0);
}

TEST_CASE("metrics reject bad input") {
  const std::vector<double> empty, one{1.0}, two{1.0, 2.0};
  CHECK_THROWS_AS(pehe(empty, empty, EffectKind::Main), InvalidValueError);
  CHECK_THROWS_AS(mse(empty, empty), InvalidValueError);
  CHECK_THROWS_AS(mse(one, two), DimensionError);
}

TEST_CASE("metric properties over random vectors") {
  Rng rng = make_rng(2024, 0);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::uniform_int_distribution<int> len(1, 40);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> x(len(rng)), y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = normal(rng);
      y[i] = normal(rng);
    }
    REQUIRE(pehe(x, x, EffectKind::Peer).value == 0.0);
    REQUIRE(mse(x, x).value == 0.0);

    const double c = -2.5;
    std::vector<double> cx(x), cy(y);
    for (auto& v : cx) v *= c;
    for (auto& v : cy) v *= c;
    REQUIRE(mse(cx, cy).value == doctest::Approx(c * c * mse(x, y).value).epsilon(1e-12));
    REQUIRE(pehe(cx, cy, EffectKind::Main).value ==
            doctest::Approx(std::abs(c) * pehe(x, y, EffectKind::Main).value).epsilon(1e-12));

    std::vector<std::size_t> order(x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> px, py;
    for (auto i : order) {
      px.push_back(x[i]);
      py.push_back(y[i]);
    }
    REQUIRE(pehe(px, py, EffectKind::Main).value ==
            doctest::Approx(pehe(x, y, EffectKind::Main).value).epsilon(1e-13));
  }
}

TEST_CASE("mean and sample standard deviation") {
  const std::vector<double> v{1, 2, 3, 4};
  const MeanStd ms = mean_std(v);
  CHECK(ms.mean == 2.5);
  CHECK(ms.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(mean_std(std::vector<double>{7.0}).std == 0.0);
}
