#include <cmath>
#include <numeric>

#include "doctest.h"
#include "varbandit/errors.h"
#include "varbandit/regression.h"

using namespace varbandit;

namespace {

// One value per function at (0, 0); action 1 is padding at zero.
FiniteFunctionClass single_pair_class(const std::vector<double>& values) {
  std::vector<double> table;
  for (const double v : values) {
    table.push_back(v);
    table.push_back(0.0);
  }
  return FiniteFunctionClass(1, 2, table);
}

FiniteFunctionClass random_class_of(std::size_t nf, std::size_t nx,
                                    std::size_t na, Rng& rng) {
  std::vector<double> v(nf * nx * na);
  for (auto& e : v) e = rng.uniform();
  return FiniteFunctionClass(nx, na, v);
}

}  // namespace

TEST_CASE("prod predictions") {
  const FiniteFunctionClass cls(1, 2, {0.2, 0.9, 0.6, 0.1, 0.0, 0.5});
  ProdOracle one(Mask{false, true, false}, 0.1);
  CHECK(one.predict(cls, 0) == std::vector<double>{0.6, 0.1});

  ProdOracle two(Mask{true, true, false}, 0.1);
  CHECK(two.predict(cls, 0)[0] == doctest::Approx(0.4).epsilon(1e-15));

  ProdOracle three(Mask{true, true, true}, 0.1);
  const std::vector<double> q{0.5, 0.3, 0.2};
  three.set_weights(q);
  const auto pred = three.predict(cls, 0);
  for (std::size_t a = 0; a < 2; ++a) {
    double dot = 0.0;
    for (std::size_t f = 0; f < 3; ++f) dot += q[f] * cls.value(f, 0, a);
    CHECK(std::abs(pred[a] - dot) <= 1e-15);
  }
  CHECK_THROWS_AS(ProdOracle(Mask{false, false, false}, 0.1), StateError);
}

TEST_CASE("prod update") {
  // Equal losses leave the weights alone.
  const auto flat = single_pair_class({0.3, 0.3});
  ProdOracle same(Mask{true, true}, 0.1);
  same.update(flat, 0, 0, 0.9, Mask{true, true});
  CHECK(same.weights()[0] == doctest::Approx(0.5));

  // f_t = 0.5, r = 1.5 gives losses (+1, -1).
  const auto cls = single_pair_class({0.0, 1.0});
  ProdOracle prod(Mask{true, true}, 0.1);
  const auto step = prod.update(cls, 0, 0, 1.5, Mask{true, true});
  CHECK(step.losses[0] == doctest::Approx(1.0));
  CHECK(step.losses[1] == doctest::Approx(-1.0));
  const auto q = prod.weights();
  CHECK(q[1] / q[0] == doctest::Approx(1.1 / 0.9).epsilon(1e-13));
  CHECK(std::abs(step.aggregated_loss) <= 1e-12);

  ProdOracle hot(Mask{true, true}, 1.0);
  CHECK_THROWS_AS(hot.update(cls, 0, 0, 1.5, Mask{true, true}), ContractError);
  ProdOracle grow(Mask{true, false}, 0.1);
  CHECK_THROWS_AS(grow.restrict(Mask{true, true}), ContractError);
}

TEST_CASE("prod stays normalized with zero aggregated loss") {
  Rng rng(3);
  const auto cls = random_class_of(12, 3, 4, rng);
  ProdOracle prod(Mask(12, true), 0.1);
  Mask mask(12, true);
  for (int t = 0; t < 2000; ++t) {
    if (t % 200 == 199) {
      const auto drop = rng.below(12);
      if (drop != 0) mask[drop] = false;
    }
    const auto step = prod.update(cls, rng.below(3), rng.below(4), rng.uniform(), mask);
    REQUIRE(std::abs(step.aggregated_loss) <= 1e-12);
    const auto w = prod.weights();
    REQUIRE(std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) < 1e-9);
    for (std::size_t f = 0; f < 12; ++f) REQUIRE((mask[f] || w[f] == 0.0));
  }
}

TEST_CASE("Prod regret inequality on fuzzed losses") {
  const double eta = 0.05;
  {
    const std::vector<std::vector<double>> zeros(10, std::vector<double>(4, 0.0));
    const auto [lhs, rhs] = prod_regret_audit(zeros, eta, std::vector<Mask>(10, Mask(4, true)), 0);
    CHECK(lhs == 0.0);
    CHECK(rhs == doctest::Approx(std::log(4.0) / eta));
  }
  {
    const std::vector<std::vector<double>> l(5, std::vector<double>{3.0});
    CHECK(prod_regret_audit(l, eta, std::vector<Mask>(5, Mask{true}), 0).first ==
          doctest::Approx(0.0));
  }
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    const std::size_t star = rng.below(8);
    std::vector<std::vector<double>> losses(200, std::vector<double>(8));
    std::vector<Mask> masks(200, Mask(8, true));
    Mask current(8, true);
    for (std::size_t t = 0; t < 200; ++t) {
      for (auto& v : losses[t]) v = rng.uniform(-0.5 / eta, 0.5 / eta);
      if (rng.bernoulli(0.02)) {
        const auto f = rng.below(8);
        if (f != star) current[f] = false;
      }
      masks[t] = current;
    }
    const auto [lhs, rhs] = prod_regret_audit(losses, eta, masks, star);
    CAPTURE(seed);
    REQUIRE(lhs <= rhs);
  }
  CHECK_THROWS_AS(
      prod_regret_audit({{100.0, 0.0}}, eta, {Mask{true, true}}, 0), ContractError);
}

TEST_CASE("weighted least squares") {
  Rng rng(9);
  const auto cls = random_class_of(5, 2, 3, rng);
  CHECK(weighted_least_squares(cls, Mask{false, false, true, true, true}, {}) == 2);
  CHECK_THROWS_AS(weighted_least_squares(cls, Mask(5, false), {}), StateError);

  std::vector<WeightedSample> noiseless;
  for (int i = 0; i < 6; ++i) {
    const ContextId x = rng.below(2);
    const ActionId a = rng.below(3);
    noiseless.push_back({x, a, cls.value(3, x, a), 1.0 + i});
  }
  CHECK(weighted_least_squares(cls, Mask(5, true), noiseless) == 3);

  for (int trial = 0; trial < 200; ++trial) {
    const auto c = random_class_of(5 + rng.below(60), 2, 3, rng);
    std::vector<WeightedSample> rounds;
    ResidualAccumulator acc(c.n_functions());
    for (int i = 0; i < 4; ++i) {
      rounds.push_back({rng.below(2), rng.below(3), rng.uniform(), rng.uniform(0, 3)});
      acc.add(c, rounds.back());
    }
    Mask mask(c.n_functions());
    for (std::size_t f = 0; f < mask.size(); ++f) mask[f] = rng.bernoulli(0.7);
    mask[rng.below(mask.size())] = true;
    std::vector<double> obj(c.n_functions(), 0.0);
    for (std::size_t f = 0; f < obj.size(); ++f)
      for (const auto& s : rounds) {
        const double d = c.value(f, s.x, s.a) - s.r;
        obj[f] += s.w * d * d;
      }
    const auto best = weighted_least_squares(c, mask, rounds);
    REQUIRE(mask[best]);
    REQUIRE(acc.argmin(mask) == best);
    for (std::size_t f = 0; f < obj.size(); ++f) {
      if (mask[f]) REQUIRE(obj[best] <= obj[f] + 1e-12);
    }
  }
}

TEST_CASE("exponential weights") {
  const auto agree = single_pair_class({0.4, 0.4});
  ExpWeights w(2);
  w.update_zero_one(agree, 0, 0, 0.4, 0.0);
  CHECK(w.weights()[0] == doctest::Approx(0.5));

  const auto pair = single_pair_class({0.4, 0.0});
  ExpWeights zero(2);
  zero.update_zero_one(pair, 0, 0, 0.0, 0.0);
  CHECK_FALSE(zero.feasible(0));
  CHECK(zero.weights()[1] == 1.0);
  zero.add_squared_loss(pair, 0, 0, 0.4);
  CHECK_FALSE(zero.feasible(0));
  CHECK(zero.predict(pair, 0)[0] == 0.0);

  const auto grid = single_pair_class({0.2, 0.4});
  ExpWeights one(2);
  one.update_zero_one(grid, 0, 0, 0.0, 1.0);
  const auto q = one.weights();
  CHECK(q[0] / q[1] == doctest::Approx(std::exp(0.12)).epsilon(1e-13));
  CHECK_THROWS_AS(one.update_zero_one(grid, 0, 0, 0.0, 0.5), ArgumentError);

  ExpWeights dead(2);
  CHECK_THROWS_AS(dead.update_zero_one(grid, 0, 0, 0.9, 0.0), StateError);
}
