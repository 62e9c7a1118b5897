#include <cmath>
#include <numeric>

#include "doctest.h"
#include "varbandit/environments.h"
#include "varbandit/errors.h"
#include "varbandit/zeroone.h"

using namespace varbandit;

TEST_CASE("zero-one learner distribution") {
  Rng rng(1);
  const auto cls = eluder_class(2, 4);
  ZeroOnePolicy p(cls);
  CHECK(p.gamma() == doctest::Approx(std::sqrt(8.0 * 4 / std::log(7.0))));

  // Two tied leaders, nothing learned yet.
  const FiniteFunctionClass tie(1, 2, {0.5, 0.5, 0.5, 0.5});
  ZeroOnePolicy t(tie);
  t.choose(0, std::nullopt, rng);
  CHECK(t.last_round().probs[0] == doctest::Approx(0.5));
  CHECK(t.last_round().probs[1] == doctest::Approx(0.5));

  ZeroOnePolicy one(FiniteFunctionClass(1, 3, {0.1, 0.9, 0.3}));
  CHECK(one.choose(0, std::nullopt, rng).action == 1);
  CHECK(one.last_round().probs[1] == 1.0);
  CHECK_THROWS_AS(one.choose(0, std::nullopt, rng), StateError);
  CHECK_THROWS_AS(one.observe(0, 1, 0.9, 0.5), ArgumentError);
  CHECK_THROWS_AS(one.observe(0, 1, 0.9, std::nullopt), ArgumentError);
  CHECK_FALSE(one.supports(VarianceModel::kWeakRevealedStart));
  CHECK(one.supports(VarianceModel::kWeakRevealedEnd));

  // Scale grows with the revealed variance count.
  ZeroOnePolicy s(tie);
  for (int i = 0; i < 3; ++i) {
    s.choose(0, std::nullopt, rng);
    s.observe(0, 0, 0.5, 1.0);
  }
  s.choose(0, std::nullopt, rng);
  CHECK(s.variance_sum() == 3.0);
  CHECK(s.last_round().scale == doctest::Approx(s.gamma() * 2.0));
  double total = 0.0;
  for (const double v : s.last_round().probs) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("zero-one version space") {
  Rng rng(2);
  const auto cls = eluder_class(2, 3);
  ZeroOnePolicy p(cls);
  p.choose(0, std::nullopt, rng);
  p.observe(0, 2, 0.5, 0.0);  // every function pays 1/2 on the safe action
  CHECK(mask_count(*p.version_space()) == 5);

  p.choose(1, std::nullopt, rng);
  p.observe(1, 0, 0.0, 0.0);  // rules out the function paying 1 at (1, 0)
  const Mask& m = *p.version_space();
  CHECK(mask_count(m) == 4);
  CHECK_FALSE(m[1 + 1 * 2 + 0]);
  CHECK_FALSE(p.regression().feasible(3));

  p.choose(0, std::nullopt, rng);
  p.observe(0, 0, 0.0, 1.0);
  CHECK(mask_count(*p.version_space()) == 4);

  p.choose(0, std::nullopt, rng);
  CHECK_THROWS_AS(p.observe(0, 0, 0.7, 0.0), InvariantError);
}

TEST_CASE("noiseless runs stop paying once the leaders agree") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto base = eluder_class(4, 3);
    const FunctionId star = seed % base.n_functions();
    const auto cls = base.with_star(star);
    ZeroOnePolicy p(cls);
    for (std::size_t t = 0; t < 500; ++t) {
      Rng rng = Rng::for_stream(seed, 0, t, StreamPurpose::kPolicy);
      const ContextId x = rng.below(4);
      const auto d = p.choose(x, std::nullopt, rng);
      const auto& support = p.last_round().support;
      Mask star_only(cls.n_functions(), false);
      star_only[star] = true;
      if (support == restrict_actions(cls, star_only, x)) {
        const double best = cls.value(star, x, best_action(cls, star, x));
        REQUIRE(best - cls.value(star, x, d.action) == 0.0);
      }
      p.observe(x, d.action, cls.value(star, x, d.action), 0.0);
      REQUIRE((*p.version_space())[star]);
    }
  }
}

TEST_CASE("SquareCB baseline") {
  Rng rng(3);
  const auto cls = eluder_class(1, 3);
  SquareCB s(cls, 400);
  CHECK(s.gamma() == doctest::Approx(std::sqrt(3.0 * 400 / std::log(3.0))));

  const FiniteFunctionClass same(1, 3, {0.2, 0.5, 0.1, 0.2, 0.5, 0.1});
  SquareCB flat(same, 100);
  flat.choose(0, std::nullopt, rng);
  const auto& p = flat.last_round().probs;
  CHECK(flat.last_round().leader == 1);
  CHECK(p[0] == doctest::Approx(1.0 / (3 + flat.gamma() * 0.3)));
  CHECK(p[2] == doctest::Approx(1.0 / (3 + flat.gamma() * 0.4)));
  CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0));

  const FiniteFunctionClass pair(1, 2, {0.2, 0.0, 0.4, 0.0});
  SquareCB w(pair, 10);
  w.choose(0, std::nullopt, rng);
  w.observe(0, 0, 0.0, std::nullopt);
  const auto q = w.regression().weights();
  CHECK(q[0] / q[1] == doctest::Approx(std::exp(0.16 - 0.04)));

  // Aggregation bound on a noiseless instance.
  const auto rc = [] { Rng r(77); return random_class(16, 3, 4, r); }();
  SquareCB learner(rc.with_star(5), 3000);
  double err = 0.0;
  for (std::size_t t = 0; t < 3000; ++t) {
    Rng r = Rng::for_stream(9, 0, t, StreamPurpose::kPolicy);
    const ContextId x = r.below(3);
    const auto d = learner.choose(x, std::nullopt, r);
    const double pred = learner.regression().predict(rc, x)[d.action];
    const double truth = rc.value(5, x, d.action);
    err += (pred - truth) * (pred - truth);
    learner.observe(x, d.action, truth, std::nullopt);
  }
  CHECK(err <= 2.0 * std::log(16.0) + 1.0);
}
