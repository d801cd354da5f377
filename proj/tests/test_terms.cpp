#include <cmath>
#include <limits>
#include <memory>

#include "doctest.h"
#include "oracles.hpp"
#include "pdsplit/logistic.hpp"
#include "pdsplit/rng.hpp"
#include "pdsplit/terms.hpp"

using namespace pdsplit;

TEST_CASE("soft threshold componentwise") {
  CHECK(prox_l1(1.0, {2.0, -0.5, 0.0}) == Vec{1.0, 0.0, 0.0});
  CHECK(prox_l1(0.1, Vec(4, 0.0)) == Vec(4, 0.0));

  // brute-force check of the defining minimization
  const double gamma = 0.3;
  const double target = 0.7;
  const double expected = oracle::grid_min_1d(
      [&](double w) {
        return std::fabs(w) + (w - target) * (w - target) / (2.0 * gamma);
      },
      -3.0, 3.0);
  const Vec p = prox_l1(gamma, {target});
  CHECK(p[0] == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(p[0] == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("soft threshold rejects bad input") {
  CHECK_THROWS_AS(prox_l1(0.0, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(prox_l1(-1.0, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(prox_l1(1.0, {std::numeric_limits<double>::quiet_NaN()}),
                  std::invalid_argument);
  CHECK_THROWS_AS(prox_l1(1.0, {std::numeric_limits<double>::infinity()}),
                  std::invalid_argument);
}

TEST_CASE("quadratic prox closed form") {
  const Vec x{3.0, -1.0, 0.5};
  CHECK(prox_quadratic(0.0, 1.0, x) == x);
  CHECK(prox_quadratic(1.0, 1.0, {2.0}) == Vec{1.0});

  const double expected = oracle::grid_min_1d(
      [](double w) {
        return 1.5 * w * w + (w - 5.0) * (w - 5.0) / (2.0 * 0.5);
      },
      -10.0, 10.0);
  const Vec p = prox_quadratic(3.0, 0.5, {5.0});
  CHECK(p[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("pair consensus prox is the midpoint projection") {
  auto [a, b] = prox_pair_consensus(1.0, {1.0}, {3.0});
  CHECK(a == Vec{2.0});
  CHECK(b == Vec{2.0});

  auto [c, d] = prox_pair_consensus(1.0, {0.25, -4.0}, {0.25, -4.0});
  CHECK(c == Vec{0.25, -4.0});
  CHECK(d == Vec{0.25, -4.0});

  // projection ignores the step
  auto big = prox_pair_consensus(7.0, {1.0, 2.0}, {5.0, -2.0});
  auto small = prox_pair_consensus(0.1, {1.0, 2.0}, {5.0, -2.0});
  CHECK(big == small);

  CHECK_THROWS_AS(prox_pair_consensus(1.0, {1.0}, {1.0, 2.0}),
                  std::invalid_argument);
}

TEST_CASE("conjugate prox through the identity") {
  // indicator of the pair-consensus set: conjugate prox projects onto the
  // antidiagonal, computed directly as the oracle
  auto h = pair_consensus_term();
  Vec y{1.0, 3.0};
  Vec conj = moreau_prox_conjugate(h, 1.0, y);
  CHECK(conj[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(conj[1] == doctest::Approx(1.0).epsilon(1e-15));
  const double anti = 0.5 * (y[0] - y[1]);
  CHECK(conj[0] == doctest::Approx(anti).epsilon(1e-15));
  CHECK(conj[1] == doctest::Approx(-anti).epsilon(1e-15));

  // zero term: the conjugate is the indicator of the origin
  auto z = zero_prox_term();
  Vec out = moreau_prox_conjugate(z, 2.5, {4.0, -1.0, 0.3});
  for (double v : out) CHECK(v == 0.0);

  // the identity itself, on random data
  Rng rng(71);
  auto l1 = l1_term(0.8);
  for (int trial = 0; trial < 300; ++trial) {
    const double rho = rng.uniform(0.05, 5.0);
    Vec x = oracle::random_vec(6, rng, 2.0);
    Vec c = moreau_prox_conjugate(l1, rho, x);
    Vec p = l1.prox(rho, scaled(rho, x));
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(c[i] + p[i] / rho == doctest::Approx(x[i]).epsilon(1e-12));
  }
}

TEST_CASE("prox catalog: optimality and firm nonexpansiveness") {
  Rng rng(2024);
  std::vector<ProxableTerm> catalog = {
      l1_term(1.0), l1_term(0.3), quadratic_prox_term(2.0), zero_prox_term(),
      pair_consensus_term()};
  for (const auto& term : catalog) {
    for (int trial = 0; trial < 1000; ++trial) {
      const double gamma = rng.uniform(0.05, 4.0);
      Vec x = oracle::random_vec(6, rng, 2.0);
      Vec y = oracle::random_vec(6, rng, 2.0);
      Vec px = term.prox(gamma, x);
      Vec py = term.prox(gamma, y);

      // no perturbation of the prox may decrease the prox objective
      const double base = term.eval(px) + sqnorm(sub(px, x)) / (2.0 * gamma);
      for (int probe = 0; probe < 5; ++probe) {
        Vec w = px;
        for (auto& v : w) v += 0.1 * rng.normal();
        const double cand = term.eval(w) + sqnorm(sub(w, x)) / (2.0 * gamma);
        CHECK(cand >= base - 1e-9);
      }

      const double lhs = sqnorm(sub(px, py));
      const double rhs = dot(sub(px, py), sub(x, y));
      CHECK(lhs <= rhs + 1e-9);
    }
  }
}

TEST_CASE("zero terms are first-class") {
  CHECK(zero_smooth_term().is_zero);
  CHECK(zero_prox_term().is_zero);
  CHECK_FALSE(l1_term(1.0).is_zero);
  CHECK_FALSE(quadratic_smooth_term(1.0, {0.0}).is_zero);
  Vec x{1.0, -2.0};
  CHECK(zero_smooth_term().eval(x) == 0.0);
  CHECK(zero_smooth_term().grad(x) == Vec{0.0, 0.0});
  CHECK(zero_prox_term().prox(3.0, x) == x);
}

TEST_CASE("diagonally scaled proxes agree with the scalar ones") {
  Rng rng(5);
  auto l1 = l1_term(0.6);
  auto quad = quadratic_prox_term(1.7);
  for (int trial = 0; trial < 100; ++trial) {
    const double gamma = rng.uniform(0.1, 2.0);
    Vec x = oracle::random_vec(5, rng);
    Vec gvec(5, gamma);
    CHECK(l1.prox_diag(gvec, x) == l1.prox(gamma, x));
    CHECK(quad.prox_diag(gvec, x) == quad.prox(gamma, x));
  }
}

TEST_CASE("smooth quadratic term") {
  Rng rng(9);
  auto f = quadratic_smooth_term(2.5, {1.0, -1.0});
  CHECK(f.lipschitz == 2.5);
  for (int trial = 0; trial < 50; ++trial) {
    Vec x = oracle::random_vec(2, rng);
    Vec g = f.grad(x);
    Vec fd = oracle::finite_diff_grad(f.eval, x);
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(g[i] == doctest::Approx(fd[i]).epsilon(1e-6));
  }
}

namespace {

LogisticLossTerm tiny_logistic() {
  LogisticLossTerm term;
  term.dim = 3;
  term.scale = 0.25;
  term.rows = {{{0, 2}, {1.0, -0.5}},
               {{1}, {2.0}},
               {{0, 1, 2}, {0.3, 0.4, -0.2}},
               {{2}, {1.5}}};
  term.labels = {1, -1, 1, -1};
  return term;
}

}  // namespace

TEST_CASE("logistic value and gradient") {
  auto term = tiny_logistic();

  SUBCASE("value at zero is log 2") {
    auto [v, g] = logistic_value_grad(term, {0.0, 0.0, 0.0});
    CHECK(v == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    (void)g;
  }

  SUBCASE("gradient matches finite differences") {
    Rng rng(40);
    for (int trial = 0; trial < 30; ++trial) {
      Vec x = oracle::random_vec(3, rng, 2.0);
      auto [v, g] = logistic_value_grad(term, x);
      (void)v;
      Vec fd = oracle::finite_diff_grad(
          [&](const Vec& p) { return logistic_value_grad(term, p).first; }, x);
      for (std::size_t i = 0; i < 3; ++i)
        CHECK(g[i] ==
              doctest::Approx(fd[i]).epsilon(1e-5).scale(std::fabs(fd[i]) + 1));
    }
  }

  SUBCASE("single-row loss decreases to zero along the margin") {
    LogisticLossTerm one;
    one.dim = 1;
    one.scale = 1.0;
    one.rows = {{{0}, {1.0}}};
    one.labels = {1};
    double prev = logistic_value_grad(one, {0.0}).first;
    for (double t : {1.0, 5.0, 20.0, 100.0, 500.0}) {
      const double v = logistic_value_grad(one, {t}).first;
      CHECK(v < prev);
      CHECK(v >= 0.0);
      prev = v;
    }
    CHECK(prev == doctest::Approx(0.0).epsilon(1e-12));
    // overflow-safe far into both tails
    CHECK(std::isfinite(logistic_value_grad(one, {5000.0}).first));
    CHECK(std::isfinite(logistic_value_grad(one, {-5000.0}).first));
    CHECK(logistic_value_grad(one, {-5000.0}).first ==
          doctest::Approx(5000.0).epsilon(1e-12));
  }

  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(logistic_value_grad(term, {1.0}), std::invalid_argument);
  }
}

TEST_CASE("lipschitz estimate") {
  LogisticLossTerm term;
  term.dim = 2;
  term.scale = 0.5;
  term.rows = {{{0}, {1.0}}, {{1}, {2.0}}};
  term.labels = {1, -1};
  CHECK(lipschitz_estimate(term) == 1.0);  // 0.25 * max(1, 4)

  LogisticLossTerm zeros;
  zeros.dim = 2;
  zeros.scale = 1.0;
  zeros.rows = {{{}, {}}, {{}, {}}};
  zeros.labels = {1, -1};
  CHECK(lipschitz_estimate(zeros) == 0.0);

  LogisticLossTerm empty;
  CHECK_THROWS_AS(lipschitz_estimate(empty), std::invalid_argument);

  // the estimate really bounds the gradient variation
  auto t = tiny_logistic();
  const double bound = lipschitz_estimate(t);
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    Vec x = oracle::random_vec(3, rng, 3.0);
    Vec y = oracle::random_vec(3, rng, 3.0);
    const double lhs = dist2(logistic_value_grad(t, x).second,
                             logistic_value_grad(t, y).second);
    CHECK(lhs <= bound * dist2(x, y) + 1e-12);
  }
}

TEST_CASE("smooth view of the loss carries the estimated constant") {
  auto term = tiny_logistic();
  CHECK(term.as_smooth().lipschitz == lipschitz_estimate(term));

  // the gradient counter sees every evaluation
  auto counter = std::make_shared<long>(0);
  auto smooth = term.as_smooth(counter);
  Vec x(3, 0.0);
  smooth.grad(x);
  smooth.grad(x);
  smooth.eval(x);
  CHECK(*counter == 2);
}

TEST_CASE("smooth-term sum accumulates lipschitz and gradient") {
  auto sum = sum_smooth_terms(
      {quadratic_smooth_term(1.0, {0.0}), quadratic_smooth_term(2.0, {3.0})});
  CHECK(sum.lipschitz == 3.0);
  Vec g = sum.grad({1.0});
  CHECK(g[0] == doctest::Approx(1.0 + 2.0 * (1.0 - 3.0)).epsilon(1e-15));
  CHECK_FALSE(sum.is_zero);
}

TEST_CASE("inner-gradient prox solves the smooth subproblem") {
  Rng rng(33);
  // prox of (w/2)|x-c|^2 has a closed form to compare against
  auto smooth = quadratic_smooth_term(1.8, {2.0, -1.0});
  auto viaprox = prox_via_inner_gradient(smooth, 1e-13);
  for (int trial = 0; trial < 20; ++trial) {
    const double gamma = rng.uniform(0.1, 3.0);
    Vec x = oracle::random_vec(2, rng, 2.0);
    Vec got = viaprox.prox(gamma, x);
    for (std::size_t i = 0; i < 2; ++i) {
      const double c = (i == 0) ? 2.0 : -1.0;
      const double expected = (x[i] + gamma * 1.8 * c) / (1.0 + gamma * 1.8);
      CHECK(got[i] == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}
