#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "pdsplit/avgop.hpp"
#include "pdsplit/block_vector.hpp"
#include "pdsplit/rng.hpp"

using namespace pdsplit;

namespace {

FixedPointOperator halving_operator(std::vector<std::size_t> layout) {
  FixedPointOperator op;
  op.layout = std::move(layout);
  op.alpha = 0.5;
  op.apply = [](const BlockVector& x) {
    BlockVector out(x.layout(), scaled(0.5, x.data()));
    return out;
  };
  return op;
}

/// Affine alpha-averaged map with fixed point `center`:
/// T x = center + (1-alpha)(x-center) + alpha * contraction * Q (x-center).
FixedPointOperator random_averaged_operator(std::vector<std::size_t> layout,
                                            double alpha, Rng& rng,
                                            Vec* fixed_point) {
  std::size_t dim = 0;
  for (auto b : layout) dim += b;
  auto q = std::make_shared<std::vector<Vec>>(oracle::random_orthogonal(dim, rng));
  auto center = std::make_shared<Vec>(oracle::random_vec(dim, rng, 2.0));
  const double contraction = rng.uniform(0.2, 1.0);
  if (fixed_point) *fixed_point = *center;

  FixedPointOperator op;
  op.layout = std::move(layout);
  op.alpha = alpha;
  op.apply = [q, center, alpha, contraction](const BlockVector& x) {
    const std::size_t n = center->size();
    Vec dev(n);
    for (std::size_t i = 0; i < n; ++i) dev[i] = x.data()[i] - (*center)[i];
    Vec rotated(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) rotated[i] += (*q)[i][j] * dev[j];
    Vec out(n);
    for (std::size_t i = 0; i < n; ++i)
      out[i] = (*center)[i] + (1.0 - alpha) * dev[i] +
               alpha * contraction * rotated[i];
    return BlockVector(x.layout(), std::move(out));
  };
  return op;
}

}  // namespace

TEST_CASE("block vector layout") {
  BlockVector v({2, 3});
  CHECK(v.dim() == 5);
  CHECK(v.blocks() == 2);
  v.block(1)[0] = 7.0;
  CHECK(v.data()[2] == 7.0);
  CHECK_THROWS_AS(v.block(2), std::out_of_range);
  CHECK_THROWS_AS(BlockVector({2, 2}, Vec{1.0}), std::invalid_argument);
}

TEST_CASE("km iteration on a linear contraction") {
  auto op = halving_operator({1});
  auto schedule = RelaxationSchedule::constant(1.0);
  StoppingRule stop;
  stop.tol = 1e-12;
  auto run = km_iterate(op, BlockVector({1}, {8.0}), schedule, stop);
  CHECK(run.converged);
  CHECK(run.x.data()[0] == doctest::Approx(0.0).epsilon(1e-11));
  // the residual trace follows 8, 4, 2, 1, ... (residual = |x/2| here)
  REQUIRE(run.trace.records.size() >= 4);
  CHECK(run.trace.records[0].objective == doctest::Approx(4.0));
  CHECK(run.trace.records[1].objective == doctest::Approx(2.0));
  CHECK(run.trace.records[2].objective == doctest::Approx(1.0));
}

TEST_CASE("km with a projection converges in one step") {
  // prox of the pair-consensus indicator as the operator
  FixedPointOperator op;
  op.layout = {1, 1};
  op.alpha = 0.5;
  op.apply = [](const BlockVector& x) {
    const double mid = 0.5 * (x.data()[0] + x.data()[1]);
    return BlockVector(x.layout(), {mid, mid});
  };
  StoppingRule stop;
  stop.tol = 1e-14;
  auto run = km_iterate(op, BlockVector({1, 1}, {0.0, 2.0}),
                        RelaxationSchedule::constant(1.0), stop);
  CHECK(run.converged);
  CHECK(run.iterations == 1);
  CHECK(run.x.data() == Vec{1.0, 1.0});
}

TEST_CASE("km drives a gradient step operator to the minimizer") {
  // T x = x - tau * grad f with a 2-D strongly convex quadratic
  Rng rng(12);
  std::vector<Vec> Q{{3.0, 0.5}, {0.5, 1.0}};
  Vec b{1.0, -2.0};
  const double lip = 3.2;  // crude upper bound of the top eigenvalue
  const double tau = 1.0 / lip;
  auto f = oracle::dense_quadratic_term(Q, b, lip);

  FixedPointOperator op;
  op.layout = {2};
  op.alpha = 0.5;  // tau = 1/L makes the gradient step firmly nonexpansive
  op.apply = [f, tau](const BlockVector& x) {
    Vec g = f.grad(x.data());
    Vec out(x.data());
    axpy(-tau, g, out);
    return BlockVector(x.layout(), std::move(out));
  };

  StoppingRule stop;
  stop.tol = 1e-12;
  auto run = km_iterate(op, BlockVector({2}, {5.0, 5.0}),
                        RelaxationSchedule::constant(1.0), stop);
  Vec expected = oracle::lu_solve(Q, b);
  CHECK(run.converged);
  CHECK(run.x.data()[0] == doctest::Approx(expected[0]).epsilon(1e-8));
  CHECK(run.x.data()[1] == doctest::Approx(expected[1]).epsilon(1e-8));
}

TEST_CASE("full-selection randomized run reproduces the deterministic one") {
  Rng seed_rng(99);
  Vec center;
  auto op = random_averaged_operator({2, 1, 3}, 0.7, seed_rng, &center);
  auto selector = CoordinateSelector::always_all(3);
  auto schedule = RelaxationSchedule::constant(0.9);
  StoppingRule stop;
  stop.tol = 1e-13;
  stop.max_iters = 2000;

  BlockVector x0({2, 1, 3}, oracle::random_vec(6, seed_rng, 3.0));
  auto det = km_iterate(op, x0, schedule, stop);
  auto rnd = randomized_km_iterate(op, x0, schedule, selector, 5, stop);
  CHECK(det.iterations == rnd.iterations);
  CHECK(det.x.data() == rnd.x.data());  // bit-identical trajectories
  for (std::size_t i = 0; i < det.trace.records.size(); ++i)
    CHECK(det.trace.records[i].objective == rnd.trace.records[i].objective);
}

TEST_CASE("single-block selection still contracts to the fixed point") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto op = halving_operator({1, 1});
    auto selector = CoordinateSelector::uniform_single(2);
    StoppingRule stop;
    stop.tol = 1e-9;
    stop.max_iters = 3000;
    stop.check_every = 1;
    auto run = randomized_km_iterate(op, BlockVector({1, 1}, {3.0, -4.0}),
                                     RelaxationSchedule::constant(1.0),
                                     selector, seed, stop);
    CHECK(run.converged);
    // per-audit residuals never increase for this operator
    for (std::size_t i = 1; i < run.trace.records.size(); ++i)
      CHECK(run.trace.records[i].objective <=
            run.trace.records[i - 1].objective + 1e-15);
  }
}

TEST_CASE("selector validation enforces full coverage") {
  // block 1 never selected
  CHECK_THROWS_AS(CoordinateSelector(2, {{{0}, 1.0}}), std::invalid_argument);
  // probabilities must sum to one
  CHECK_THROWS_AS(CoordinateSelector(2, {{{0}, 0.5}, {{1}, 0.4}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(CoordinateSelector(2, {}), std::invalid_argument);
  CHECK_THROWS_AS(CoordinateSelector(2, {{{0, 5}, 1.0}}),
                  std::invalid_argument);
  // weights q are inverse selection probabilities
  CoordinateSelector sel(2, {{{0}, 0.25}, {{0, 1}, 0.75}});
  CHECK(sel.block_weights()[0] == doctest::Approx(1.0));
  CHECK(sel.block_weights()[1] == doctest::Approx(1.0 / 0.75));
}

TEST_CASE("relaxation schedule bounds") {
  auto s = RelaxationSchedule::constant(1.5);
  CHECK_THROWS_AS(s.validate_for(0.8), std::invalid_argument);  // 1.5 >= 1/0.8
  CHECK_NOTHROW(s.validate_for(0.5));
  CHECK(RelaxationSchedule::default_for(0.5).eta(0) == 1.0);
  CHECK(RelaxationSchedule::default_for(0.8).eta(0) ==
        doctest::Approx(0.9 / 0.8));
}

TEST_CASE("divergence is detected and reported") {
  FixedPointOperator op;
  op.layout = {1};
  op.alpha = 0.5;  // deliberately mislabeled expansive map
  op.apply = [](const BlockVector& x) {
    return BlockVector(x.layout(), scaled(3.0, x.data()));
  };
  StoppingRule stop;
  stop.max_iters = 200;
  CHECK_THROWS_WITH_AS(
      static_cast<void>(km_iterate(op, BlockVector({1}, {1.0}),
                                   RelaxationSchedule::constant(1.0), stop)),
      doctest::Contains("diverged"), std::runtime_error);
}

TEST_CASE("weighted norm") {
  CoordinateSelector uniform = CoordinateSelector::uniform_single(2);
  BlockVector x({1, 1}, {3.0, 4.0});
  // q_j = 2 so the squared weighted norm doubles the plain one
  CHECK(weighted_norm(uniform, x) * weighted_norm(uniform, x) ==
        doctest::Approx(2.0 * sqnorm(x.data())).epsilon(1e-15));

  CoordinateSelector all = CoordinateSelector::always_all(2);
  CHECK(weighted_norm(all, x) == doctest::Approx(norm2(x.data())));

  // homogeneity
  BlockVector cx({1, 1}, {-7.5 * 3.0, -7.5 * 4.0});
  CHECK(weighted_norm(uniform, cx) ==
        doctest::Approx(7.5 * weighted_norm(uniform, x)).epsilon(1e-13));
}

TEST_CASE("expected one-step descent: hand-computed two-block case") {
  auto op = halving_operator({1, 1});
  auto selector = CoordinateSelector::uniform_single(2);
  BlockVector x({1, 1}, {1.0, 1.0});
  BlockVector xstar({1, 1}, {0.0, 0.0});

  auto check = expected_descent_check(op, selector, 1.0, x, xstar);
  // |||x - x*|||^2 = 4; full-step term |Ux-x*|^2 - |x-x*|^2 = 1/2 - 2
  CHECK(check.lhs == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(std::fabs(check.identity_gap) <= 1e-15);
  // rhs = 4 - 1*(1-0.5)*|x - Tx|^2 = 4 - 0.5*0.5
  CHECK(check.rhs == doctest::Approx(3.75).epsilon(1e-15));
  CHECK(check.lhs <= check.rhs + 1e-10);

  // at the fixed point both sides vanish
  auto at_star = expected_descent_check(op, selector, 1.0, xstar, xstar);
  CHECK(at_star.lhs == 0.0);
  CHECK(at_star.rhs == 0.0);
}

TEST_CASE("expected descent holds for random operators and selectors") {
  Rng rng(314);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t j = 2 + rng.below(3);
    std::vector<std::size_t> layout(j);
    for (auto& b : layout) b = 1 + rng.below(3);
    const double alpha = rng.uniform(0.1, 1.0);
    Vec center;
    auto op = random_averaged_operator(layout, alpha, rng, &center);

    // random support covering every block
    std::vector<std::pair<CoordinateSelector::Subset, double>> support;
    CoordinateSelector::Subset all(j);
    for (std::size_t i = 0; i < j; ++i) all[i] = i;
    support.push_back({all, 0.25});
    double left = 0.75;
    for (std::size_t i = 0; i < j; ++i) {
      const double p = (i + 1 == j) ? left : left * rng.uniform(0.2, 0.8);
      support.push_back({{i}, p});
      left -= p;
    }
    CoordinateSelector selector(j, support);

    const double eta = rng.uniform(0.05, 0.999 / alpha);
    BlockVector x(layout);
    for (auto& v : x.data()) v = 2.0 * rng.normal();
    BlockVector xstar(layout, center);

    auto check = expected_descent_check(op, selector, eta, x, xstar);
    CHECK(std::fabs(check.identity_gap) <=
          1e-12 * std::max(1.0, std::fabs(check.lhs)));
    CHECK(check.lhs <= check.rhs + 1e-10);
  }
}

TEST_CASE("expected descent rejects a non-fixed point") {
  auto op = halving_operator({1, 1});
  auto selector = CoordinateSelector::uniform_single(2);
  BlockVector x({1, 1}, {1.0, 1.0});
  BlockVector not_fixed({1, 1}, {0.5, 0.0});
  CHECK_THROWS_AS(
      static_cast<void>(expected_descent_check(op, selector, 1.0, x, not_fixed)),
      std::invalid_argument);
}
