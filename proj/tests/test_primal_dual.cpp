#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "pdsplit/linear_operator.hpp"
#include "pdsplit/primal_dual.hpp"
#include "pdsplit/rng.hpp"
#include "pdsplit/terms.hpp"

using namespace pdsplit;

namespace {

CompositeProblem simple_problem(SmoothTerm f, ProxableTerm g, ProxableTerm h,
                                LinearOperator M, double lifted) {
  CompositeProblem p;
  p.f = std::move(f);
  p.g = std::move(g);
  p.h = std::move(h);
  p.M = std::move(M);
  p.lifted_lipschitz = lifted;
  return p;
}

/// 0.5 (z - b)^2 componentwise with closed-form prox (v + gamma b)/(1 + gamma).
ProxableTerm shifted_quadratic_prox(Vec b) {
  ProxableTerm t;
  auto center = std::make_shared<Vec>(std::move(b));
  t.eval = [center](const Vec& z) {
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double d = z[i] - (*center)[i];
      s += 0.5 * d * d;
    }
    return s;
  };
  t.prox = [center](double gamma, const Vec& v) {
    Vec r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      r[i] = (v[i] + gamma * (*center)[i]) / (1.0 + gamma);
    return r;
  };
  return t;
}

/// Scaled-orthogonal operator M = c Q with the exact scalar Gram diagonal.
LinearOperator scaled_orthogonal_operator(double c, std::vector<Vec> q) {
  const std::size_t n = q.size();
  LinearOperator op;
  op.dim_in = op.dim_out = n;
  op.injective = true;
  auto mat = std::make_shared<std::vector<Vec>>(std::move(q));
  op.apply = [mat, c](const Vec& x) {
    Vec r = linalg::matvec(*mat, x);
    scale(c, r);
    return r;
  };
  op.adjoint = [mat, c](const Vec& y) {
    Vec r = linalg::matvec_transpose(*mat, y);
    scale(c, r);
    return r;
  };
  const double c2 = c * c;
  op.gram_diag.assign(n, c2);
  op.gram_opnorm = c2;
  op.gram_inverse = [c2](const Vec& v) {
    Vec r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i] / c2;
    return r;
  };
  return op;
}

/// Lifted one-space form of min f(x) + g(x) + h(Mx) for injective M,
/// built from the generic pull-back/push-forward formulas.
VuCondatProblem lift_through(const CompositeProblem& p) {
  VuCondatProblem vp;
  vp.dim = p.M.dim_out;
  vp.h = p.h;
  auto M = std::make_shared<LinearOperator>(p.M);
  auto f = std::make_shared<SmoothTerm>(p.f);
  auto g = std::make_shared<ProxableTerm>(p.g);
  auto pull = [M](const Vec& y) { return M->gram_inverse(M->adjoint(y)); };
  vp.fbar.eval = [f, pull](const Vec& y) { return f->eval(pull(y)); };
  vp.fbar.grad = [f, M, pull](const Vec& y) {
    return M->apply(M->gram_inverse(f->grad(pull(y))));
  };
  vp.fbar.lipschitz = p.lifted_lipschitz;
  vp.fbar.is_zero = p.f.is_zero;
  vp.gbar.eval = [g, pull](const Vec& y) { return g->eval(pull(y)); };
  vp.gbar.prox = [g, M](double gamma, const Vec& v) {
    return M->apply(
        detail::solve_x_subproblem(*g, *M, gamma, Vec(M->dim_in, 0.0), v));
  };
  vp.gbar.is_zero = p.g.is_zero;
  return vp;
}

}  // namespace

TEST_CASE("step-size rule") {
  // 1/0.4 - 1/1 = 1.5 > L/2 = 1
  StepSizes ok = check_step_sizes(2.0, false, {0.4, 1.0});
  CHECK(ok.validated);
  // alpha = 1/(2 - alpha1), alpha1 = (L/2)/(1/tau - 1/rho) = 1/1.5
  CHECK(ok.alpha == doctest::Approx(1.0 / (2.0 - 1.0 / 1.5)).epsilon(1e-15));

  CHECK_THROWS_AS(check_step_sizes(2.0, false, {1.0, 1.0}),
                  std::invalid_argument);

  // with no smooth part, tau = rho is allowed
  StepSizes relaxed = check_step_sizes(0.0, true, {1.0, 1.0});
  CHECK(relaxed.validated);
  CHECK(relaxed.alpha == doctest::Approx(0.5));
  CHECK_THROWS_AS(check_step_sizes(0.0, true, {1.0, 0.5}),
                  std::invalid_argument);

  CHECK_THROWS_AS(check_step_sizes(1.0, false, {0.0, 1.0}),
                  std::invalid_argument);
  CHECK_FALSE(std::isnan(unchecked_step_sizes(1.0, 1.0).tau));
}

TEST_CASE("problem validation enforces injectivity with a smooth part") {
  // a non-injective M: 1x2 dense row
  LinearOperator wide = dense_operator({{1.0, 1.0}});
  CHECK_FALSE(wide.injective);
  auto p = simple_problem(quadratic_smooth_term(1.0, {0.0, 0.0}),
                          zero_prox_term(), zero_prox_term(), wide, 1.0);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.f = zero_smooth_term();
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("splitting step pins the iterate to an indicator") {
  const Vec c{2.0, -1.0};
  auto p = simple_problem(zero_smooth_term(), point_indicator_term(c),
                          zero_prox_term(), identity_operator(2), 0.0);
  StepSizes s = check_step_sizes(p, {0.7, 0.7});
  PrimalDualState st = PrimalDualState::initial(p, {5.0, 5.0}, {0.0, 0.0});
  for (int k = 0; k < 3; ++k) {
    st = admm_plus_step(p, s, st);
    CHECK(st.x == c);
  }
}

TEST_CASE("hand-unrolled scalar iteration") {
  // f = x^2/2, g = 0, h = indicator of {0}, M = I, tau = 0.4, rho = 1
  auto p = simple_problem(quadratic_smooth_term(1.0, {0.0}), zero_prox_term(),
                          point_indicator_term({0.0}), identity_operator(1),
                          1.0);
  StepSizes s = check_step_sizes(p, {0.4, 1.0});
  PrimalDualState st = PrimalDualState::initial(p, {1.0}, {0.0});
  st = admm_plus_step(p, s, st);
  CHECK(st.z[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(st.lambda[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(st.u[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(st.x[0] == doctest::Approx(-0.2).epsilon(1e-13));

  // the x-update really is the argmin it claims to be
  const double expected = oracle::grid_min_1d(
      [&](double x) {
        return x * 1.0 + (x - 0.6 + 0.4 * 1.0) * (x - 0.6 + 0.4 * 1.0) /
                             (2.0 * 0.4);
      },
      -3.0, 3.0);
  CHECK(st.x[0] == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("consensus-constrained quadratic reaches the KKT solution") {
  // two scalar agents through the pairing constraint x0 = x1
  Rng rng(8);
  for (int inst = 0; inst < 5; ++inst) {
    std::vector<Vec> Q = oracle::random_spd(2, 0.5, 3.0, rng);
    Vec b = oracle::random_vec(2, rng);
    auto p = simple_problem(oracle::dense_quadratic_term(Q, b, 3.0),
                            zero_prox_term(), pair_consensus_term(),
                            identity_operator(2), 3.0);
    StepSizes s = check_step_sizes(p, {0.2, 1.0});
    StoppingRule stop;
    stop.tol = 1e-12;
    stop.max_iters = 200000;
    auto run = solve(p, s, {0.0, 0.0}, {0.0, 0.0}, stop);

    Vec expected = oracle::kkt_qp(Q, b, {{1.0, -1.0}}, {0.0});
    CHECK(run.converged);
    CHECK(run.state.x[0] == doctest::Approx(expected[0]).epsilon(1e-8));
    CHECK(run.state.x[1] == doctest::Approx(expected[1]).epsilon(1e-8));
  }
}

TEST_CASE("dual step vanishes without a composite term") {
  auto p = simple_problem(quadratic_smooth_term(1.0, {3.0, 0.0}),
                          l1_term(0.4), zero_prox_term(),
                          identity_operator(2), 1.0);
  StepSizes s = check_step_sizes(p, {0.5, 2.0});
  VuCondatProblem vp;
  vp.dim = 2;
  vp.fbar = p.f;
  vp.gbar = p.g;
  vp.h = p.h;
  VuCondatState st{{0.0, 0.0}, {1.0, -2.0}};
  Vec fb = st.y;
  for (int k = 0; k < 30; ++k) {
    st = vu_condat_step(vp, s, st);
    CHECK(st.lambda == Vec{0.0, 0.0});
    fb = forward_backward_step(p.f, p.g, s.tau, fb);
    for (std::size_t i = 0; i < 2; ++i)
      CHECK(st.y[i] == doctest::Approx(fb[i]).epsilon(1e-12));
  }
}

TEST_CASE("primal-dual fixed point is invariant to machine precision") {
  // h pins y to a point c; the dual at the fixed point offsets the gradient
  const Vec c{1.5, -0.5};
  const double mu = 0.7;
  VuCondatProblem vp;
  vp.dim = 2;
  vp.fbar = quadratic_smooth_term(2.0, {0.0, 3.0});
  vp.gbar = quadratic_prox_term(mu);
  vp.h = point_indicator_term(c);
  StepSizes s = check_step_sizes(vp.fbar.lipschitz, false, {0.2, 1.0});

  Vec grad_at_c = vp.fbar.grad(c);
  Vec lambda_star(2);
  for (std::size_t i = 0; i < 2; ++i)
    lambda_star[i] = -grad_at_c[i] - mu * c[i];
  VuCondatState st{lambda_star, c};
  VuCondatState next = vu_condat_step(vp, s, st);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(next.lambda[i] == doctest::Approx(st.lambda[i]).epsilon(1e-12));
    CHECK(next.y[i] == doctest::Approx(st.y[i]).epsilon(1e-12));
  }
}

TEST_CASE("plain splitting equals the specialized recursion bit for bit") {
  Rng rng(44);
  auto p = simple_problem(zero_smooth_term(), l1_term(0.8),
                          shifted_quadratic_prox({1.0, -2.0, 0.5}),
                          identity_operator(3), 0.0);
  const double rho = 1.3;
  StepSizes s = check_step_sizes(p, {rho, rho});

  PrimalDualState a = PrimalDualState::initial(p, oracle::random_vec(3, rng),
                                               oracle::random_vec(3, rng));
  PrimalDualState b = a;
  for (int k = 0; k < 100; ++k) {
    a = admm_plus_step(p, s, a);
    b = admm_step(p, rho, b);
    CHECK(a.x == b.x);
    CHECK(a.lambda == b.lambda);
    CHECK(a.z == b.z);
  }
}

TEST_CASE("specialized recursion requires no smooth part") {
  auto p = simple_problem(quadratic_smooth_term(1.0, {0.0}), zero_prox_term(),
                          zero_prox_term(), identity_operator(1), 1.0);
  PrimalDualState st = PrimalDualState::zeros(p);
  CHECK_THROWS_AS(static_cast<void>(admm_step(p, 1.0, st)),
                  std::invalid_argument);
}

TEST_CASE("scalar shrinkage problem reaches the soft threshold") {
  // min |x| + 0.5 (x - b)^2 has the soft threshold as its solution
  const double b = 2.4;
  auto p = simple_problem(zero_smooth_term(), l1_term(1.0),
                          shifted_quadratic_prox({b}), identity_operator(1),
                          0.0);
  PrimalDualState st = PrimalDualState::zeros(p);
  for (int k = 0; k < 3000; ++k) st = admm_step(p, 1.0, st);
  CHECK(st.x[0] == doctest::Approx(b - 1.0).epsilon(1e-9));

  // and with nothing to do, the iterate freezes after one step
  auto idle = simple_problem(zero_smooth_term(), zero_prox_term(),
                             zero_prox_term(), identity_operator(1), 0.0);
  PrimalDualState ist = PrimalDualState::initial(idle, {5.0}, {2.0});
  ist = admm_step(idle, 1.0, ist);
  const double frozen = ist.x[0];
  for (int k = 0; k < 5; ++k) {
    ist = admm_step(idle, 1.0, ist);
    CHECK(ist.x[0] == frozen);
  }
}

TEST_CASE("proximal gradient specialization") {
  SUBCASE("one exact step on the canonical quadratic") {
    auto f = quadratic_smooth_term(1.0, {0.0, 0.0});
    Vec x = forward_backward_step(f, zero_prox_term(), 1.0, {4.0, -7.0});
    CHECK(x == Vec{0.0, 0.0});
  }

  SUBCASE("matches the splitting solver without a composite term") {
    Rng rng(3);
    std::vector<Vec> Q = oracle::random_spd(3, 0.3, 2.0, rng);
    Vec b = oracle::random_vec(3, rng);
    auto f = oracle::dense_quadratic_term(Q, b, 2.0);
    auto g = l1_term(0.3);
    auto p = simple_problem(f, g, zero_prox_term(), identity_operator(3), 2.0);
    StepSizes s = check_step_sizes(p, {0.4, 1e9});

    PrimalDualState st = PrimalDualState::zeros(p);
    Vec x(3, 0.0);
    for (int k = 0; k < 100; ++k) {
      st = admm_plus_step(p, s, st);
      x = forward_backward_step(f, g, s.tau, x);
      for (std::size_t i = 0; i < 3; ++i)
        CHECK(st.x[i] == doctest::Approx(x[i]).epsilon(1e-12));
    }
  }

  SUBCASE("shrinkage limit agrees with coordinate descent") {
    Rng rng(10);
    std::vector<Vec> Q = oracle::random_spd(4, 0.5, 3.0, rng);
    Vec b = oracle::random_vec(4, rng);
    const double weight = 0.5;
    auto f = oracle::dense_quadratic_term(Q, b, 3.0);
    auto g = l1_term(weight);
    Vec x(4, 0.0);
    for (int k = 0; k < 30000; ++k)
      x = forward_backward_step(f, g, 0.5, x);
    Vec expected =
        oracle::coordinate_descent_l1(Q, b, Vec(4, weight));
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(x[i] == doctest::Approx(expected[i]).epsilon(1e-8));
  }

  SUBCASE("oversized step rejected") {
    auto f = quadratic_smooth_term(2.0, {0.0});
    CHECK_THROWS_AS(
        static_cast<void>(forward_backward_step(f, zero_prox_term(), 1.0, {1.0})),
        std::invalid_argument);
    CHECK_THROWS_AS(check_forward_backward_step(2.0, 1.0),
                    std::invalid_argument);
    CHECK_NOTHROW(check_forward_backward_step(2.0, 0.99));
  }
}

TEST_CASE("residual pair") {
  auto p = simple_problem(quadratic_smooth_term(1.0, {0.0}), zero_prox_term(),
                          point_indicator_term({0.0}), identity_operator(1),
                          1.0);
  StepSizes s = check_step_sizes(p, {0.4, 1.0});
  PrimalDualState st = PrimalDualState::initial(p, {1.0}, {0.0});

  std::vector<double> sums;
  for (int k = 0; k < 400; ++k) {
    st = admm_plus_step(p, s, st);
    auto [primal, dual] = primal_dual_residual(p, st);
    CHECK(primal >= 0.0);
    CHECK(dual >= 0.0);
    sums.push_back(primal + dual);
  }
  // strictly decreasing after burn-in, down to the numeric floor
  for (std::size_t k = 20; k < sums.size(); ++k)
    if (sums[k - 1] > 1e-10) CHECK(sums[k] < sums[k - 1]);
  CHECK(sums.back() < 1e-10);

  // at the limit both residuals vanish
  auto [primal, dual] = primal_dual_residual(p, st);
  CHECK(primal <= 1e-9);
  CHECK(dual <= 1e-7);
}

TEST_CASE("one-space and splitting forms produce the same trajectory") {
  Rng rng(91);
  for (int inst = 0; inst < 6; ++inst) {
    const std::size_t n = 3;
    std::vector<Vec> Q = oracle::random_spd(n, 0.4, 2.5, rng);
    Vec b = oracle::random_vec(n, rng);

    LinearOperator M;
    double lifted;
    if (inst % 2 == 0) {
      const double c = rng.uniform(0.5, 2.0);
      M = scaled_orthogonal_operator(c, oracle::random_orthogonal(n, rng));
      lifted = 2.5 / (c * c);
    } else {
      Vec d(n);
      for (auto& v : d) v = rng.uniform(0.5, 2.0);
      M = diagonal_operator(d);
      double dmin = d[0];
      for (double v : d) dmin = std::min(dmin, v);
      lifted = 2.5 / (dmin * dmin);
    }

    auto p = simple_problem(oracle::dense_quadratic_term(Q, b, 2.5),
                            l1_term(0.3), l1_term(0.2), M, lifted);
    StepSizes s = check_step_sizes(p, {0.9 / lifted, 2.0 * 0.9 / lifted});

    VuCondatProblem vp = lift_through(p);
    PrimalDualState st = PrimalDualState::zeros(p);
    VuCondatState vst{Vec(n, 0.0), Vec(n, 0.0)};

    for (int k = 0; k < 100; ++k) {
      st = admm_plus_step(p, s, st);
      vst = vu_condat_step(vp, s, vst);
      Vec x_from_y = M.gram_inverse(M.adjoint(vst.y));
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(st.x[i] == doctest::Approx(x_from_y[i]).epsilon(1e-10));
        CHECK(st.lambda[i] == doctest::Approx(vst.lambda[i]).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("x-update subproblem matches coordinate descent through a dense map") {
  Rng rng(55);
  for (int inst = 0; inst < 8; ++inst) {
    const std::size_t rows = 6, cols = 3;
    std::vector<Vec> m(rows, Vec(cols));
    for (auto& r : m)
      for (auto& v : r) v = rng.normal();
    LinearOperator M = dense_operator(m);
    REQUIRE(M.injective);
    const double tau = rng.uniform(0.3, 1.5);
    const double weight = 0.4;
    Vec c = oracle::random_vec(cols, rng);
    Vec v = oracle::random_vec(rows, rng);

    Vec got = detail::solve_x_subproblem(l1_term(weight), M, tau, c, v, 1e-12);

    // same minimization as a quadratic-plus-l1 program
    std::vector<Vec> Q(cols, Vec(cols, 0.0));
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t a = 0; a < cols; ++a)
        for (std::size_t bcol = 0; bcol < cols; ++bcol)
          Q[a][bcol] += m[i][a] * m[i][bcol] / tau;
    Vec lin(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t a = 0; a < cols; ++a) lin[a] += m[i][a] * v[i] / tau;
    for (std::size_t a = 0; a < cols; ++a) lin[a] -= c[a];
    Vec expected = oracle::coordinate_descent_l1(Q, lin, Vec(cols, weight));

    for (std::size_t i = 0; i < cols; ++i)
      CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-7).scale(1.0));
  }
}

TEST_CASE("averagedness of the one-space operator in its metric") {
  Rng rng(123);
  const std::size_t n = 3;
  std::vector<Vec> Q = oracle::random_spd(n, 0.2, 1.8, rng);
  Vec b = oracle::random_vec(n, rng);
  VuCondatProblem vp;
  vp.dim = n;
  vp.fbar = oracle::dense_quadratic_term(Q, b, 1.8);
  vp.gbar = l1_term(0.25);
  vp.h = l1_term(0.4);
  StepSizes s = check_step_sizes(1.8, false, {0.5, 1.8});

  FixedPointOperator op = vu_condat_operator(vp, s);
  const double alpha = op.alpha;
  for (int pair = 0; pair < 500; ++pair) {
    BlockVector x({n, n}, oracle::random_vec(2 * n, rng, 2.0));
    BlockVector y({n, n}, oracle::random_vec(2 * n, rng, 2.0));
    BlockVector tx = op.apply(x);
    BlockVector ty = op.apply(y);
    BlockVector dxy(x.layout(), sub(x.data(), y.data()));
    BlockVector dtxy(x.layout(), sub(tx.data(), ty.data()));
    BlockVector dres(x.layout(), sub(sub(x.data(), tx.data()),
                                     sub(y.data(), ty.data())));
    const double lhs = op.metric.apply(dtxy, dtxy);
    const double rhs = op.metric.apply(dxy, dxy) -
                       (1.0 - alpha) / alpha * op.metric.apply(dres, dres);
    CHECK(lhs <= rhs + 1e-9 * std::max(1.0, op.metric.apply(dxy, dxy)));
  }
}
