#include "pdsplit/primal_dual.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace pdsplit {

void CompositeProblem::validate() const {
  if (!M.apply || !M.adjoint)
    throw std::invalid_argument("CompositeProblem: M must define apply/adjoint");
  if (!f.is_zero && !M.injective)
    throw std::invalid_argument(
        "CompositeProblem: M must be injective when f is nonzero");
  if (lifted_lipschitz < 0)
    throw std::invalid_argument("CompositeProblem: negative Lipschitz bound");
}

double CompositeProblem::objective(const Vec& x) const {
  return f.eval(x) + g.eval(x) + h.eval(M.apply(x));
}

StepSizes check_step_sizes(double lipschitz, bool f_is_zero, StepSizes steps) {
  if (!(steps.tau > 0) || !(steps.rho > 0))
    throw std::invalid_argument("check_step_sizes: tau and rho must be > 0");
  const double gap = 1.0 / steps.tau - 1.0 / steps.rho;
  if (f_is_zero) {
    if (gap < 0)
      throw std::invalid_argument(
          "check_step_sizes: need 1/tau - 1/rho >= 0 when f == 0; margin " +
          std::to_string(gap));
  } else {
    if (!(gap > lipschitz / 2))
      throw std::invalid_argument(
          "check_step_sizes: need 1/tau - 1/rho > L/2; margin " +
          std::to_string(gap - lipschitz / 2));
  }
  const double alpha1 = (lipschitz == 0.0 || gap == 0.0)
                            ? 0.0
                            : (lipschitz / 2.0) / gap;
  steps.alpha = 1.0 / (2.0 - alpha1);
  steps.validated = true;
  return steps;
}

StepSizes check_step_sizes(const CompositeProblem& problem, StepSizes steps) {
  problem.validate();
  return check_step_sizes(problem.lifted_lipschitz, problem.f.is_zero, steps);
}

StepSizes unchecked_step_sizes(double tau, double rho) {
  if (!(tau > 0) || !(rho > 0))
    throw std::invalid_argument("unchecked_step_sizes: tau and rho must be > 0");
  StepSizes s;
  s.tau = tau;
  s.rho = rho;
  s.validated = true;
  return s;
}

void check_forward_backward_step(double lipschitz, double tau) {
  if (!(tau > 0))
    throw std::invalid_argument("forward_backward: tau must be > 0");
  if (lipschitz > 0 && !(tau < 2.0 / lipschitz))
    throw std::invalid_argument(
        "forward_backward: step too large, need tau < 2/L");
}

PrimalDualState PrimalDualState::initial(const CompositeProblem& problem,
                                         Vec x0, Vec lambda0) {
  PrimalDualState s;
  if (x0.size() != problem.M.dim_in)
    throw std::invalid_argument("PrimalDualState: x0 dimension mismatch");
  if (lambda0.size() != problem.M.dim_out)
    throw std::invalid_argument("PrimalDualState: lambda0 dimension mismatch");
  s.x = std::move(x0);
  s.lambda = std::move(lambda0);
  s.z.assign(problem.M.dim_out, 0.0);
  s.u.assign(problem.M.dim_out, 0.0);
  s.prev_x = s.x;
  s.prev_lambda = s.lambda;
  return s;
}

PrimalDualState PrimalDualState::zeros(const CompositeProblem& problem) {
  return initial(problem, Vec(problem.M.dim_in, 0.0),
                 Vec(problem.M.dim_out, 0.0));
}

namespace detail {

Vec solve_x_subproblem(const ProxableTerm& g, const LinearOperator& M,
                       double tau, const Vec& c, const Vec& v, double tol) {
  // grad of the quadratic part at x is c + M*(Mx - v)/tau
  Vec mv = M.adjoint(v);

  if (g.is_zero && M.gram_inverse) {
    // (M*M) x = M*v - tau c
    Vec rhs(mv.size());
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = mv[i] - tau * c[i];
    return M.gram_inverse(rhs);
  }

  if (!M.gram_diag.empty()) {
    const Vec& d = M.gram_diag;
    Vec w(mv.size());
    for (std::size_t i = 0; i < w.size(); ++i)
      w[i] = (mv[i] - tau * c[i]) / d[i];
    bool uniform = true;
    for (std::size_t i = 1; i < d.size(); ++i)
      if (d[i] != d[0]) {
        uniform = false;
        break;
      }
    if (uniform && g.prox) return g.prox(tau / d[0], w);
    if (g.prox_diag) {
      Vec gamma(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) gamma[i] = tau / d[i];
      return g.prox_diag(gamma, w);
    }
    // fall through to the iterative path
  }

  if (!g.prox)
    throw std::invalid_argument(
        "solve_x_subproblem: no prox for g and no exact route through M");
  if (!(M.gram_opnorm > 0))
    throw std::invalid_argument(
        "solve_x_subproblem: missing Gram norm bound for the inner solver");

  const double lip = M.gram_opnorm / tau;
  const double step = 1.0 / lip;
  Vec x = M.gram_inverse ? M.gram_inverse(mv) : Vec(mv.size(), 0.0);
  const long max_inner = 200000;
  for (long it = 0; it < max_inner; ++it) {
    Vec grad = M.adjoint(M.apply(x));
    for (std::size_t i = 0; i < grad.size(); ++i)
      grad[i] = c[i] + (grad[i] - mv[i]) / tau;
    Vec next(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      next[i] = x[i] - step * grad[i];
    next = g.prox(step, next);
    const double move = dist2(next, x);
    x = std::move(next);
    if (move * lip <= tol * std::max(1.0, norm2(x))) return x;
  }
  throw std::runtime_error("solve_x_subproblem: inner solver did not converge");
}

}  // namespace detail

PrimalDualState admm_plus_step(const CompositeProblem& problem,
                               const StepSizes& steps,
                               const PrimalDualState& state) {
  if (!steps.validated)
    throw std::invalid_argument("admm_plus_step: unvalidated step sizes");
  const double tau = steps.tau;
  const double rho = steps.rho;

  Vec mx = problem.M.apply(state.x);

  // z-update: prox of h at Mx + rho lambda
  Vec zin(mx.size());
  for (std::size_t i = 0; i < mx.size(); ++i)
    zin[i] = mx[i] + rho * state.lambda[i];
  Vec z1 = problem.h.prox(rho, zin);

  // dual ascent on the splitting constraint
  Vec lambda1(mx.size());
  for (std::size_t i = 0; i < mx.size(); ++i)
    lambda1[i] = state.lambda[i] + (mx[i] - z1[i]) / rho;

  // over-relaxed splitting target
  const double a = 1.0 - tau / rho;
  const double b = tau / rho;
  Vec u1(mx.size());
  for (std::size_t i = 0; i < mx.size(); ++i) u1[i] = a * mx[i] + b * z1[i];

  // linearized x-update
  Vec c = problem.f.is_zero ? Vec(state.x.size(), 0.0)
                            : problem.f.grad(state.x);
  Vec v(mx.size());
  for (std::size_t i = 0; i < mx.size(); ++i) v[i] = u1[i] - tau * lambda1[i];
  Vec x1 = detail::solve_x_subproblem(problem.g, problem.M, tau, c, v);

  PrimalDualState next;
  next.prev_x = state.x;
  next.prev_lambda = state.lambda;
  next.x = std::move(x1);
  next.lambda = std::move(lambda1);
  next.z = std::move(z1);
  next.u = std::move(u1);
  next.k = state.k + 1;
  next.steps = steps;
  return next;
}

PrimalDualState admm_step(const CompositeProblem& problem, double rho,
                          const PrimalDualState& state) {
  if (!problem.f.is_zero)
    throw std::invalid_argument("admm_step: requires f == 0");
  if (!(rho > 0)) throw std::invalid_argument("admm_step: rho must be > 0");

  Vec mx = problem.M.apply(state.x);
  Vec zin(mx.size());
  for (std::size_t i = 0; i < mx.size(); ++i)
    zin[i] = mx[i] + rho * state.lambda[i];
  Vec z1 = problem.h.prox(rho, zin);
  Vec lambda1(mx.size());
  for (std::size_t i = 0; i < mx.size(); ++i)
    lambda1[i] = state.lambda[i] + (mx[i] - z1[i]) / rho;
  Vec c(state.x.size(), 0.0);
  Vec v(mx.size());
  for (std::size_t i = 0; i < mx.size(); ++i) v[i] = z1[i] - rho * lambda1[i];
  Vec x1 = detail::solve_x_subproblem(problem.g, problem.M, rho, c, v);

  PrimalDualState next;
  next.prev_x = state.x;
  next.prev_lambda = state.lambda;
  next.x = std::move(x1);
  next.lambda = std::move(lambda1);
  next.z = std::move(z1);
  next.u = next.z;
  next.k = state.k + 1;
  next.steps = unchecked_step_sizes(rho, rho);
  return next;
}

Vec forward_backward_step(const SmoothTerm& f, const ProxableTerm& g,
                          double tau, const Vec& x) {
  check_forward_backward_step(f.lipschitz, tau);
  Vec grad = f.grad(x);
  Vec inner(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) inner[i] = x[i] - tau * grad[i];
  return g.prox(tau, inner);
}

std::pair<double, double> primal_dual_residual(const CompositeProblem& problem,
                                               const PrimalDualState& state) {
  Vec mx = problem.M.apply(state.x);
  const double primal = dist2(mx, state.z);
  double dual = 0.0;
  if (state.steps.tau > 0)
    dual = dist2(state.x, state.prev_x) / state.steps.tau +
           dist2(state.lambda, state.prev_lambda) * state.steps.rho;
  return {primal, dual};
}

SolveResult solve(const CompositeProblem& problem, const StepSizes& steps,
                  Vec x0, Vec lambda0, const StoppingRule& stopping) {
  if (!steps.validated)
    throw std::invalid_argument("solve: unvalidated step sizes");
  problem.validate();

  SolveResult result;
  PrimalDualState state =
      PrimalDualState::initial(problem, std::move(x0), std::move(lambda0));

  long grads = 0;
  for (long k = 0; k < stopping.max_iters; ++k) {
    state = admm_plus_step(problem, steps, state);
    if (!problem.f.is_zero) ++grads;
    if (!all_finite(state.x) || !all_finite(state.lambda))
      throw std::runtime_error("solve: diverged at iteration " +
                               std::to_string(state.k));
    const auto [primal, dual] = primal_dual_residual(problem, state);
    const double composite = problem.h.eval(problem.M.apply(state.x));
    const double objective =
        std::isfinite(composite)
            ? problem.f.eval(state.x) + problem.g.eval(state.x) + composite
            : primal;
    result.trace.add(state.k, grads, objective, primal);
    if (std::max(primal, dual) <= stopping.tol) {
      result.converged = true;
      break;
    }
  }
  result.iterations = state.k;
  result.state = std::move(state);
  return result;
}

VuCondatState vu_condat_step(const VuCondatProblem& problem,
                             const StepSizes& steps,
                             const VuCondatState& state) {
  if (!steps.validated)
    throw std::invalid_argument("vu_condat_step: unvalidated step sizes");
  const double tau = steps.tau;
  const double rho = steps.rho;

  Vec lin(state.lambda.size());
  for (std::size_t i = 0; i < lin.size(); ++i)
    lin[i] = state.lambda[i] + state.y[i] / rho;
  Vec lambda1 = moreau_prox_conjugate(problem.h, rho, lin);

  Vec grad = problem.fbar.grad(state.y);
  Vec yin(state.y.size());
  for (std::size_t i = 0; i < yin.size(); ++i)
    yin[i] = state.y[i] - tau * grad[i] -
             tau * (2.0 * lambda1[i] - state.lambda[i]);
  Vec y1 = problem.gbar.prox(tau, yin);

  return {std::move(lambda1), std::move(y1)};
}

Metric vu_condat_metric(const StepSizes& steps, std::size_t dim) {
  const double tau = steps.tau;
  const double rho = steps.rho;
  Metric m;
  m.inner = [tau, rho, dim](const BlockVector& a, const BlockVector& b) {
    if (a.dim() != 2 * dim || b.dim() != 2 * dim)
      throw std::invalid_argument("vu_condat_metric: dimension mismatch");
    const double* la = a.data().data();
    const double* ya = la + dim;
    const double* lb = b.data().data();
    const double* yb = lb + dim;
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i)
      s += rho * la[i] * lb[i] + la[i] * yb[i] + ya[i] * lb[i] +
           ya[i] * yb[i] / tau;
    return s;
  };
  return m;
}

FixedPointOperator vu_condat_operator(const VuCondatProblem& problem,
                                      const StepSizes& steps) {
  if (!steps.validated || std::isnan(steps.alpha))
    throw std::invalid_argument(
        "vu_condat_operator: steps must pass the theory validation");
  auto prob = std::make_shared<VuCondatProblem>(problem);
  const StepSizes s = steps;
  const std::size_t dim = problem.dim;

  FixedPointOperator op;
  op.layout = {dim, dim};
  op.alpha = steps.alpha;
  op.metric = vu_condat_metric(steps, dim);
  op.apply = [prob, s, dim](const BlockVector& in) {
    VuCondatState st;
    auto lb = in.block(0);
    auto yb = in.block(1);
    st.lambda.assign(lb.begin(), lb.end());
    st.y.assign(yb.begin(), yb.end());
    VuCondatState out = vu_condat_step(*prob, s, st);
    BlockVector r(in.layout());
    std::copy(out.lambda.begin(), out.lambda.end(), r.block(0).begin());
    std::copy(out.y.begin(), out.y.end(), r.block(1).begin());
    return r;
  };
  return op;
}

}  // namespace pdsplit
