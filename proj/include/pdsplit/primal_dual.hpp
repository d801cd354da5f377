#pragma once

#include <limits>
#include <utility>

#include "pdsplit/avgop.hpp"
#include "pdsplit/linear_operator.hpp"
#include "pdsplit/terms.hpp"
#include "pdsplit/trace.hpp"

namespace pdsplit {

/// min_x f(x) + g(x) + h(Mx). When f is nonzero, M must be injective and
/// lifted_lipschitz must bound the gradient Lipschitz constant of f
/// composed with the inverse of M on its range.
struct CompositeProblem {
  SmoothTerm f;
  ProxableTerm g;
  ProxableTerm h;
  LinearOperator M;
  double lifted_lipschitz = 0.0;

  void validate() const;
  /// f + g + h(M .); +inf when the composite term is an indicator off its set.
  double objective(const Vec& x) const;
};

struct StepSizes {
  double tau = 0.0;
  double rho = 0.0;
  /// Averagedness of the induced primal-dual operator; set by validation.
  double alpha = std::numeric_limits<double>::quiet_NaN();
  bool validated = false;
};

/// Accepts iff 1/tau - 1/rho > L/2, or f == 0 and 1/tau - 1/rho >= 0.
/// Returns the steps with the implied averagedness constant filled in;
/// rejects with the violated margin otherwise.
StepSizes check_step_sizes(const CompositeProblem& problem, StepSizes steps);
StepSizes check_step_sizes(double lipschitz, bool f_is_zero, StepSizes steps);

/// Steps accepted without the theoretical test (grid-search probes).
/// Divergence guards are the only protection on such runs.
StepSizes unchecked_step_sizes(double tau, double rho);

/// tau must satisfy 0 < tau < 2/L.
void check_forward_backward_step(double lipschitz, double tau);

struct PrimalDualState {
  Vec x;
  Vec lambda;
  Vec z;
  Vec u;
  long k = 0;
  // previous primal/dual iterates, kept for the residual surrogate
  Vec prev_x;
  Vec prev_lambda;
  StepSizes steps;

  static PrimalDualState initial(const CompositeProblem& problem, Vec x0,
                                 Vec lambda0);
  static PrimalDualState zeros(const CompositeProblem& problem);
};

/// One ADMM+ iteration (z, lambda, u, x updates in that order).
PrimalDualState admm_plus_step(const CompositeProblem& problem,
                               const StepSizes& steps,
                               const PrimalDualState& state);

/// One iteration of the plain ADMM three-step recursion; requires f == 0
/// and is the tau == rho specialization of ADMM+.
PrimalDualState admm_step(const CompositeProblem& problem, double rho,
                          const PrimalDualState& state);

/// One proximal-gradient step prox_{tau g}(x - tau grad f(x)).
Vec forward_backward_step(const SmoothTerm& f, const ProxableTerm& g,
                          double tau, const Vec& x);

/// (|Mx - z|, |x - x_prev|/tau + |lambda - lambda_prev| * rho).
std::pair<double, double> primal_dual_residual(const CompositeProblem& problem,
                                               const PrimalDualState& state);

struct SolveResult {
  PrimalDualState state;
  Trace trace;
  bool converged = false;
  long iterations = 0;
};

/// Iterates admm_plus_step until max(primal, dual) residual <= tol or the
/// iteration budget runs out. Trace objective is f+g+h(Mx) when the
/// composite value is finite, the primal residual otherwise.
SolveResult solve(const CompositeProblem& problem, const StepSizes& steps,
                  Vec x0, Vec lambda0, const StoppingRule& stopping);

// --- Vu-Condat form: everything lives on one space ---

/// min_y fbar(y) + gbar(y) + h(y) with fbar smooth.
struct VuCondatProblem {
  std::size_t dim = 0;
  SmoothTerm fbar;
  ProxableTerm gbar;
  ProxableTerm h;
};

struct VuCondatState {
  Vec lambda;
  Vec y;
};

/// One primal-dual iteration: dual prox of h* through Moreau's identity,
/// then the primal prox of gbar along the reflected dual.
VuCondatState vu_condat_step(const VuCondatProblem& problem,
                             const StepSizes& steps,
                             const VuCondatState& state);

/// The iteration as a fixed-point operator on the stacked (lambda, y)
/// vector, carrying the quadratic-form metric in which it is
/// alpha-averaged. Requires theory-validated steps.
FixedPointOperator vu_condat_operator(const VuCondatProblem& problem,
                                      const StepSizes& steps);

/// The metric alone: <(l1,y1),(l2,y2)> = rho <l1,l2> + <l1,y2> + <y1,l2>
///                                      + (1/tau) <y1,y2>.
Metric vu_condat_metric(const StepSizes& steps, std::size_t dim);

namespace detail {

/// argmin_x g(x) + <c, x> + |Mx - v|^2 / (2 tau). Exact through the Gram
/// inverse when g == 0, through a (possibly diagonally scaled) prox when
/// M*M is diagonal, otherwise by an inner proximal-gradient loop driven to
/// `tol`.
Vec solve_x_subproblem(const ProxableTerm& g, const LinearOperator& M,
                       double tau, const Vec& c, const Vec& v,
                       double tol = 1e-10);

}  // namespace detail

}  // namespace pdsplit
