#pragma once

#include <functional>
#include <utility>

#include "pdsplit/vec.hpp"

namespace pdsplit {

/// Convex differentiable term: value, gradient, and a Lipschitz constant
/// of the gradient. Terms are immutable after construction; eval and grad
/// are pure and safe to call concurrently.
struct SmoothTerm {
  std::function<double(const Vec&)> eval;
  std::function<Vec(const Vec&)> grad;
  double lipschitz = 0.0;
  bool is_zero = false;
};

/// Convex term accessed through its proximity operator
///   prox(gamma, x) = argmin_w eval(w) + |w - x|^2 / (2 gamma).
/// eval may return +infinity (indicator functions).
///
/// prox_diag, when present, solves the diagonally scaled problem
///   argmin_w eval(w) + sum_i (w_i - x_i)^2 / (2 gamma_i)
/// and is what makes the x-update of the splitting solvers exact when the
/// Gram matrix of the linear operator is diagonal.
struct ProxableTerm {
  std::function<double(const Vec&)> eval;
  std::function<Vec(double, const Vec&)> prox;
  std::function<Vec(const Vec&, const Vec&)> prox_diag;  // optional
  bool is_zero = false;
};

// --- free-standing proximity operators ---

/// Componentwise soft threshold sign(x_i) * max(|x_i| - gamma, 0).
Vec prox_l1(double gamma, const Vec& x);

/// Prox of (mu/2)|.|^2: x / (1 + gamma * mu).
Vec prox_quadratic(double mu, double gamma, const Vec& x);

/// Prox of the indicator of the pair-consensus set {(u, u)}: both halves
/// move to the midpoint. A projection, so the result ignores gamma.
std::pair<Vec, Vec> prox_pair_consensus(double gamma, const Vec& ya,
                                        const Vec& yb);

/// Prox of the conjugate at step rho^{-1}, through Moreau's identity:
///   x - rho^{-1} * prox(rho, rho * x).
Vec moreau_prox_conjugate(const ProxableTerm& term, double rho, const Vec& x);

// --- term catalog ---

SmoothTerm zero_smooth_term();

/// (weight/2) |x - center|^2; gradient weight*(x - center), lipschitz weight.
SmoothTerm quadratic_smooth_term(double weight, Vec center);

/// Sum of smooth terms on the same space; lipschitz adds.
SmoothTerm sum_smooth_terms(std::vector<SmoothTerm> parts);

ProxableTerm zero_prox_term();

/// weight * |x|_1
ProxableTerm l1_term(double weight = 1.0);

/// (mu/2) |x|^2
ProxableTerm quadratic_prox_term(double mu);

/// Indicator of the single point {c}.
ProxableTerm point_indicator_term(Vec c);

/// Indicator of {(u, u)} on a space of even dimension split into halves.
ProxableTerm pair_consensus_term();

/// Proxable view of a smooth term whose prox has no closed form: the
/// strongly convex subproblem is solved by an inner gradient loop to
/// `tol`. Used for implicit-step methods (plain ADMM on a smooth loss).
ProxableTerm prox_via_inner_gradient(SmoothTerm term, double tol = 1e-12,
                                     long max_inner = 200000);

}  // namespace pdsplit
