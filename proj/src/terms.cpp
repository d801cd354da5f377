#include "pdsplit/terms.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace pdsplit {

Vec prox_l1(double gamma, const Vec& x) {
  if (!(gamma > 0)) throw std::invalid_argument("prox_l1: gamma must be > 0");
  require_finite(x, "prox_l1");
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::fabs(x[i]) - gamma;
    r[i] = a > 0 ? (x[i] > 0 ? a : -a) : 0.0;
  }
  return r;
}

Vec prox_quadratic(double mu, double gamma, const Vec& x) {
  if (mu < 0) throw std::invalid_argument("prox_quadratic: mu must be >= 0");
  if (!(gamma > 0))
    throw std::invalid_argument("prox_quadratic: gamma must be > 0");
  require_finite(x, "prox_quadratic");
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] / (1.0 + gamma * mu);
  return r;
}

std::pair<Vec, Vec> prox_pair_consensus(double gamma, const Vec& ya,
                                        const Vec& yb) {
  if (!(gamma > 0))
    throw std::invalid_argument("prox_pair_consensus: gamma must be > 0");
  if (ya.size() != yb.size())
    throw std::invalid_argument("prox_pair_consensus: dimension mismatch");
  Vec mid(ya.size());
  for (std::size_t i = 0; i < ya.size(); ++i) mid[i] = 0.5 * (ya[i] + yb[i]);
  return {mid, mid};
}

Vec moreau_prox_conjugate(const ProxableTerm& term, double rho, const Vec& x) {
  if (!(rho > 0))
    throw std::invalid_argument("moreau_prox_conjugate: rho must be > 0");
  // conjugate of the zero function is the indicator of the origin
  if (term.is_zero) return Vec(x.size(), 0.0);
  const double inv_rho = 1.0 / rho;
  Vec p = term.prox(rho, scaled(rho, x));
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - inv_rho * p[i];
  return r;
}

SmoothTerm zero_smooth_term() {
  SmoothTerm t;
  t.eval = [](const Vec&) { return 0.0; };
  t.grad = [](const Vec& x) { return Vec(x.size(), 0.0); };
  t.lipschitz = 0.0;
  t.is_zero = true;
  return t;
}

SmoothTerm quadratic_smooth_term(double weight, Vec center) {
  if (weight < 0)
    throw std::invalid_argument("quadratic_smooth_term: weight must be >= 0");
  SmoothTerm t;
  Vec c = std::move(center);
  t.eval = [weight, c](const Vec& x) {
    if (x.size() != c.size())
      throw std::invalid_argument("quadratic_smooth_term: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - c[i];
      s += d * d;
    }
    return 0.5 * weight * s;
  };
  t.grad = [weight, c](const Vec& x) {
    Vec g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = weight * (x[i] - c[i]);
    return g;
  };
  t.lipschitz = weight;
  return t;
}

SmoothTerm sum_smooth_terms(std::vector<SmoothTerm> parts) {
  SmoothTerm t;
  auto shared = std::make_shared<std::vector<SmoothTerm>>(std::move(parts));
  t.eval = [shared](const Vec& x) {
    double s = 0.0;
    for (const auto& p : *shared) s += p.eval(x);
    return s;
  };
  t.grad = [shared](const Vec& x) {
    Vec g(x.size(), 0.0);
    for (const auto& p : *shared) {
      Vec gi = p.grad(x);
      axpy(1.0, gi, g);
    }
    return g;
  };
  t.lipschitz = 0.0;
  bool zero = true;
  for (const auto& p : *shared) {
    t.lipschitz += p.lipschitz;
    zero = zero && p.is_zero;
  }
  t.is_zero = zero;
  return t;
}

ProxableTerm zero_prox_term() {
  ProxableTerm t;
  t.eval = [](const Vec&) { return 0.0; };
  t.prox = [](double, const Vec& x) { return x; };
  t.prox_diag = [](const Vec&, const Vec& x) { return x; };
  t.is_zero = true;
  return t;
}

ProxableTerm l1_term(double weight) {
  if (weight < 0) throw std::invalid_argument("l1_term: weight must be >= 0");
  ProxableTerm t;
  t.eval = [weight](const Vec& x) {
    double s = 0.0;
    for (double v : x) s += std::fabs(v);
    return weight * s;
  };
  t.prox = [weight](double gamma, const Vec& x) {
    return prox_l1(gamma * weight, x);
  };
  t.prox_diag = [weight](const Vec& gamma, const Vec& x) {
    if (gamma.size() != x.size())
      throw std::invalid_argument("l1_term: gamma size mismatch");
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double a = std::fabs(x[i]) - gamma[i] * weight;
      r[i] = a > 0 ? (x[i] > 0 ? a : -a) : 0.0;
    }
    return r;
  };
  return t;
}

ProxableTerm quadratic_prox_term(double mu) {
  if (mu < 0)
    throw std::invalid_argument("quadratic_prox_term: mu must be >= 0");
  ProxableTerm t;
  t.eval = [mu](const Vec& x) { return 0.5 * mu * sqnorm(x); };
  t.prox = [mu](double gamma, const Vec& x) {
    return prox_quadratic(mu, gamma, x);
  };
  t.prox_diag = [mu](const Vec& gamma, const Vec& x) {
    if (gamma.size() != x.size())
      throw std::invalid_argument("quadratic_prox_term: gamma size mismatch");
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      r[i] = x[i] / (1.0 + gamma[i] * mu);
    return r;
  };
  return t;
}

ProxableTerm point_indicator_term(Vec c) {
  ProxableTerm t;
  auto point = std::make_shared<Vec>(std::move(c));
  t.eval = [point](const Vec& x) {
    if (x.size() != point->size())
      throw std::invalid_argument("point_indicator_term: dimension mismatch");
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] != (*point)[i]) return std::numeric_limits<double>::infinity();
    return 0.0;
  };
  t.prox = [point](double, const Vec&) { return *point; };
  t.prox_diag = [point](const Vec&, const Vec&) { return *point; };
  return t;
}

ProxableTerm pair_consensus_term() {
  ProxableTerm t;
  t.eval = [](const Vec& y) {
    if (y.size() % 2 != 0)
      throw std::invalid_argument("pair_consensus_term: odd dimension");
    const std::size_t h = y.size() / 2;
    for (std::size_t i = 0; i < h; ++i)
      if (y[i] != y[h + i]) return std::numeric_limits<double>::infinity();
    return 0.0;
  };
  t.prox = [](double, const Vec& y) {
    if (y.size() % 2 != 0)
      throw std::invalid_argument("pair_consensus_term: odd dimension");
    const std::size_t h = y.size() / 2;
    Vec r(y.size());
    for (std::size_t i = 0; i < h; ++i) {
      const double mid = 0.5 * (y[i] + y[h + i]);
      r[i] = mid;
      r[h + i] = mid;
    }
    return r;
  };
  // prox_diag intentionally absent: the projection in a nonuniform diagonal
  // metric is a weighted midpoint, which nothing in the library needs.
  return t;
}

ProxableTerm prox_via_inner_gradient(SmoothTerm term, double tol,
                                     long max_inner) {
  ProxableTerm t;
  auto f = std::make_shared<SmoothTerm>(std::move(term));
  t.eval = [f](const Vec& x) { return f->eval(x); };
  t.prox = [f, tol, max_inner](double gamma, const Vec& v) {
    if (!(gamma > 0))
      throw std::invalid_argument("prox_via_inner_gradient: gamma must be > 0");
    // minimize f(w) + |w - v|^2/(2 gamma): smooth, (1/gamma)-strongly convex
    const double lip = f->lipschitz + 1.0 / gamma;
    const double step = 1.0 / lip;
    Vec w = v;
    for (long it = 0; it < max_inner; ++it) {
      Vec g = f->grad(w);
      for (std::size_t i = 0; i < w.size(); ++i)
        g[i] += (w[i] - v[i]) / gamma;
      const double gn = norm2(g);
      if (gn <= tol * std::max(1.0, norm2(w))) break;
      axpy(-step, g, w);
    }
    return w;
  };
  return t;
}

}  // namespace pdsplit
