#include "pdsplit/avgop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pdsplit {

namespace {

constexpr double kDivergenceBound = 1e12;

double euclidean_inner(const BlockVector& a, const BlockVector& b) {
  return dot(a.data(), b.data());
}

double metric_sqnorm(const Metric& metric, const BlockVector& v) {
  return metric.apply(v, v);
}

BlockVector diff(const BlockVector& a, const BlockVector& b) {
  BlockVector d(a.layout(), sub(a.data(), b.data()));
  return d;
}

void check_finite_iterate(const BlockVector& x, long k) {
  for (double v : x.data()) {
    if (!std::isfinite(v) || std::fabs(v) > kDivergenceBound)
      throw std::runtime_error("fixed-point iteration diverged at iteration " +
                               std::to_string(k));
  }
}

}  // namespace

double Metric::apply(const BlockVector& a, const BlockVector& b) const {
  if (inner) return inner(a, b);
  if (block_inner) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.blocks(); ++j)
      s += block_inner(j, a.block(j), b.block(j));
    return s;
  }
  return euclidean_inner(a, b);
}

Vec FixedPointOperator::block_image(std::size_t j, const BlockVector& x) const {
  if (apply_block) return apply_block(j, x);
  BlockVector full = apply(x);
  auto span = full.block(j);
  return Vec(span.begin(), span.end());
}

CoordinateSelector::CoordinateSelector(
    std::size_t num_blocks, std::vector<std::pair<Subset, double>> support)
    : num_blocks_(num_blocks), support_(std::move(support)) {
  if (num_blocks_ == 0)
    throw std::invalid_argument("CoordinateSelector: no blocks");
  if (support_.empty())
    throw std::invalid_argument("CoordinateSelector: empty support");
  double total = 0.0;
  Vec hit_prob(num_blocks_, 0.0);
  for (auto& [subset, p] : support_) {
    if (p < 0)
      throw std::invalid_argument("CoordinateSelector: negative probability");
    total += p;
    for (std::size_t j : subset) {
      if (j >= num_blocks_)
        throw std::invalid_argument("CoordinateSelector: block out of range");
      hit_prob[j] += p;
    }
  }
  if (std::fabs(total - 1.0) > 1e-12)
    throw std::invalid_argument(
        "CoordinateSelector: probabilities sum to " + std::to_string(total));
  q_.resize(num_blocks_);
  for (std::size_t j = 0; j < num_blocks_; ++j) {
    if (hit_prob[j] <= 0.0)
      throw std::invalid_argument(
          "CoordinateSelector: block " + std::to_string(j) +
          " has zero selection probability");
    q_[j] = 1.0 / hit_prob[j];
  }
}

CoordinateSelector CoordinateSelector::uniform_single(std::size_t num_blocks) {
  std::vector<std::pair<Subset, double>> support;
  support.reserve(num_blocks);
  const double p = 1.0 / static_cast<double>(num_blocks);
  for (std::size_t j = 0; j < num_blocks; ++j) support.push_back({{j}, p});
  return CoordinateSelector(num_blocks, std::move(support));
}

CoordinateSelector CoordinateSelector::always_all(std::size_t num_blocks) {
  Subset all(num_blocks);
  for (std::size_t j = 0; j < num_blocks; ++j) all[j] = j;
  return CoordinateSelector(num_blocks, {{all, 1.0}});
}

const CoordinateSelector::Subset& CoordinateSelector::sample(Rng& rng) const {
  double u = rng.uniform01();
  for (const auto& [subset, p] : support_) {
    if (u < p) return subset;
    u -= p;
  }
  return support_.back().first;
}

RelaxationSchedule RelaxationSchedule::constant(double value) {
  RelaxationSchedule s;
  s.eta = [value](long) { return value; };
  s.lo = s.hi = value;
  return s;
}

RelaxationSchedule RelaxationSchedule::default_for(double alpha) {
  if (!(alpha > 0) || alpha > 1)
    throw std::invalid_argument("RelaxationSchedule: alpha outside (0,1]");
  const double margin = 1e-6;
  const double value = (alpha <= 0.5 + margin) ? 1.0 : 0.9 / alpha;
  return constant(value);
}

void RelaxationSchedule::validate_for(double alpha) const {
  if (!eta) throw std::invalid_argument("RelaxationSchedule: missing eta");
  if (!(lo > 0) || lo > hi || !(hi < 1.0 / alpha))
    throw std::invalid_argument(
        "RelaxationSchedule: bounds must satisfy 0 < lo <= hi < 1/alpha");
}

namespace {

KmResult run_km(const FixedPointOperator& op, const BlockVector& x0,
                const RelaxationSchedule& schedule,
                const CoordinateSelector* selector, std::uint64_t seed,
                const StoppingRule& stop) {
  schedule.validate_for(op.alpha);
  if (x0.layout() != op.layout)
    throw std::invalid_argument("km_iterate: layout mismatch");
  if (selector && selector->num_blocks() != op.blocks())
    throw std::invalid_argument("km_iterate: selector block count mismatch");

  Rng rng(seed);
  BlockVector x = x0;
  KmResult result;
  double residual = std::numeric_limits<double>::infinity();

  long k = 0;
  for (; k < stop.max_iters; ++k) {
    const bool audit = (k % std::max<long>(1, stop.check_every)) == 0;
    const double eta = schedule.eta(k);

    if (!selector) {
      BlockVector tx = op.apply(x);
      BlockVector step = diff(tx, x);
      residual = std::sqrt(std::max(0.0, metric_sqnorm(op.metric, step)));
      result.trace.add(k, k, residual, 0.0);
      if (residual <= stop.tol) {
        result.converged = true;
        break;
      }
      if (eta == 1.0)  // unrelaxed step is exactly the operator image
        x = std::move(tx);
      else
        axpy(eta, step.data(), x.data());
    } else {
      if (audit) {
        BlockVector tx = op.apply(x);
        BlockVector step = diff(tx, x);
        residual = std::sqrt(std::max(0.0, metric_sqnorm(op.metric, step)));
        result.trace.add(k, k, residual, 0.0);
        if (residual <= stop.tol) {
          result.converged = true;
          break;
        }
      }
      const auto& subset = selector->sample(rng);
      std::vector<Vec> updates;
      updates.reserve(subset.size());
      for (std::size_t j : subset) updates.push_back(op.block_image(j, x));
      for (std::size_t s = 0; s < subset.size(); ++s) {
        auto blk = x.block(subset[s]);
        if (eta == 1.0) {
          std::copy(updates[s].begin(), updates[s].end(), blk.begin());
        } else {
          for (std::size_t i = 0; i < blk.size(); ++i)
            blk[i] += eta * (updates[s][i] - blk[i]);
        }
      }
    }
    check_finite_iterate(x, k);
  }

  result.x = std::move(x);
  result.iterations = k;
  result.residual = residual;
  return result;
}

}  // namespace

KmResult km_iterate(const FixedPointOperator& op, const BlockVector& x0,
                    const RelaxationSchedule& schedule,
                    const StoppingRule& stop) {
  return run_km(op, x0, schedule, nullptr, 0, stop);
}

KmResult randomized_km_iterate(const FixedPointOperator& op,
                               const BlockVector& x0,
                               const RelaxationSchedule& schedule,
                               const CoordinateSelector& selector,
                               std::uint64_t seed, const StoppingRule& stop) {
  return run_km(op, x0, schedule, &selector, seed, stop);
}

double weighted_norm(const CoordinateSelector& selector, const BlockVector& x) {
  if (selector.num_blocks() != x.blocks())
    throw std::invalid_argument("weighted_norm: block count mismatch");
  const Vec& q = selector.block_weights();
  double s = 0.0;
  for (std::size_t j = 0; j < x.blocks(); ++j) s += q[j] * sqnorm(x.block(j));
  return std::sqrt(s);
}

namespace {

double weighted_metric_sqnorm(const CoordinateSelector& selector,
                              const Metric& metric, const BlockVector& v) {
  const Vec& q = selector.block_weights();
  double s = 0.0;
  for (std::size_t j = 0; j < v.blocks(); ++j) {
    const double blk = metric.block_inner
                           ? metric.block_inner(j, v.block(j), v.block(j))
                           : sqnorm(v.block(j));
    s += q[j] * blk;
  }
  return s;
}

}  // namespace

DescentCheck expected_descent_check(const FixedPointOperator& op,
                                    const CoordinateSelector& selector,
                                    double eta, const BlockVector& x,
                                    const BlockVector& xstar) {
  if (selector.num_blocks() != op.blocks())
    throw std::invalid_argument("expected_descent_check: selector mismatch");
  if (op.metric.inner && !op.metric.block_inner)
    throw std::invalid_argument(
        "expected_descent_check: metric is not block-separable");

  BlockVector t_star = op.apply(xstar);
  BlockVector fix_gap = diff(t_star, xstar);
  if (std::sqrt(metric_sqnorm(op.metric, fix_gap)) > 1e-9)
    throw std::invalid_argument("expected_descent_check: xstar is not a fixed point");

  BlockVector tx = op.apply(x);

  // relaxed full step U x = x + eta (T x - x)
  BlockVector ux(x.layout(), x.data());
  for (std::size_t i = 0; i < x.dim(); ++i)
    ux.data()[i] += eta * (tx.data()[i] - x.data()[i]);

  const BlockVector dev = diff(x, xstar);
  const BlockVector udev = diff(ux, xstar);
  const double weighted_dev = weighted_metric_sqnorm(selector, op.metric, dev);

  // enumerate the selection support: blocks in the subset take the relaxed
  // update, the rest stay
  double lhs = 0.0;
  for (const auto& [subset, p] : selector.support()) {
    if (p == 0.0) continue;
    BlockVector cand = x;
    for (std::size_t j : subset) {
      auto dst = cand.block(j);
      auto src = ux.block(j);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i];
    }
    const BlockVector cdev = diff(cand, xstar);
    lhs += p * weighted_metric_sqnorm(selector, op.metric, cdev);
  }

  DescentCheck out;
  out.lhs = lhs;
  const double full_term = metric_sqnorm(op.metric, udev) -
                           metric_sqnorm(op.metric, dev);
  out.identity_gap = lhs - (weighted_dev + full_term);
  const BlockVector res = diff(x, tx);
  out.rhs = weighted_dev -
            eta * (1.0 - op.alpha * eta) * metric_sqnorm(op.metric, res);
  return out;
}

}  // namespace pdsplit
