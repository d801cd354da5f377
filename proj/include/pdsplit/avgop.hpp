#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pdsplit/block_vector.hpp"
#include "pdsplit/rng.hpp"
#include "pdsplit/trace.hpp"

namespace pdsplit {

/// Inner product overriding the Euclidean one. `inner` is the full
/// quadratic form; `block_inner`, when present, gives the per-block
/// restriction of a block-separable form (the full form is then the sum
/// over blocks). The weighted-norm machinery of the randomized engine
/// needs the separable version.
struct Metric {
  std::function<double(const BlockVector&, const BlockVector&)> inner;
  std::function<double(std::size_t, std::span<const double>,
                       std::span<const double>)>
      block_inner;

  double apply(const BlockVector& a, const BlockVector& b) const;
};

/// alpha-averaged operator T on a product of blocks, T x = (T_1 x, ..., T_J x).
/// apply_block(j, x) returns the j-th output block alone; when absent it is
/// derived from apply. Assembling every apply_block output must reproduce
/// apply exactly.
struct FixedPointOperator {
  std::vector<std::size_t> layout;
  double alpha = 1.0;
  std::function<BlockVector(const BlockVector&)> apply;
  std::function<Vec(std::size_t, const BlockVector&)> apply_block;  // optional
  Metric metric;

  std::size_t blocks() const { return layout.size(); }
  Vec block_image(std::size_t j, const BlockVector& x) const;
};

/// Random subsets of {0..J-1} with an explicit finite support, so that
/// conditional expectations over the selection can be computed by
/// enumeration. Construction rejects supports that leave some block with
/// zero selection probability.
class CoordinateSelector {
 public:
  using Subset = std::vector<std::size_t>;

  CoordinateSelector(std::size_t num_blocks,
                     std::vector<std::pair<Subset, double>> support);

  static CoordinateSelector uniform_single(std::size_t num_blocks);
  static CoordinateSelector always_all(std::size_t num_blocks);

  std::size_t num_blocks() const { return num_blocks_; }
  const std::vector<std::pair<Subset, double>>& support() const {
    return support_;
  }

  const Subset& sample(Rng& rng) const;

  /// q_j = 1 / P(j selected); defined because construction enforces
  /// positive selection probability for every block.
  const Vec& block_weights() const { return q_; }

 private:
  std::size_t num_blocks_;
  std::vector<std::pair<Subset, double>> support_;
  Vec q_;
};

/// Relaxation sequence eta_k with declared bounds; valid for an operator
/// of averagedness alpha iff 0 < lo <= eta_k <= hi < 1/alpha.
struct RelaxationSchedule {
  std::function<double(long)> eta;
  double lo = 1.0;
  double hi = 1.0;

  static RelaxationSchedule constant(double value);
  /// eta = 1 when alpha allows it, otherwise 0.9/alpha.
  static RelaxationSchedule default_for(double alpha);

  void validate_for(double alpha) const;
};

struct StoppingRule {
  double tol = 1e-9;
  long max_iters = 1000000;
  long check_every = 1;  // residual evaluation period (full T application)
};

struct KmResult {
  BlockVector x;
  Trace trace;
  long iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Relaxed fixed-point iteration x <- x + eta_k (T x - x), stopping on
/// |x - T x| <= tol in the operator's metric.
KmResult km_iterate(const FixedPointOperator& op, const BlockVector& x0,
                    const RelaxationSchedule& schedule,
                    const StoppingRule& stop);

/// Randomized block-coordinate variant: at each step a subset of blocks is
/// drawn and only those blocks move. Deterministic given the seed.
KmResult randomized_km_iterate(const FixedPointOperator& op,
                               const BlockVector& x0,
                               const RelaxationSchedule& schedule,
                               const CoordinateSelector& selector,
                               std::uint64_t seed, const StoppingRule& stop);

/// Norm weighted by the inverse selection probabilities,
/// |||x|||^2 = sum_j q_j |x_j|^2 (returns the norm, not its square).
double weighted_norm(const CoordinateSelector& selector, const BlockVector& x);

struct DescentCheck {
  double lhs = 0.0;  // E[ |||x+ - x*|||^2 | x ], enumerated exactly
  double rhs = 0.0;  // |||x - x*|||^2 - eta (1 - alpha eta) |x - T x|^2
  /// lhs minus the one-step expansion
  /// |||x - x*|||^2 + (|U x - x*|^2 - |x - x*|^2); zero up to rounding.
  double identity_gap = 0.0;
};

/// Exact conditional-expectation audit of one randomized step at x, against
/// a fixed point xstar. Uses the operator's block-separable metric when one
/// is declared, the Euclidean one otherwise.
DescentCheck expected_descent_check(const FixedPointOperator& op,
                                    const CoordinateSelector& selector,
                                    double eta, const BlockVector& x,
                                    const BlockVector& xstar);

}  // namespace pdsplit
