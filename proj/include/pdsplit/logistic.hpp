#pragma once

#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

#include "pdsplit/terms.hpp"
#include "pdsplit/vec.hpp"

namespace pdsplit {

struct SparseRow {
  std::vector<std::size_t> idx;  // strictly increasing, 0-based
  std::vector<double> val;
};

/// Average logistic loss (1/m) sum_t log(1 + exp(-y_t <a_t, x>)).
/// `scale` stays 1/m even for subsets of the rows, so that the sum of the
/// per-agent losses over a partition equals the centralized loss.
struct LogisticLossTerm {
  std::vector<SparseRow> rows;
  std::vector<int> labels;  // entries in {-1, +1}
  std::size_t dim = 0;      // p
  double scale = 0.0;       // 1/m of the full dataset

  std::size_t size() const { return rows.size(); }

  double value(const Vec& x) const;
  std::pair<double, Vec> value_grad(const Vec& x) const;

  /// Rows with the given indices; scale (1/m) is kept.
  LogisticLossTerm subset(const std::vector<std::size_t>& which) const;

  /// SmoothTerm view; lipschitz is set from lipschitz_estimate. When a
  /// counter is given, every gradient evaluation increments it.
  SmoothTerm as_smooth(std::shared_ptr<long> grad_counter = nullptr) const;
};

/// Overflow-safe value and gradient at x.
std::pair<double, Vec> logistic_value_grad(const LogisticLossTerm& term,
                                           const Vec& x);

/// Upper bound on the gradient Lipschitz constant: 0.25 * max_t |a_t|^2.
double lipschitz_estimate(const LogisticLossTerm& term);

}  // namespace pdsplit
