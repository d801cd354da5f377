#include "pdsplit/logistic.hpp"

#include <cmath>
#include <stdexcept>

namespace pdsplit {

namespace {

double row_dot(const SparseRow& row, const Vec& x) {
  double s = 0.0;
  for (std::size_t k = 0; k < row.idx.size(); ++k) s += row.val[k] * x[row.idx[k]];
  return s;
}

// log(1 + exp(-z)) without overflow for large |z|
double softplus_neg(double z) {
  return std::log1p(std::exp(-std::fabs(z))) + std::max(-z, 0.0);
}

// 1 / (1 + exp(z)) = sigmoid(-z), stable on both sides
double sigmoid_neg(double z) {
  if (z >= 0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

}  // namespace

std::pair<double, Vec> logistic_value_grad(const LogisticLossTerm& term,
                                           const Vec& x) {
  if (x.size() != term.dim)
    throw std::invalid_argument("logistic_value_grad: dimension mismatch");
  double value = 0.0;
  Vec grad(term.dim, 0.0);
  for (std::size_t t = 0; t < term.rows.size(); ++t) {
    const SparseRow& row = term.rows[t];
    const double y = static_cast<double>(term.labels[t]);
    const double z = y * row_dot(row, x);
    value += softplus_neg(z);
    const double w = -y * sigmoid_neg(z);  // d/dz log(1+e^{-z}) * y * a
    for (std::size_t k = 0; k < row.idx.size(); ++k)
      grad[row.idx[k]] += w * row.val[k];
  }
  value *= term.scale;
  scale(term.scale, grad);
  return {value, std::move(grad)};
}

double lipschitz_estimate(const LogisticLossTerm& term) {
  if (term.rows.empty())
    throw std::invalid_argument("lipschitz_estimate: empty dataset");
  double max_sq = 0.0;
  for (const auto& row : term.rows) {
    double s = 0.0;
    for (double v : row.val) s += v * v;
    max_sq = std::max(max_sq, s);
  }
  return 0.25 * max_sq;
}

double LogisticLossTerm::value(const Vec& x) const {
  return logistic_value_grad(*this, x).first;
}

std::pair<double, Vec> LogisticLossTerm::value_grad(const Vec& x) const {
  return logistic_value_grad(*this, x);
}

LogisticLossTerm LogisticLossTerm::subset(
    const std::vector<std::size_t>& which) const {
  LogisticLossTerm out;
  out.dim = dim;
  out.scale = scale;
  out.rows.reserve(which.size());
  out.labels.reserve(which.size());
  for (std::size_t t : which) {
    if (t >= rows.size())
      throw std::invalid_argument("LogisticLossTerm::subset: index out of range");
    out.rows.push_back(rows[t]);
    out.labels.push_back(labels[t]);
  }
  return out;
}

SmoothTerm LogisticLossTerm::as_smooth(std::shared_ptr<long> grad_counter) const {
  SmoothTerm t;
  auto self = std::make_shared<LogisticLossTerm>(*this);
  t.eval = [self](const Vec& x) { return self->value(x); };
  t.grad = [self, grad_counter](const Vec& x) {
    if (grad_counter) ++(*grad_counter);
    return logistic_value_grad(*self, x).second;
  };
  t.lipschitz = self->rows.empty() ? 0.0 : lipschitz_estimate(*self);
  return t;
}

}  // namespace pdsplit
