#include "pdsplit/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "pdsplit/numtext.hpp"
#include "pdsplit/rng.hpp"

namespace pdsplit {

bool SparseDataset::dense() const {
  for (const auto& row : rows) {
    if (row.idx.size() != p) return false;
    for (std::size_t i = 0; i < row.idx.size(); ++i)
      if (row.idx[i] != i) return false;
  }
  return true;
}

namespace {

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& why) {
  throw std::runtime_error("libsvm parse error at line " +
                           std::to_string(line_no) + ": " + why);
}

int map_label(double raw, std::size_t line_no) {
  if (raw == 1.0) return 1;
  if (raw == -1.0 || raw == 0.0) return -1;
  parse_fail(line_no, "label must be 0, 1, -1 or +1");
}

}  // namespace

SparseDataset parse_libsvm(std::istream& in) {
  SparseDataset ds;
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) continue;

    const auto raw_label_opt = numtext::parse_double(token);
    if (!raw_label_opt) parse_fail(line_no, "bad label token '" + token + "'");
    const double raw_label = *raw_label_opt;

    SparseRow row;
    long long prev_index = 0;
    while (ls >> token) {
      const std::size_t colon = token.find(':');
      if (colon == std::string::npos)
        parse_fail(line_no, "bad feature token '" + token + "'");
      const auto index_opt =
          numtext::parse_longlong(std::string_view(token).substr(0, colon));
      const auto value_opt =
          numtext::parse_double(std::string_view(token).substr(colon + 1));
      if (!index_opt || !value_opt)
        parse_fail(line_no, "bad feature token '" + token + "'");
      const long long index = *index_opt;
      const double value = *value_opt;
      if (index < 1) parse_fail(line_no, "feature index must be >= 1");
      if (index <= prev_index)
        parse_fail(line_no, "feature indices must be strictly increasing");
      if (!std::isfinite(value)) parse_fail(line_no, "non-finite value");
      prev_index = index;
      row.idx.push_back(static_cast<std::size_t>(index - 1));
      row.val.push_back(value);
      max_index = std::max(max_index, static_cast<std::size_t>(index));
    }
    ds.labels.push_back(map_label(raw_label, line_no));
    ds.rows.push_back(std::move(row));
  }
  if (ds.rows.empty()) throw std::runtime_error("libsvm parse error: empty file");
  ds.m = ds.rows.size();
  ds.p = max_index;
  return ds;
}

SparseDataset parse_libsvm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path);
  return parse_libsvm(in);
}

void serialize_libsvm(const SparseDataset& ds, std::ostream& out) {
  for (std::size_t t = 0; t < ds.m; ++t) {
    out << (ds.labels[t] > 0 ? "+1" : "-1");
    const SparseRow& row = ds.rows[t];
    for (std::size_t k = 0; k < row.idx.size(); ++k)
      out << ' ' << (row.idx[k] + 1) << ':' << numtext::format_g17(row.val[k]);
    out << '\n';
  }
}

void serialize_libsvm_file(const SparseDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output " + path);
  serialize_libsvm(ds, out);
}

SparseDataset densify(const SparseDataset& ds) {
  SparseDataset out;
  out.m = ds.m;
  out.p = ds.p;
  out.labels = ds.labels;
  out.rows.resize(ds.m);
  for (std::size_t t = 0; t < ds.m; ++t) {
    SparseRow& row = out.rows[t];
    row.idx.resize(ds.p);
    std::iota(row.idx.begin(), row.idx.end(), 0);
    row.val.assign(ds.p, 0.0);
    for (std::size_t k = 0; k < ds.rows[t].idx.size(); ++k)
      row.val[ds.rows[t].idx[k]] = ds.rows[t].val[k];
  }
  return out;
}

SparseDataset standardize(const SparseDataset& ds) {
  if (!ds.dense())
    throw std::invalid_argument("standardize: requires a dense dataset");
  SparseDataset out = ds;
  const double m = static_cast<double>(ds.m);
  for (std::size_t j = 0; j < ds.p; ++j) {
    double mean = 0.0;
    for (std::size_t t = 0; t < ds.m; ++t) mean += ds.rows[t].val[j];
    mean /= m;
    double var = 0.0;
    for (std::size_t t = 0; t < ds.m; ++t) {
      const double d = ds.rows[t].val[j] - mean;
      var += d * d;
    }
    var /= m;
    if (var == 0.0) {
      for (std::size_t t = 0; t < ds.m; ++t) out.rows[t].val[j] = 0.0;
    } else {
      const double inv_std = 1.0 / std::sqrt(var);
      for (std::size_t t = 0; t < ds.m; ++t)
        out.rows[t].val[j] = (ds.rows[t].val[j] - mean) * inv_std;
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> partition(std::size_t m, std::size_t n,
                                                PartitionMode mode,
                                                std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("partition: need at least one block");
  if (n > m) throw std::invalid_argument("partition: more blocks than items");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  if (mode == PartitionMode::balanced) {
    Rng rng(seed);
    for (std::size_t i = m; i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);
  }
  std::vector<std::vector<std::size_t>> blocks(n);
  const std::size_t base = m / n;
  const std::size_t extra = m % n;
  std::size_t pos = 0;
  for (std::size_t b = 0; b < n; ++b) {
    const std::size_t size = base + (b < extra ? 1 : 0);
    blocks[b].assign(order.begin() + pos, order.begin() + pos + size);
    std::sort(blocks[b].begin(), blocks[b].end());
    pos += size;
  }
  return blocks;
}

SparseDataset synthetic_logistic_dataset(std::size_t m, std::size_t p,
                                         std::uint64_t seed,
                                         double label_noise) {
  if (m == 0 || p == 0)
    throw std::invalid_argument("synthetic_logistic_dataset: empty shape");
  Rng rng(seed);
  Vec direction(p);
  double nrm = 0.0;
  for (double& v : direction) {
    v = rng.normal();
    nrm += v * v;
  }
  nrm = std::sqrt(nrm);
  for (double& v : direction) v /= nrm;

  SparseDataset ds;
  ds.m = m;
  ds.p = p;
  ds.rows.resize(m);
  ds.labels.resize(m);
  for (std::size_t t = 0; t < m; ++t) {
    const int y = (t % 2 == 0) ? 1 : -1;
    SparseRow& row = ds.rows[t];
    row.idx.resize(p);
    std::iota(row.idx.begin(), row.idx.end(), 0);
    row.val.resize(p);
    for (std::size_t j = 0; j < p; ++j)
      row.val[j] = y * 1.5 * direction[j] + rng.normal();
    ds.labels[t] = (rng.uniform01() < label_noise) ? -y : y;
  }
  return ds;
}

LogisticLossTerm to_logistic_term(const SparseDataset& ds) {
  LogisticLossTerm term;
  term.rows = ds.rows;
  term.labels = ds.labels;
  term.dim = ds.p;
  term.scale = ds.m > 0 ? 1.0 / static_cast<double>(ds.m) : 0.0;
  return term;
}

}  // namespace pdsplit
