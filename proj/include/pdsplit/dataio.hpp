#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdsplit/logistic.hpp"
#include "pdsplit/vec.hpp"

namespace pdsplit {

/// Labeled sparse dataset. Feature indices are 0-based in memory (the
/// text format is 1-based); labels are strictly +/-1 after loading.
struct SparseDataset {
  std::size_t m = 0;  // rows
  std::size_t p = 0;  // features
  std::vector<SparseRow> rows;
  std::vector<int> labels;

  bool dense() const;  // every row carries all p features
};

/// Parse the `label idx:val ...` text format. Labels may be {0,1} or
/// {-1,+1} in the file and are mapped to {-1,+1}; the feature count is
/// inferred from the largest index. Malformed tokens, non-increasing
/// indices within a line, and empty files are reported with their line
/// number.
SparseDataset parse_libsvm(std::istream& in);
SparseDataset parse_libsvm_file(const std::string& path);

void serialize_libsvm(const SparseDataset& ds, std::ostream& out);
void serialize_libsvm_file(const SparseDataset& ds, const std::string& path);

/// All-features representation of every row (zeros materialized).
SparseDataset densify(const SparseDataset& ds);

/// Center and scale each feature to zero mean and unit (population)
/// variance; constant features become all-zero. Requires a dense dataset.
SparseDataset standardize(const SparseDataset& ds);

/// Disjoint blocks covering {0..m-1} with sizes differing by at most one.
/// `balanced` deals a seeded shuffle; `contiguous` slices in order.
enum class PartitionMode { balanced, contiguous };
std::vector<std::vector<std::size_t>> partition(std::size_t m, std::size_t n,
                                                PartitionMode mode,
                                                std::uint64_t seed);

/// Two Gaussian blobs around +/- a random direction, labels flipped with
/// probability `label_noise`.
SparseDataset synthetic_logistic_dataset(std::size_t m, std::size_t p,
                                         std::uint64_t seed,
                                         double label_noise = 0.05);

LogisticLossTerm to_logistic_term(const SparseDataset& ds);

}  // namespace pdsplit
