#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "pdsplit/vec.hpp"

namespace pdsplit {

/// Element of a product of Euclidean blocks. Stores the concatenated
/// coordinates plus the block layout, so the same flat vector can be viewed
/// either as one long vector or block by block.
class BlockVector {
 public:
  BlockVector() = default;

  explicit BlockVector(std::vector<std::size_t> layout)
      : layout_(std::move(layout)) {
    build_offsets();
    data_.assign(dim_, 0.0);
  }

  BlockVector(std::vector<std::size_t> layout, Vec data)
      : layout_(std::move(layout)), data_(std::move(data)) {
    build_offsets();
    if (data_.size() != dim_)
      throw std::invalid_argument("BlockVector: data does not match layout");
  }

  std::size_t blocks() const { return layout_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::size_t>& layout() const { return layout_; }

  std::span<double> block(std::size_t j) {
    check(j);
    return {data_.data() + offsets_[j], layout_[j]};
  }
  std::span<const double> block(std::size_t j) const {
    check(j);
    return {data_.data() + offsets_[j], layout_[j]};
  }

  std::size_t offset(std::size_t j) const {
    check(j);
    return offsets_[j];
  }

  Vec& data() { return data_; }
  const Vec& data() const { return data_; }

  bool same_layout(const BlockVector& other) const {
    return layout_ == other.layout_;
  }

 private:
  void build_offsets() {
    offsets_.resize(layout_.size());
    std::size_t off = 0;
    for (std::size_t j = 0; j < layout_.size(); ++j) {
      offsets_[j] = off;
      off += layout_[j];
    }
    dim_ = off;
  }

  void check(std::size_t j) const {
    if (j >= layout_.size())
      throw std::out_of_range("BlockVector: block index out of range");
  }

  std::vector<std::size_t> layout_;
  std::vector<std::size_t> offsets_;
  std::size_t dim_ = 0;
  Vec data_;
};

}  // namespace pdsplit
