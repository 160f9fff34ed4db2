#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "dbd/core.hpp"

namespace dbd {

/// Row-major set of equal-width embedding vectors.
template <class T>
class BasicEmbeddingSet {
 public:
  using value_type = T;

  BasicEmbeddingSet() = default;
  explicit BasicEmbeddingSet(std::uint32_t dim) : dim_(dim) {}
  BasicEmbeddingSet(std::uint32_t dim, std::vector<T> data) : dim_(dim), data_(std::move(data)) {
    if (dim_ == 0 ? !data_.empty() : data_.size() % dim_ != 0)
      throw InvalidArgument("embedding payload is not a whole number of rows");
  }
  BasicEmbeddingSet(std::initializer_list<std::vector<T>> rows) {
    for (const auto& r : rows) push_back(r);
  }

  void push_back(std::span<const T> row) {
    if (empty() && dim_ == 0) dim_ = static_cast<std::uint32_t>(row.size());
    if (row.size() != dim_) throw InvalidArgument("embedding width differs within a set");
    data_.insert(data_.end(), row.begin(), row.end());
  }
  void push_back(const std::vector<T>& row) { push_back(std::span<const T>(row)); }

  std::uint32_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const T> operator[](std::size_t i) const {
    return std::span<const T>(data_).subspan(i * dim_, dim_);
  }
  std::span<const T> data() const noexcept { return data_; }

  /// Rows `indices`, in that order.
  BasicEmbeddingSet subset(std::span<const std::size_t> indices) const {
    BasicEmbeddingSet out(dim_);
    for (std::size_t i : indices) {
      if (i >= size()) throw InvalidArgument("embedding row index out of range");
      out.push_back((*this)[i]);
    }
    return out;
  }

  friend bool operator==(const BasicEmbeddingSet&, const BasicEmbeddingSet&) = default;

 private:
  std::uint32_t dim_ = 0;
  std::vector<T> data_;
};

using EmbeddingSet = BasicEmbeddingSet<float>;

}  // namespace dbd
