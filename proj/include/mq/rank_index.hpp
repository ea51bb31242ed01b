#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mq/errors.hpp"

namespace mq {

/// Order-statistics index over live keys drawn from 1..capacity: a Fenwick
/// counting tree with O(log capacity) insert, erase, rank and select.
class RankIndex {
 public:
  explicit RankIndex(std::uint64_t capacity) : tree_(capacity + 1, 0) {
    highest_bit_ = 1;
    while (highest_bit_ * 2 <= capacity) highest_bit_ *= 2;
  }

  /// Index holding every key 1..capacity; built in linear time.
  static RankIndex full(std::uint64_t capacity) {
    RankIndex idx(capacity);
    for (std::uint64_t i = 1; i <= capacity; ++i) {
      idx.tree_[i] += 1;
      const std::uint64_t parent = i + (i & (~i + 1));
      if (parent <= capacity) idx.tree_[parent] += idx.tree_[i];
    }
    idx.size_ = capacity;
    return idx;
  }

  std::uint64_t capacity() const noexcept { return tree_.size() - 1; }
  std::uint64_t size() const noexcept { return size_; }

  void insert(std::uint64_t key) { update(key, +1); ++size_; }
  void erase(std::uint64_t key) { update(key, -1); --size_; }

  /// Number of live keys strictly smaller than `key`.
  std::uint64_t count_less(std::uint64_t key) const {
    check(key);
    std::int64_t sum = 0;
    for (std::uint64_t i = key - 1; i > 0; i -= i & (~i + 1)) sum += tree_[i];
    return static_cast<std::uint64_t>(sum);
  }

  /// 1-based rank of `key` among the live keys (assuming it is live).
  std::uint64_t rank(std::uint64_t key) const { return count_less(key) + 1; }

  /// The k-th smallest live key, 1 <= k <= size().
  std::uint64_t select(std::uint64_t k) const {
    if (k == 0 || k > size_) throw ParameterError("RankIndex::select out of range");
    std::uint64_t pos = 0;
    std::int64_t remaining = static_cast<std::int64_t>(k);
    for (std::uint64_t step = highest_bit_; step > 0; step >>= 1) {
      const std::uint64_t next = pos + step;
      if (next <= capacity() && tree_[next] < remaining) {
        pos = next;
        remaining -= tree_[next];
      }
    }
    return pos + 1;
  }

 private:
  void check(std::uint64_t key) const {
    if (key == 0 || key > capacity()) throw ParameterError("RankIndex: key out of range");
  }

  void update(std::uint64_t key, std::int32_t delta) {
    check(key);
    for (std::uint64_t i = key; i <= capacity(); i += i & (~i + 1)) tree_[i] += delta;
  }

  std::vector<std::int32_t> tree_;
  std::uint64_t highest_bit_ = 1;
  std::uint64_t size_ = 0;
};

}  // namespace mq
