#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

namespace episim {

// Fenwick tree over unsigned integer weights, used to pick a site
// proportionally to an integer weight in O(log n). Keeping the weights
// integral makes the maintained totals exact: the root sum always equals
// the recomputed sum, so rate bookkeeping never drifts.
class WeightedIndex {
 public:
  std::size_t size() const { return weight_.size(); }

  std::uint64_t total() const { return total_; }

  std::uint64_t weight(std::size_t i) const { return weight_[i]; }

  // Appends an item with weight 0 in O(log n).
  std::size_t push_back() {
    weight_.push_back(0);
    if (tree_.empty()) tree_.push_back(0);
    const std::size_t j = weight_.size();  // 1-based index of the new item
    std::uint64_t covered = 0;             // sum over (j - lowbit(j), j - 1]
    std::size_t k = j - 1;
    const std::size_t stop = j - (j & (~j + 1));
    while (k > stop) {
      covered += tree_[k];
      k -= k & (~k + 1);
    }
    tree_.push_back(covered);
    while ((mask_ == 0 ? 1 : mask_ << 1) <= j) mask_ = (mask_ == 0 ? 1 : mask_ << 1);
    return j - 1;
  }

  void reserve_items(std::size_t n) {
    weight_.reserve(n);
    tree_.reserve(n + 1);
  }

  void set(std::size_t i, std::uint64_t w) {
    std::uint64_t old = weight_[i];
    if (old == w) return;
    weight_[i] = w;
    total_ += w - old;  // wraparound-exact (sums stay nonnegative)
    std::uint64_t delta = w - old;
    for (std::size_t j = i + 1; j <= weight_.size(); j += j & (~j + 1)) {
      tree_[j] += delta;
    }
  }

  // Picks the item containing offset r in the prefix-sum order, r < total().
  std::size_t sample(std::uint64_t r) const {
    assert(r < total_);
    std::size_t idx = 0;
    std::size_t step = mask_;
    while (step > 0) {
      std::size_t next = idx + step;
      if (next <= weight_.size() && tree_[next] <= r) {
        idx = next;
        r -= tree_[next];
      }
      step >>= 1;
    }
    return idx;  // idx items have cumulative weight <= r, so item idx holds r
  }

 private:
  std::vector<std::uint64_t> weight_;
  std::vector<std::uint64_t> tree_;
  std::size_t mask_ = 0;
  std::uint64_t total_ = 0;
};

}  // namespace episim
