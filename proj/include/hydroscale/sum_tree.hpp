#ifndef HYDROSCALE_SUM_TREE_HPP
#define HYDROSCALE_SUM_TREE_HPP

#include <cstddef>
#include <vector>

namespace hydroscale
{

/**
 * Complete binary tree of partial sums over non-negative weights.
 *
 * Updating a leaf recomputes its ancestors from their children, so the root
 * never accumulates drift from incremental deltas.
 */
class SumTree
{
public:
  SumTree() = default;

  explicit SumTree(std::size_t n) { reset(n); }

  void reset(std::size_t n)
  {
    size_ = n;
    cap_ = 1;
    while (cap_ < n) cap_ <<= 1;
    nodes_.assign(2 * cap_, 0.0);
  }

  /// Sets every leaf at once in O(n).
  void assign(const std::vector<double>& weights)
  {
    reset(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) nodes_[cap_ + i] = weights[i];
    for (std::size_t p = cap_ - 1; p >= 1; --p) nodes_[p] = nodes_[2 * p] + nodes_[2 * p + 1];
  }

  std::size_t size() const noexcept { return size_; }
  double total() const noexcept { return nodes_.size() > 1 ? nodes_[1] : 0.0; }
  double weight(std::size_t i) const { return nodes_[cap_ + i]; }

  void set(std::size_t i, double w)
  {
    std::size_t p = cap_ + i;
    nodes_[p] = w;
    for (p >>= 1; p >= 1; p >>= 1) nodes_[p] = nodes_[2 * p] + nodes_[2 * p + 1];
  }

  /// Leaf whose cumulative interval contains u, for u in [0, total()). Never returns a zero-weight leaf
  /// while total() > 0.
  std::size_t find(double u) const
  {
    std::size_t p = 1;
    while (p < cap_) {
      const double left = nodes_[2 * p];
      const double right = nodes_[2 * p + 1];
      if (right <= 0.0 || (left > 0.0 && u < left)) {
        p = 2 * p;
      } else {
        u -= left;
        p = 2 * p + 1;
      }
    }
    return p - cap_;
  }

private:
  std::size_t size_ = 0;
  std::size_t cap_ = 1;
  std::vector<double> nodes_ = std::vector<double>(2, 0.0);
};

}  // namespace hydroscale

#endif  // HYDROSCALE_SUM_TREE_HPP
