#pragma once

#include "bilip/core.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <utility>
#include <vector>

namespace bilip {

// Static kd-tree over points of runtime dimension. Queries are exact.
class KdTree {
 public:
  KdTree() = default;

  explicit KdTree(std::vector<Vec> points) : points_(std::move(points)) {
    if (points_.empty()) return;
    dim_ = static_cast<int>(points_.front().size());
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, order_.size());
  }

  bool empty() const { return points_.empty(); }
  std::size_t size() const { return points_.size(); }
  const Vec& point(std::size_t i) const { return points_[i]; }
  const std::vector<Vec>& points() const { return points_; }

  struct Hit {
    std::size_t index;
    double dist;
  };

  Hit nearest(const Vec& q) const {
    Hit best{0, std::numeric_limits<double>::infinity()};
    if (empty()) return best;
    double best_sq = best.dist;
    nearest_rec(0, q, best.index, best_sq);
    best.dist = std::sqrt(best_sq);
    return best;
  }

  /// The k nearest points, closest first.
  std::vector<Hit> knn(const Vec& q, std::size_t k) const {
    std::vector<Hit> out;
    if (empty() || k == 0) return out;
    k = std::min(k, points_.size());
    std::priority_queue<std::pair<double, std::size_t>> heap;
    knn_rec(0, q, k, heap);
    out.resize(heap.size());
    for (std::size_t i = out.size(); i-- > 0;) {
      out[i] = {heap.top().second, std::sqrt(heap.top().first)};
      heap.pop();
    }
    return out;
  }

  /// Indices of all points within radius of q (unordered).
  std::vector<std::size_t> within(const Vec& q, double radius) const {
    std::vector<std::size_t> out;
    if (!empty()) within_rec(0, q, radius * radius, out);
    return out;
  }

  bool any_within(const Vec& q, double radius) const {
    return !empty() && nearest(q).dist <= radius;
  }

 private:
  static constexpr std::size_t kLeafSize = 12;

  struct Node {
    std::size_t begin, end;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    std::size_t left = 0, right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({begin, end});
    if (end - begin <= kLeafSize) return id;
    Vec lo = points_[order_[begin]], hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] - lo[axis] <= 0.0) return id;  // all coincident
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];
    const std::size_t l = build(begin, mid);
    const std::size_t r = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  void nearest_rec(std::size_t id, const Vec& q, std::size_t& best, double& best_sq) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const double d = (points_[order_[i]] - q).squaredNorm();
        if (d < best_sq) {
          best_sq = d;
          best = order_[i];
        }
      }
      return;
    }
    const double diff = q[n.axis] - n.split;
    const std::size_t near = diff < 0 ? n.left : n.right;
    const std::size_t far = diff < 0 ? n.right : n.left;
    nearest_rec(near, q, best, best_sq);
    if (diff * diff < best_sq) nearest_rec(far, q, best, best_sq);
  }

  void knn_rec(std::size_t id, const Vec& q, std::size_t k,
               std::priority_queue<std::pair<double, std::size_t>>& heap) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const double d = (points_[order_[i]] - q).squaredNorm();
        if (heap.size() < k) {
          heap.emplace(d, order_[i]);
        } else if (d < heap.top().first) {
          heap.pop();
          heap.emplace(d, order_[i]);
        }
      }
      return;
    }
    const double diff = q[n.axis] - n.split;
    const std::size_t near = diff < 0 ? n.left : n.right;
    const std::size_t far = diff < 0 ? n.right : n.left;
    knn_rec(near, q, k, heap);
    if (heap.size() < k || diff * diff < heap.top().first) knn_rec(far, q, k, heap);
  }

  void within_rec(std::size_t id, const Vec& q, double r_sq, std::vector<std::size_t>& out) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i)
        if ((points_[order_[i]] - q).squaredNorm() <= r_sq) out.push_back(order_[i]);
      return;
    }
    const double diff = q[n.axis] - n.split;
    const std::size_t near = diff < 0 ? n.left : n.right;
    const std::size_t far = diff < 0 ? n.right : n.left;
    within_rec(near, q, r_sq, out);
    if (diff * diff <= r_sq) within_rec(far, q, r_sq, out);
  }

  std::vector<Vec> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  int dim_ = 0;
};

}  // namespace bilip
