#include "hdm/knn.hpp"

#include <algorithm>
#include <numeric>

#include "hdm/error.hpp"
#include "hdm/parallel.hpp"

namespace hdm {

namespace {

constexpr std::uint32_t kLeafSize = 16;

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
}

// Max-heap on (dist2, index); the root is the current worst candidate.
void offer(std::vector<Neighbor>& heap, std::size_t k, Neighbor cand) {
  if (heap.size() < k) {
    heap.push_back(cand);
    std::push_heap(heap.begin(), heap.end(), closer);
  } else if (closer(cand, heap.front())) {
    std::pop_heap(heap.begin(), heap.end(), closer);
    heap.back() = cand;
    std::push_heap(heap.begin(), heap.end(), closer);
  }
}

}  // namespace

NeighborIndex::NeighborIndex(PointMatrix points) : points_(std::move(points)) {
  if (points_.rows() >= static_cast<Eigen::Index>(kBruteForceBelow)) {
    order_.resize(static_cast<std::size_t>(points_.rows()));
    std::iota(order_.begin(), order_.end(), 0u);
    nodes_.reserve(2 * order_.size() / kLeafSize + 1);
    build(0, static_cast<std::uint32_t>(order_.size()));
  }
}

std::int32_t NeighborIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end});
  const Eigen::Index dim = points_.cols();
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(dim, std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = -lo;
  for (std::uint32_t p = begin; p < end; ++p) {
    lo = lo.cwiseMin(points_.row(order_[p]).transpose());
    hi = hi.cwiseMax(points_.row(order_[p]).transpose());
  }
  nodes_[id].lo = lo;
  nodes_[id].hi = hi;
  if (end - begin <= kLeafSize) return id;

  Eigen::Index dimension = 0;
  (hi - lo).maxCoeff(&dimension);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double va = points_(a, dimension), vb = points_(b, dimension);
                     return va < vb || (va == vb && a < b);
                   });
  nodes_[id].split_dim = static_cast<std::int32_t>(dimension);
  nodes_[id].split = points_(order_[mid], dimension);
  const std::int32_t l = build(begin, mid);
  const std::int32_t r = build(mid, end);
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

void NeighborIndex::search(std::int32_t node_id, const Eigen::Ref<const Eigen::RowVectorXd>& q,
                           std::size_t k, std::int64_t exclude,
                           std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (heap.size() == k) {
    double box = 0.0;
    for (Eigen::Index c = 0; c < q.size(); ++c) {
      const double d = std::max({node.lo[c] - q[c], q[c] - node.hi[c], 0.0});
      box += d * d;
    }
    // Strict comparison: a box at exactly the worst distance may hold a tie
    // with a smaller index.
    if (box > heap.front().dist2) return;
  }
  if (node.left < 0) {
    for (std::uint32_t p = node.begin; p < node.end; ++p) {
      const std::uint32_t idx = order_[p];
      if (static_cast<std::int64_t>(idx) == exclude) continue;
      offer(heap, k, {idx, (points_.row(idx) - q).squaredNorm()});
    }
    return;
  }
  const bool go_left = q[node.split_dim] < node.split;
  search(go_left ? node.left : node.right, q, k, exclude, heap);
  search(go_left ? node.right : node.left, q, k, exclude, heap);
}

std::vector<Neighbor> NeighborIndex::knn(const Eigen::Ref<const Eigen::RowVectorXd>& query,
                                         std::size_t k, std::int64_t exclude) const {
  if (query.size() != points_.cols())
    throw Error(ErrorCode::SizeMismatch, "query dimension differs from the point set");
  const std::size_t available = size() - ((exclude >= 0 && exclude < static_cast<std::int64_t>(size())) ? 1 : 0);
  if (k > available)
    throw Error(ErrorCode::NeighborCountTooSmall,
                "requested " + std::to_string(k) + " neighbors from " + std::to_string(available) +
                    " candidates");
  std::vector<Neighbor> heap;
  heap.reserve(k + 1);
  if (k == 0) return heap;
  if (nodes_.empty()) {
    for (Eigen::Index i = 0; i < points_.rows(); ++i) {
      if (i == exclude) continue;
      offer(heap, k, {static_cast<std::uint32_t>(i), (points_.row(i) - query).squaredNorm()});
    }
  } else {
    search(0, query, k, exclude, heap);
  }
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

std::vector<std::vector<Neighbor>> NeighborIndex::all_knn(std::size_t k) const {
  std::vector<std::vector<Neighbor>> out(size());
  parallel_for(size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      out[i] = knn(points_.row(static_cast<Eigen::Index>(i)), k, static_cast<std::int64_t>(i));
  });
  return out;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> mutual_knn_edges(const NeighborIndex& index,
                                                                      std::size_t k) {
  const auto nbrs = index.all_knn(k);
  std::vector<std::vector<std::uint32_t>> sorted(nbrs.size());
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    for (const auto& n : nbrs[i]) sorted[i].push_back(n.index);
    std::sort(sorted[i].begin(), sorted[i].end());
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (std::uint32_t i = 0; i < sorted.size(); ++i)
    for (std::uint32_t j : sorted[i])
      if (j > i && std::binary_search(sorted[j].begin(), sorted[j].end(), i)) edges.emplace_back(i, j);
  return edges;
}

}  // namespace hdm
