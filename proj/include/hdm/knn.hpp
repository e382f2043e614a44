#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace hdm {

/// Row-major point set: one point per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Neighbor {
  std::uint32_t index;
  double dist2;
};

/// Exact k-nearest-neighbor index. Ordering is by (squared distance, index),
/// so equal distances always resolve to the smaller index. Sets below
/// kBruteForceBelow points are scanned directly; larger ones use a kd-tree.
class NeighborIndex {
 public:
  static constexpr std::size_t kBruteForceBelow = 1024;

  explicit NeighborIndex(PointMatrix points);

  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  const PointMatrix& points() const { return points_; }
  bool uses_tree() const { return !nodes_.empty(); }

  /// The k nearest points to `query`, excluding index `exclude` (pass -1 for none).
  std::vector<Neighbor> knn(const Eigen::Ref<const Eigen::RowVectorXd>& query, std::size_t k,
                            std::int64_t exclude = -1) const;

  /// k nearest neighbors of every stored point, self excluded.
  std::vector<std::vector<Neighbor>> all_knn(std::size_t k) const;

 private:
  struct Node {
    std::uint32_t begin, end;      // range into order_
    std::int32_t left = -1, right = -1;
    std::int32_t split_dim = -1;
    double split = 0.0;
    Eigen::VectorXd lo, hi;        // bounding box
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, const Eigen::Ref<const Eigen::RowVectorXd>& q, std::size_t k,
              std::int64_t exclude, std::vector<Neighbor>& heap) const;

  PointMatrix points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Undirected edges (i < j, sorted) where each endpoint is among the k nearest
/// neighbors of the other.
std::vector<std::pair<std::uint32_t, std::uint32_t>> mutual_knn_edges(const NeighborIndex& index,
                                                                      std::size_t k);

}  // namespace hdm
