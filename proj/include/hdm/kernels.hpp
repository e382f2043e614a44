#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "hdm/layout.hpp"
#include "hdm/localpca.hpp"
#include "hdm/sampling.hpp"

namespace hdm {

enum class KernelShape {
  Gaussian,             // exp(-(b/eps + f/delta))
  TruncatedGaussian,    // Gaussian restricted to b <= eps and f <= delta
  EpanechnikovProduct,  // (1 - b/eps)(1 - f/delta) on the same support
};

/// Coupled kernel with base bandwidth eps and fibre bandwidth delta, both in
/// squared-distance units. delta = +inf makes the fibre factor identically 1.
struct KernelSpec {
  KernelShape shape = KernelShape::Gaussian;
  double eps = 0.1;
  double delta = 0.002;

  void validate() const;
};

double coupled_weight(double base_dist2, double fibre_dist2, const KernelSpec& spec);

using BaseEdge = std::pair<std::uint32_t, std::uint32_t>;

/// Symmetric nonnegative block matrix W over a fibre layout. Only blocks (i, j)
/// with i < j are stored; block (j, i) is the transpose and diagonal blocks are
/// zero, so W = W^T holds exactly by construction.
class HorizontalDiffusionMatrix {
 public:
  struct Block {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    Eigen::MatrixXd values;  // kappa_i x kappa_j
  };

  HorizontalDiffusionMatrix() = default;
  /// Validates shapes, ordering (strictly increasing (i, j) with i < j) and nonnegativity.
  HorizontalDiffusionMatrix(BlockLayout layout, std::vector<Block> blocks);

  const BlockLayout& layout() const { return layout_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  std::size_t size() const { return layout_.total; }
  std::vector<BaseEdge> base_edges() const;

  /// W(u, v) by global point index.
  double entry(std::size_t u, std::size_t v) const;
  std::size_t nonzeros() const;

  /// y = W x. Each output segment is owned by one worker, so the result does
  /// not depend on the thread count.
  void multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
  Eigen::VectorXd row_sums() const;
  /// Entry (u, v) multiplied by s_u * s_v.
  HorizontalDiffusionMatrix scaled(const Eigen::VectorXd& s) const;
  void scale_in_place(const Eigen::VectorXd& s);

  /// True when the graph on the kappa points (nonzero entries as edges) is connected.
  bool connected() const;

  Eigen::SparseMatrix<double> to_sparse() const;
  /// Dense copy; throws ScaleTooLarge when kappa exceeds max_size.
  Eigen::MatrixXd to_dense(std::size_t max_size = 4096) const;

 private:
  struct Incidence {
    std::uint32_t block;
    bool as_row;  // fibre is the block's i (row) side
  };

  BlockLayout layout_;
  std::vector<Block> blocks_;
  std::vector<std::vector<Incidence>> incidence_;  // per fibre
};

/// Pairs (r, s) where r is among the k nearest columns of row r and s among the
/// k nearest rows of column s, by (distance, index). k >= cols / rows keeps everything.
Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mutual_rank_mask(const Eigen::MatrixXd& dist2,
                                                                     std::size_t k);

/// Exact-transport build on UTS^2: mutual K_B-NN base edges, transported fibre
/// points compared by mutual K_F-NN, entries from coupled_weight.
/// Throws DisconnectedGraph when the resulting point graph is not connected.
HorizontalDiffusionMatrix build_w_noiseless(const FibreBundleSample& sample, std::size_t k_base,
                                            std::size_t k_fibre, const KernelSpec& spec);

/// Same gating as build_w_noiseless with fibre distances |O_ji c_ir - c_js|^2
/// between coefficient vectors. `transports` must cover every mutual K_B-NN
/// base edge in either orientation.
HorizontalDiffusionMatrix build_w_empirical(const EmpiricalFibreSample& sample,
                                            const std::vector<TransportEstimate>& transports,
                                            std::size_t k_base, std::size_t k_fibre,
                                            const KernelSpec& spec);

/// Precomputed correspondence rho_ij between fibres i and j (kappa_i x kappa_j).
struct CorrespondenceBlock {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  Eigen::SparseMatrix<double> rho;
  std::optional<double> base_distance;
};

/// Block (i, j) = exp(-d_ij^2 / eps_base) rho_ij when i and j are mutually
/// among each other's n_neighbors nearest fibres under base_dists.
/// Blocks missing in one orientation are taken as the transpose of the other.
/// n_neighbors >= fibre count - 1 keeps every block.
HorizontalDiffusionMatrix build_w_from_blocks(const std::vector<std::size_t>& fibre_sizes,
                                              const std::vector<CorrespondenceBlock>& blocks,
                                              const Eigen::MatrixXd& base_dists,
                                              std::size_t n_neighbors, double eps_base);

}  // namespace hdm
