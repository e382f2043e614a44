#pragma once

#include <iosfwd>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "hdm/kernels.hpp"

namespace hdm {

/// W_alpha = D^{-alpha} W D^{-alpha} with D the row sums of W. alpha = 0
/// returns W untouched. Throws ZeroDegreeVertex when a row sum is not positive.
HorizontalDiffusionMatrix alpha_normalize(HorizontalDiffusionMatrix w, double alpha);

/// Degrees of W_alpha and the three graph horizontal Laplacians built from it:
///   L^H  = D - W
///   L_rw = I - D^{-1} W
///   L_*  = I - D^{-1/2} W D^{-1/2}
/// The operators are applied matrix-free on top of the stored W.
class LaplacianBundle {
 public:
  LaplacianBundle(HorizontalDiffusionMatrix w_alpha, double alpha);

  const HorizontalDiffusionMatrix& w() const { return w_; }
  const Eigen::VectorXd& degrees() const { return degrees_; }
  double alpha() const { return alpha_; }
  std::size_t size() const { return w_.size(); }

  Eigen::VectorXd apply_lh(const Eigen::VectorXd& x) const;
  Eigen::VectorXd apply_lrw(const Eigen::VectorXd& x) const;
  Eigen::VectorXd apply_lstar(const Eigen::VectorXd& x) const;
  /// D^{-1} W x, the random-walk averaging operator.
  Eigen::VectorXd apply_random_walk(const Eigen::VectorXd& x) const;
  /// D^{-1/2} W D^{-1/2} x, which shares eigenvectors with L_* (eigenvalue 1 - lambda).
  Eigen::VectorXd apply_normalized_adjacency(const Eigen::VectorXd& x) const;

  Eigen::SparseMatrix<double> lh_sparse() const;
  Eigen::MatrixXd lh_dense(std::size_t max_size = 4096) const;
  Eigen::MatrixXd lrw_dense(std::size_t max_size = 4096) const;
  Eigen::MatrixXd lstar_dense(std::size_t max_size = 4096) const;

 private:
  HorizontalDiffusionMatrix w_;
  Eigen::VectorXd degrees_;
  Eigen::VectorXd inv_sqrt_degrees_;
  double alpha_;
};

/// Checks positive degrees and connectivity, then forms the bundle.
/// Throws ZeroDegreeVertex or DisconnectedGraph.
LaplacianBundle horizontal_laplacians(HorizontalDiffusionMatrix w_alpha, double alpha);

/// One `row col value` line per stored entry, reals at 17 significant digits.
void write_triplets(std::ostream& os, const Eigen::SparseMatrix<double>& m);
/// Reads the triplet format; the matrix is sized by the largest index unless n > 0.
Eigen::SparseMatrix<double> read_triplets(std::istream& is, Eigen::Index n = 0);

}  // namespace hdm
