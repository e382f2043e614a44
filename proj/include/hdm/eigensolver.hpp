#pragma once

#include <cstdint>
#include <functional>
#include <memory>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace hdm {

/// Matrix-free symmetric operator: apply(x, y) must set y = A x.
struct SymmetricOperator {
  Eigen::Index n = 0;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> apply;

  static SymmetricOperator from_dense(Eigen::MatrixXd a);
  static SymmetricOperator from_sparse(Eigen::SparseMatrix<double> a);
};

enum class Which { Smallest, Largest };

enum class EigMethod {
  Auto,     // dense below `dense_below`, Lanczos otherwise
  Lanczos,  // thick-restart (Krylov-Schur) Lanczos with full reorthogonalization
  Dense,
};

struct EigOptions {
  Eigen::Index k = 6;
  Which which = Which::Smallest;
  double tol = 1e-10;  // residual bound relative to the spectral radius estimate
  int max_restarts = 3000;
  std::uint64_t seed = 0;
  Eigen::Index ncv = 0;  // Krylov basis size; 0 picks max(2k + 1, k + 40)
  EigMethod method = EigMethod::Auto;
  Eigen::Index dense_below = 256;
  bool check_symmetry = true;
};

/// Eigenpairs in ascending eigenvalue order. Each eigenvector's largest-magnitude
/// entry (first one on ties) is positive.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // n x k, orthonormal columns
  Eigen::VectorXd residuals;     // |A v - lambda v| per pair
  int restarts = 0;
  long matvecs = 0;

  Eigen::Index size() const { return eigenvalues.size(); }
};

/// k eigenpairs at the requested end of the spectrum (1 <= k <= n).
/// Throws NotSymmetric when random probes show y^T A x != x^T A y, and
/// NoConvergence when residuals stay above tol after max_restarts.
SpectralDecomposition eig_sym(const SymmetricOperator& op, const EigOptions& options);

/// Sign convention used by eig_sym, exposed for oracles.
void normalize_signs(Eigen::MatrixXd& vectors);

}  // namespace hdm
