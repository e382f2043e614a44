#include "hdm/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "hdm/error.hpp"
#include "hdm/rng.hpp"

namespace hdm {

SymmetricOperator SymmetricOperator::from_dense(Eigen::MatrixXd a) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::SizeMismatch, "operator matrix must be square");
  auto m = std::make_shared<const Eigen::MatrixXd>(std::move(a));
  return {m->rows(), [m](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y.noalias() = *m * x; }};
}

SymmetricOperator SymmetricOperator::from_sparse(Eigen::SparseMatrix<double> a) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::SizeMismatch, "operator matrix must be square");
  auto m = std::make_shared<const Eigen::SparseMatrix<double>>(std::move(a));
  return {m->rows(), [m](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = *m * x; }};
}

void normalize_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
      // Ties within rounding go to the first index.
      const double a = std::abs(vectors(r, c));
      if (a > best * (1.0 + 1e-12)) {
        best = a;
        arg = r;
      }
    }
    if (vectors.rows() > 0 && vectors(arg, c) < 0.0) vectors.col(c) *= -1.0;
  }
}

namespace {

Eigen::VectorXd random_unit(Eigen::Index n, CounterRng& rng) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v / v.norm();
}

void check_symmetric(const SymmetricOperator& op, std::uint64_t seed) {
  CounterRng rng(derive_seed(seed, 0x5e11));
  const Eigen::VectorXd x = random_unit(op.n, rng), y = random_unit(op.n, rng);
  Eigen::VectorXd ax(op.n), ay(op.n);
  op.apply(x, ax);
  op.apply(y, ay);
  const double lhs = y.dot(ax), rhs = x.dot(ay);
  const double scale = std::max({ax.norm(), ay.norm(), 1e-300});
  if (std::abs(lhs - rhs) > 1e-8 * scale)
    throw Error(ErrorCode::NotSymmetric, "operator failed the symmetry probe (|y'Ax - x'Ay| = " +
                                             std::to_string(std::abs(lhs - rhs)) + ")");
}

// Selected eigen-indices of an ascending spectrum, most wanted first.
std::vector<Eigen::Index> wanted_order(Eigen::Index m, Which which) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(m));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  if (which == Which::Largest) std::reverse(idx.begin(), idx.end());
  return idx;
}

SpectralDecomposition finish(const SymmetricOperator& op, Eigen::VectorXd values, Eigen::MatrixXd vectors,
                             int restarts, long matvecs) {
  // Ascending order.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
  SpectralDecomposition out;
  out.eigenvalues.resize(values.size());
  out.eigenvectors.resize(vectors.rows(), vectors.cols());
  for (std::size_t c = 0; c < order.size(); ++c) {
    out.eigenvalues[static_cast<Eigen::Index>(c)] = values[order[c]];
    out.eigenvectors.col(static_cast<Eigen::Index>(c)) = vectors.col(order[c]);
  }
  normalize_signs(out.eigenvectors);
  out.residuals.resize(values.size());
  Eigen::VectorXd av(op.n);
  for (Eigen::Index c = 0; c < out.eigenvalues.size(); ++c) {
    op.apply(out.eigenvectors.col(c), av);
    out.residuals[c] = (av - out.eigenvalues[c] * out.eigenvectors.col(c)).norm();
  }
  out.restarts = restarts;
  out.matvecs = matvecs + values.size();
  return out;
}

SpectralDecomposition dense_eig(const SymmetricOperator& op, const EigOptions& opt) {
  Eigen::MatrixXd a(op.n, op.n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(op.n), col(op.n);
  for (Eigen::Index c = 0; c < op.n; ++c) {
    e[c] = 1.0;
    op.apply(e, col);
    a.col(c) = col;
    e[c] = 0.0;
  }
  a = 0.5 * (a + a.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "dense symmetric eigensolver failed");
  const Eigen::Index first = opt.which == Which::Smallest ? 0 : op.n - opt.k;
  return finish(op, es.eigenvalues().segment(first, opt.k), es.eigenvectors().middleCols(first, opt.k), 0, op.n);
}

SpectralDecomposition lanczos(const SymmetricOperator& op, const EigOptions& opt) {
  const Eigen::Index n = op.n, k = opt.k;
  // Work with B = sign * A so the wanted end is always the largest.
  const double sign = opt.which == Which::Largest ? 1.0 : -1.0;
  Eigen::Index m = opt.ncv > 0 ? opt.ncv : std::max(2 * k + 1, k + 40);
  m = std::min(std::max(m, k + 2), n);

  CounterRng rng(derive_seed(opt.seed, 1));
  Eigen::MatrixXd v(n, m + 1);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
  v.col(0) = random_unit(n, rng);
  Eigen::VectorXd w(n), coeffs;
  long matvecs = 0;
  double anorm = 0.0;
  Eigen::Index kept = 0;

  for (int restart = 0;; ++restart) {
    double beta = 0.0;
    for (Eigen::Index j = kept; j < m; ++j) {
      op.apply(v.col(j), w);
      ++matvecs;
      w *= sign;
      // Classical Gram-Schmidt twice gives orthogonality to working precision.
      coeffs = v.leftCols(j + 1).transpose() * w;
      w.noalias() -= v.leftCols(j + 1) * coeffs;
      const Eigen::VectorXd again = v.leftCols(j + 1).transpose() * w;
      w.noalias() -= v.leftCols(j + 1) * again;
      coeffs += again;
      h.col(j).head(j + 1) = coeffs;
      h.row(j).head(j + 1) = coeffs.transpose();
      anorm = std::max(anorm, coeffs.cwiseAbs().maxCoeff());
      beta = w.norm();
      if (j + 1 == n) {
        beta = 0.0;
        break;
      }
      if (beta <= 1e-13 * std::max(anorm, 1e-300)) {
        // Invariant subspace: continue with a fresh direction. This is what lets
        // exactly repeated eigenvalues show up more than once.
        beta = 0.0;
        Eigen::VectorXd r = random_unit(n, rng);
        for (int pass = 0; pass < 2; ++pass) r -= v.leftCols(j + 1) * (v.leftCols(j + 1).transpose() * r);
        v.col(j + 1) = r / r.norm();
      } else {
        v.col(j + 1) = w / beta;
      }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.topLeftCorner(m, m));
    const Eigen::VectorXd& theta = es.eigenvalues();
    const Eigen::MatrixXd& y = es.eigenvectors();
    anorm = std::max(anorm, theta.cwiseAbs().maxCoeff());
    const auto order = wanted_order(m, Which::Largest);

    Eigen::Index converged = 0;
    for (Eigen::Index c = 0; c < k; ++c) {
      const Eigen::Index col = order[static_cast<std::size_t>(c)];
      if (std::abs(beta * y(m - 1, col)) <= opt.tol * anorm) ++converged;
    }
    const bool exhausted = (m == n);
    if (converged == k || exhausted) {
      Eigen::VectorXd values(k);
      Eigen::MatrixXd vectors(n, k);
      for (Eigen::Index c = 0; c < k; ++c) {
        const Eigen::Index col = order[static_cast<std::size_t>(c)];
        values[c] = sign * theta[col];
        vectors.col(c) = v.leftCols(m) * y.col(col);
      }
      auto out = finish(op, std::move(values), std::move(vectors), restart, matvecs);
      for (Eigen::Index c = 0; c < k; ++c)
        if (out.residuals[c] > std::max(opt.tol, 1e-12) * anorm * 10.0 && !exhausted)
          throw Error(ErrorCode::NoConvergence, "Ritz residual estimate disagrees with the true residual");
      return out;
    }
    if (restart >= opt.max_restarts)
      throw Error(ErrorCode::NoConvergence, std::to_string(converged) + " of " + std::to_string(k) +
                                                " eigenpairs converged after " + std::to_string(restart) +
                                                " restarts");

    // Thick restart: keep the best `kept` Ritz vectors plus the residual direction.
    kept = std::min(m - 1, std::max(k + (m - k) / 2, k + converged / 2));
    Eigen::MatrixXd ysel(m, kept);
    for (Eigen::Index c = 0; c < kept; ++c) ysel.col(c) = y.col(order[static_cast<std::size_t>(c)]);
    const Eigen::VectorXd residual = v.col(m);
    v.leftCols(kept) = v.leftCols(m) * ysel;
    v.col(kept) = residual;
    h.setZero();
    for (Eigen::Index c = 0; c < kept; ++c) {
      h(c, c) = theta[order[static_cast<std::size_t>(c)]];
      const double b = beta * ysel(m - 1, c);
      h(kept, c) = b;
      h(c, kept) = b;
    }
  }
}

}  // namespace

SpectralDecomposition eig_sym(const SymmetricOperator& op, const EigOptions& options) {
  if (!op.apply || op.n <= 0) throw Error(ErrorCode::EmptyInput, "eigensolver needs a non-empty operator");
  if (options.k < 1 || options.k > op.n)
    throw Error(ErrorCode::InvalidArgument, "k must satisfy 1 <= k <= n");
  if (!(options.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
  if (options.check_symmetry) check_symmetric(op, options.seed);
  const bool dense = options.method == EigMethod::Dense ||
                     (options.method == EigMethod::Auto && op.n < options.dense_below);
  return dense ? dense_eig(op, options) : lanczos(op, options);
}

}  // namespace hdm
