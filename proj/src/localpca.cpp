#include "hdm/localpca.hpp"

#include <algorithm>
#include <cmath>

#include "hdm/error.hpp"
#include "hdm/parallel.hpp"

namespace hdm {

double pca_kernel_value(PcaKernel kernel, double u) {
  if (u < 0.0 || u > 1.0) return 0.0;
  switch (kernel) {
    case PcaKernel::Epanechnikov:
      return 1.0 - u * u;
    case PcaKernel::TruncatedGaussian:
      return std::exp(-5.0 * u * u);
  }
  return 0.0;
}

namespace {

struct LocalSvd {
  Eigen::MatrixXd u;  // D x r left singular vectors
  Eigen::VectorXd sigma;
};

std::size_t positive_count(const Eigen::VectorXd& sigma) {
  if (sigma.size() == 0 || !(sigma[0] > 0.0)) return 0;
  const double cut = 1e-12 * sigma[0];
  return static_cast<std::size_t>((sigma.array() > cut).count());
}

}  // namespace

std::vector<PcaBasis> local_pca_bases(const PointMatrix& points, const LocalPcaOptions& options) {
  const auto n = static_cast<std::size_t>(points.rows());
  const auto ambient = static_cast<int>(points.cols());
  if (n == 0) throw Error(ErrorCode::EmptyInput, "local PCA on an empty point set");
  if (!(options.eps_pca > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps_pca must be positive");
  if (options.dim && (*options.dim < 1 || *options.dim > ambient))
    throw Error(ErrorCode::InvalidArgument, "intrinsic dimension out of range");
  const std::size_t min_k = options.dim ? static_cast<std::size_t>(*options.dim) + 1 : 2;
  if (options.k < min_k || options.k >= n)
    throw Error(ErrorCode::NeighborCountTooSmall,
                "local PCA needs d + 1 <= k < n (k = " + std::to_string(options.k) + ")");

  const NeighborIndex index(points);
  const double radius = std::sqrt(options.eps_pca);
  std::vector<LocalSvd> svds(n);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j) {
      const auto row = static_cast<Eigen::Index>(j);
      const auto nbrs = index.knn(points.row(row), options.k, static_cast<std::int64_t>(j));
      Eigen::MatrixXd xd(ambient, static_cast<Eigen::Index>(nbrs.size()));
      for (std::size_t c = 0; c < nbrs.size(); ++c) {
        const Eigen::VectorXd diff = (points.row(nbrs[c].index) - points.row(row)).transpose();
        const double w = std::sqrt(pca_kernel_value(options.kernel, diff.norm() / radius));
        xd.col(static_cast<Eigen::Index>(c)) = w * diff;
      }
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(xd, Eigen::ComputeThinU);
      svds[j] = {svd.matrixU(), svd.singularValues()};
    }
  });

  int dim = 0;
  if (options.dim) {
    dim = *options.dim;
  } else {
    std::vector<Eigen::VectorXd> sv;
    sv.reserve(n);
    for (const auto& s : svds) sv.push_back(s.sigma);
    dim = estimate_dimension(sv, options.energy_threshold);
  }

  std::vector<PcaBasis> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (positive_count(svds[j].sigma) < static_cast<std::size_t>(dim))
      throw Error(ErrorCode::PcaRankDeficient,
                  "point " + std::to_string(j) + " has fewer than " + std::to_string(dim) +
                      " positive singular values in its weighted neighborhood");
    out[j].base_index = j;
    out[j].basis = svds[j].u.leftCols(dim);
    out[j].singular_values = svds[j].sigma;
  }
  return out;
}

int estimate_dimension(const std::vector<Eigen::VectorXd>& singular_values, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorCode::InvalidArgument, "gamma must lie in (0, 1)");
  std::vector<int> local;
  for (const auto& sv : singular_values) {
    if (sv.size() == 0) continue;
    const double total = sv.squaredNorm();
    if (!(total > 0.0)) {
      local.push_back(0);
      continue;
    }
    double acc = 0.0;
    int m = 0;
    while (m < sv.size()) {
      acc += sv[m] * sv[m];
      ++m;
      if (acc >= gamma * total) break;
    }
    local.push_back(m);
  }
  if (local.empty()) throw Error(ErrorCode::EmptyInput, "no singular values to estimate a dimension from");
  const std::size_t mid = (local.size() - 1) / 2;  // lower median
  std::nth_element(local.begin(), local.begin() + static_cast<std::ptrdiff_t>(mid), local.end());
  return local[mid];
}

TransportEstimate align_bases(const PcaBasis& from, const PcaBasis& to) {
  if (from.basis.rows() != to.basis.rows() || from.basis.cols() != to.basis.cols())
    throw Error(ErrorCode::SizeMismatch, "bases differ in shape");
  const Eigen::MatrixXd overlap = to.basis.transpose() * from.basis;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(overlap, Eigen::ComputeFullU | Eigen::ComputeFullV);
  TransportEstimate est;
  est.i = static_cast<std::uint32_t>(from.base_index);
  est.j = static_cast<std::uint32_t>(to.base_index);
  est.O = svd.matrixU() * svd.matrixV().transpose();
  est.degenerate = svd.singularValues().size() > 0 && svd.singularValues().minCoeff() < 1e-12;
  return est;
}

std::vector<TransportEstimate> estimate_transports(
    const std::vector<PcaBasis>& bases,
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  std::vector<TransportEstimate> out(edges.size());
  parallel_for(edges.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const auto [i, j] = edges[k];
      if (i >= bases.size() || j >= bases.size())
        throw Error(ErrorCode::IndexOutOfRange, "edge refers to a missing basis");
      out[k] = align_bases(bases[i], bases[j]);
    }
  });
  return out;
}

double principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::SizeMismatch, "subspaces differ in shape");
  // sin of the largest principal angle = || (I - A A^T) B ||_2, accurate for small angles.
  const Eigen::MatrixXd residual = b - a * (a.transpose() * b);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
  const double s = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  return std::asin(std::min(1.0, s));
}

}  // namespace hdm
