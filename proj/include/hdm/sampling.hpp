#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "hdm/knn.hpp"
#include "hdm/layout.hpp"
#include "hdm/localpca.hpp"

namespace hdm {

/// One data object: a base point and the points of its fibre (one per row).
struct Fibre {
  Eigen::VectorXd base;  // empty when the base location is unknown
  PointMatrix points;
};

/// The discrete total dataset: an ordered list of fibres.
struct FibreBundleSample {
  std::vector<Fibre> fibres;

  std::size_t fibre_count() const { return fibres.size(); }
  BlockLayout layout() const;
  /// Base points stacked row-wise; throws if any fibre lacks one.
  PointMatrix base_points() const;
};

/// Sample on the unit tangent bundle whose fibre points are stored as unit
/// coefficient vectors in an estimated tangent basis: points = B_j c_{j,s}.
struct EmpiricalFibreSample {
  FibreBundleSample sample;
  std::vector<PointMatrix> coefficients;  // kappa_j x d per fibre
  std::vector<PcaBasis> bases;
};

enum class SamplingMode { Noiseless, Empirical };

struct SamplingConfig {
  std::size_t n_base = 800;
  std::size_t n_fibre = 24;
  int dim = 3;  // ambient dimension of the base sphere; only S^2 (dim = 3) is supported
  std::uint64_t seed = 1;
  SamplingMode mode = SamplingMode::Noiseless;
  double eps_pca = 0.0;
  std::size_t k_pca = 0;
  PcaKernel pca_kernel = PcaKernel::Epanechnikov;

  void validate() const;
};

/// Two-step sampling of UTS^2: uniform base points, then uniform unit tangent
/// directions at each base point.
FibreBundleSample sample_utm_noiseless(const SamplingConfig& cfg);

/// Two-step sampling where fibres live in local-PCA tangent estimates.
EmpiricalFibreSample sample_utm_empirical(const SamplingConfig& cfg);

/// Density hook for non-uniform two-step sampling by rejection. `base_density`
/// must be bounded by `base_bound` and `fibre_density(base, v)` by `fibre_bound`;
/// the densities are relative to the uniform measures on S^2 and on each fibre circle.
struct BundleDensity {
  std::function<double(const Eigen::Vector3d&)> base_density;
  double base_bound = 1.0;
  std::function<double(const Eigen::Vector3d&, const Eigen::Vector3d&)> fibre_density;
  double fibre_bound = 1.0;
};
FibreBundleSample sample_utm_rejection(const SamplingConfig& cfg, const BundleDensity& density);

}  // namespace hdm
