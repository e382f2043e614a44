#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hdm/knn.hpp"

namespace hdm {

/// Weight profiles on [0, 1] for local PCA; both vanish outside the unit interval.
enum class PcaKernel {
  Epanechnikov,       // 1 - u^2
  TruncatedGaussian,  // exp(-5 u^2)
};

double pca_kernel_value(PcaKernel kernel, double u);

struct PcaBasis {
  std::size_t base_index = 0;
  Eigen::MatrixXd basis;            // D x d, orthonormal columns
  Eigen::VectorXd singular_values;  // all min(D, k) values, nonincreasing
};

struct LocalPcaOptions {
  std::size_t k = 0;        // neighbors per point
  double eps_pca = 0.0;     // kernel scale; neighbors farther than sqrt(eps_pca) get zero weight
  PcaKernel kernel = PcaKernel::Epanechnikov;
  std::optional<int> dim;   // intrinsic dimension; estimated when empty
  double energy_threshold = 0.9;
};

std::vector<PcaBasis> local_pca_bases(const PointMatrix& points, const LocalPcaOptions& options);

/// Median (lower median) over points of the smallest m whose leading singular
/// values hold a fraction >= gamma of the squared energy.
int estimate_dimension(const std::vector<Eigen::VectorXd>& singular_values, double gamma);

/// Orthogonal matrix O_ji mapping coordinates in basis i to coordinates in basis j.
struct TransportEstimate {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  Eigen::MatrixXd O;
  bool degenerate = false;  // B_j^T B_i had a singular value < 1e-12; O is still deterministic
};

/// Polar factor of B_j^T B_i: the closest matrix in O(d) in Frobenius norm.
TransportEstimate align_bases(const PcaBasis& from, const PcaBasis& to);

std::vector<TransportEstimate> estimate_transports(
    const std::vector<PcaBasis>& bases,
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);

/// Largest principal angle (radians) between the column spans of two
/// orthonormal-column matrices of equal shape.
double principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace hdm
