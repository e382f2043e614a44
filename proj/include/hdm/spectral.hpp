#pragma once

#include <string_view>

#include <Eigen/Dense>

#include "hdm/eigensolver.hpp"
#include "hdm/laplacian.hpp"
#include "hdm/layout.hpp"

namespace hdm {

/// How eigenvalues of L_* turn into embedding weights.
enum class SpectrumMode {
  LaplacianLiteral,  // weight lambda^t on the ascending eigenvalues of L_*
  Diffusion,         // weight mu^t with mu = 1 - lambda (normalized adjacency)
};

SpectrumMode parse_spectrum_mode(std::string_view name);
std::string_view to_string(SpectrumMode mode);

/// The k smallest eigenpairs of L_*, computed as the largest eigenpairs of
/// D^{-1/2} W D^{-1/2} and mapped back with lambda = 1 - mu.
SpectralDecomposition laplacian_spectrum(const LaplacianBundle& lap, Eigen::Index k, EigOptions options = {});

/// Default truncation ceil(sqrt(kappa)).
Eigen::Index default_truncation(std::size_t kappa);

/// Per-point horizontal diffusion map coordinates; row p holds
/// (w_1^t v_1(p), ..., w_{k-1}^t v_{k-1}(p)). The 0-th eigenpair is excluded.
struct HdmCoordinates {
  Eigen::MatrixXd coords;  // kappa x (k - 1)
  double t = 1.0;
  BlockLayout layout;
};

/// Per-fibre horizontal base diffusion map features; row j holds the k^2 entries
/// w_l^{t/2} w_m^{t/2} <v_l[j], v_m[j]> (row-major in (l, m)).
struct HbdmFeatures {
  Eigen::MatrixXd features;  // fibre count x k^2
  double t = 1.0;
  Eigen::Index k = 0;
};

HdmCoordinates hdm_coords(const SpectralDecomposition& decomp, const BlockLayout& layout, double t,
                          Eigen::Index k, SpectrumMode mode = SpectrumMode::LaplacianLiteral);

HbdmFeatures hbdm_features(const SpectralDecomposition& decomp, const BlockLayout& layout, double t,
                           Eigen::Index k, SpectrumMode mode = SpectrumMode::LaplacianLiteral);

/// Horizontal diffusion distance between points p and q.
double hdd(const HdmCoordinates& coords, std::size_t p, std::size_t q);

/// Horizontal base diffusion distance between fibres i and j (direct norm).
double hbdd(const HbdmFeatures& features, std::size_t i, std::size_t j);

/// The same distance via sqrt(<V_i,V_i> + <V_j,V_j> - 2<V_i,V_j>).
double hbdd_expanded(const HbdmFeatures& features, std::size_t i, std::size_t j);

/// Frobenius norm of block (i, j) of the literal t-th power of a dense
/// symmetric matrix. Independent oracle for the HBDM inner products;
/// throws ScaleTooLarge above 512 rows.
double block_power_frobenius(const Eigen::MatrixXd& matrix, const BlockLayout& layout, int t, std::size_t i,
                             std::size_t j);

}  // namespace hdm
