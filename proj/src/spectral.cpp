#include "hdm/spectral.hpp"

#include <cmath>
#include <string>

#include "hdm/error.hpp"

namespace hdm {

SpectrumMode parse_spectrum_mode(std::string_view name) {
  if (name == "laplacian-literal") return SpectrumMode::LaplacianLiteral;
  if (name == "diffusion") return SpectrumMode::Diffusion;
  throw Error(ErrorCode::InvalidArgument, "unknown spectrum mode '" + std::string(name) + "'");
}

std::string_view to_string(SpectrumMode mode) {
  return mode == SpectrumMode::Diffusion ? "diffusion" : "laplacian-literal";
}

SpectralDecomposition laplacian_spectrum(const LaplacianBundle& lap, Eigen::Index k, EigOptions options) {
  options.k = k;
  options.which = Which::Largest;
  SymmetricOperator op{static_cast<Eigen::Index>(lap.size()),
                       [&lap](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = lap.apply_normalized_adjacency(x); }};
  SpectralDecomposition d = eig_sym(op, options);
  // lambda = 1 - mu reverses the order.
  const Eigen::Index n = d.eigenvalues.size();
  SpectralDecomposition out = d;
  for (Eigen::Index c = 0; c < n; ++c) {
    out.eigenvalues[c] = 1.0 - d.eigenvalues[n - 1 - c];
    out.eigenvectors.col(c) = d.eigenvectors.col(n - 1 - c);
    out.residuals[c] = d.residuals[n - 1 - c];
  }
  return out;
}

Eigen::Index default_truncation(std::size_t kappa) {
  return static_cast<Eigen::Index>(std::ceil(std::sqrt(static_cast<double>(kappa))));
}

namespace {

constexpr double kClamp = 1e-12;

// Per-eigenpair weight raised to `power`. Negative diffusion eigenvalues are
// only meaningful under integer powers.
Eigen::VectorXd spectral_weights(const SpectralDecomposition& decomp, Eigen::Index k, double power,
                                 SpectrumMode mode) {
  if (!(power > 0.0)) throw Error(ErrorCode::InvalidArgument, "diffusion time must be positive");
  if (k < 1 || k > decomp.size()) throw Error(ErrorCode::InvalidArgument, "k exceeds the available eigenpairs");
  Eigen::VectorXd w(k);
  for (Eigen::Index l = 0; l < k; ++l) {
    const double lambda = decomp.eigenvalues[l];
    double base = 0.0;
    if (mode == SpectrumMode::LaplacianLiteral) {
      if (lambda < -kClamp)
        throw Error(ErrorCode::NegativeEigenvalue, "eigenvalue " + std::to_string(lambda) + " below clamp tolerance");
      base = std::max(lambda, 0.0);
    } else {
      base = 1.0 - lambda;
      if (base < 0.0 && std::floor(power) != power)
        throw Error(ErrorCode::InvalidArgument, "negative diffusion eigenvalue needs an integer power");
    }
    w[l] = std::pow(base, power);
  }
  return w;
}

}  // namespace

HdmCoordinates hdm_coords(const SpectralDecomposition& decomp, const BlockLayout& layout, double t,
                          Eigen::Index k, SpectrumMode mode) {
  if (static_cast<std::size_t>(decomp.eigenvectors.rows()) != layout.total)
    throw Error(ErrorCode::SizeMismatch, "eigenvector length differs from the layout");
  const Eigen::VectorXd w = spectral_weights(decomp, k, t, mode);
  HdmCoordinates out;
  out.t = t;
  out.layout = layout;
  out.coords = decomp.eigenvectors.middleCols(1, k - 1) * w.tail(k - 1).asDiagonal();
  return out;
}

HbdmFeatures hbdm_features(const SpectralDecomposition& decomp, const BlockLayout& layout, double t,
                           Eigen::Index k, SpectrumMode mode) {
  if (static_cast<std::size_t>(decomp.eigenvectors.rows()) != layout.total)
    throw Error(ErrorCode::SizeMismatch, "eigenvector length differs from the layout");
  const Eigen::VectorXd w = spectral_weights(decomp, k, t / 2.0, mode);
  HbdmFeatures out;
  out.t = t;
  out.k = k;
  out.features.resize(static_cast<Eigen::Index>(layout.fibre_count()), k * k);
  const Eigen::MatrixXd weighted = decomp.eigenvectors.leftCols(k) * w.asDiagonal();
  for (std::size_t j = 0; j < layout.fibre_count(); ++j) {
    const auto seg = weighted.middleRows(static_cast<Eigen::Index>(layout.offsets[j]),
                                         static_cast<Eigen::Index>(layout.sizes[j]));
    const Eigen::MatrixXd gram = seg.transpose() * seg;  // k x k
    for (Eigen::Index l = 0; l < k; ++l)
      out.features.row(static_cast<Eigen::Index>(j)).segment(l * k, k) = gram.row(l);
  }
  return out;
}

double hdd(const HdmCoordinates& coords, std::size_t p, std::size_t q) {
  const auto n = static_cast<std::size_t>(coords.coords.rows());
  if (p >= n || q >= n) throw Error(ErrorCode::IndexOutOfRange, "point index out of range");
  return (coords.coords.row(static_cast<Eigen::Index>(p)) - coords.coords.row(static_cast<Eigen::Index>(q))).norm();
}

double hbdd(const HbdmFeatures& features, std::size_t i, std::size_t j) {
  const auto n = static_cast<std::size_t>(features.features.rows());
  if (i >= n || j >= n) throw Error(ErrorCode::IndexOutOfRange, "fibre index out of range");
  return (features.features.row(static_cast<Eigen::Index>(i)) - features.features.row(static_cast<Eigen::Index>(j)))
      .norm();
}

double hbdd_expanded(const HbdmFeatures& features, std::size_t i, std::size_t j) {
  const auto n = static_cast<std::size_t>(features.features.rows());
  if (i >= n || j >= n) throw Error(ErrorCode::IndexOutOfRange, "fibre index out of range");
  const auto vi = features.features.row(static_cast<Eigen::Index>(i));
  const auto vj = features.features.row(static_cast<Eigen::Index>(j));
  const double sq = vi.dot(vi) + vj.dot(vj) - 2.0 * vi.dot(vj);
  return std::sqrt(std::max(sq, 0.0));
}

double block_power_frobenius(const Eigen::MatrixXd& matrix, const BlockLayout& layout, int t, std::size_t i,
                             std::size_t j) {
  if (matrix.rows() > 512) throw Error(ErrorCode::ScaleTooLarge, "dense power oracle is limited to 512 rows");
  if (matrix.rows() != matrix.cols() || static_cast<std::size_t>(matrix.rows()) != layout.total)
    throw Error(ErrorCode::SizeMismatch, "matrix does not match the layout");
  if (t < 1) throw Error(ErrorCode::InvalidArgument, "power must be a positive integer");
  if (i >= layout.fibre_count() || j >= layout.fibre_count())
    throw Error(ErrorCode::IndexOutOfRange, "fibre index out of range");
  Eigen::MatrixXd power = matrix;
  for (int s = 1; s < t; ++s) power = (power * matrix).eval();
  return power
      .block(static_cast<Eigen::Index>(layout.offsets[i]), static_cast<Eigen::Index>(layout.offsets[j]),
             static_cast<Eigen::Index>(layout.sizes[i]), static_cast<Eigen::Index>(layout.sizes[j]))
      .norm();
}

}  // namespace hdm
