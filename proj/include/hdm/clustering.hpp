#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "hdm/kernels.hpp"
#include "hdm/layout.hpp"
#include "hdm/sampling.hpp"
#include "hdm/spectral.hpp"

namespace hdm {

struct KMeansOptions {
  int k = 2;
  std::uint64_t seed = 1;
  int restarts = 8;
  double tol = 1e-9;  // relative change of the within-cluster sum of squares
  int max_iter = 500;
};

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centers;  // k x dim
  double wcss = 0.0;
};

/// Lloyd iterations from k-means++ seeds; best of `restarts` by WCSS, ties to
/// the lower restart index. Deterministic for a fixed seed.
KMeansResult kmeans(const Eigen::MatrixXd& points, const KMeansOptions& options);

struct Segmentation {
  std::vector<int> labels;  // one per point, in layout order
  int k = 0;
  BlockLayout layout;
  Eigen::MatrixXi histograms;  // fibre count x k

  int label(std::size_t fibre, std::size_t point) const;
};

Segmentation spectral_segmentation(const HdmCoordinates& coords, const KMeansOptions& options);

/// Spectrum of L_*, embedding and k-means in one call.
struct SegmentOptions {
  Eigen::Index n_eigs = 3;
  double t = 1.0;
  SpectrumMode mode = SpectrumMode::Diffusion;
  KMeansOptions kmeans;
  EigOptions eig;
};

Segmentation segment_bundle(const LaplacianBundle& lap, const SegmentOptions& options);

struct LabelMatch {
  double agreement = 0.0;
  std::vector<int> permutation;  // predicted label -> ground-truth label
};

/// Best agreement over all bijections of k <= 10 labels (exhaustive search).
LabelMatch match_labels(const std::vector<int>& predicted, const std::vector<int>& truth, int k);
double label_consistency(const std::vector<int>& predicted, const std::vector<int>& truth, int k);

/// Agreement inside each fibre under one global label permutation.
std::vector<double> per_fibre_consistency(const Segmentation& seg, const std::vector<int>& truth);

/// Synthetic consistent-segmentation benchmark: fibres are circles whose points
/// sit on `arcs` arcs separated by gaps, each fibre stored in its own rotated
/// coordinate frame; correspondences compare points through the true relative
/// rotation perturbed by small noise.
struct CircleBundleConfig {
  std::size_t n_fibres = 40;
  std::size_t n_points = 60;
  int arcs = 3;
  double gap = 0.35;             // radians between consecutive arcs
  double rotation_noise = 0.03;  // radians, std dev of correspondence misalignment
  double fibre_delta = 0.02;     // kernel bandwidth on aligned fibre points
  std::size_t fibre_knn = 6;
  std::size_t base_neighbors = 8;
  double eps_base = 0.5;
  std::uint64_t seed = 3;
};

struct CircleBundle {
  FibreBundleSample sample;  // base points on the unit circle in R^2, fibre points in R^2
  std::vector<CorrespondenceBlock> blocks;
  Eigen::MatrixXd base_dists;
  std::vector<int> truth;  // ground-truth arc per point
};

CircleBundle make_circle_bundle(const CircleBundleConfig& cfg);

}  // namespace hdm
