#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hdm/clustering.hpp"
#include "hdm/eigensolver.hpp"
#include "hdm/experiments.hpp"
#include "hdm/kernels.hpp"
#include "hdm/sampling.hpp"
#include "hdm/spectral.hpp"

namespace hdm {

/// In-memory form of dataset.json. Blocks and edges refer to fibres by
/// position; the file refers to them by id.
struct DatasetManifest {
  int format_version = 1;
  std::vector<std::int64_t> ids;
  FibreBundleSample sample;
  std::vector<CorrespondenceBlock> blocks;
  std::optional<std::vector<BaseEdge>> edges;
};

constexpr int kManifestVersion = 1;

/// Ids 0..n-1, no blocks.
DatasetManifest manifest_from_sample(const FibreBundleSample& sample);

std::string write_manifest(const DatasetManifest& manifest);
/// Throws InvalidArgument / IndexOutOfRange / SizeMismatch / AsymmetricBlocks on malformed input.
DatasetManifest parse_manifest(std::string_view text);
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

/// Exact comparison of every stored value.
bool manifests_equal(const DatasetManifest& a, const DatasetManifest& b);

/// Euclidean distances between base points; empty when any fibre lacks a base.
Eigen::MatrixXd base_distance_matrix(const FibreBundleSample& sample);

struct BuildOptions {
  SamplingMode mode = SamplingMode::Noiseless;
  std::size_t k_base = 60;
  std::size_t k_fibre = 16;
  KernelSpec kernel;
  double alpha = 1.0;
  std::size_t k_pca = 60;
  double eps_pca = 0.3;
  PcaKernel pca_kernel = PcaKernel::TruncatedGaussian;
};

/// Manifests with correspondence blocks go through the block builder (base
/// neighbors k_base, bandwidth kernel.eps). Without blocks, fibre points are
/// treated as unit tangent vectors on S^2 and compared through exact transport
/// (noiseless) or through local-PCA coordinates and estimated transports (empirical).
HorizontalDiffusionMatrix build_from_manifest(const DatasetManifest& manifest, const BuildOptions& options);

void write_eigs_csv(std::ostream& os, const SpectralDecomposition& decomp);
void write_embedding_csv(std::ostream& os, const HdmCoordinates& coords);
void write_features_csv(std::ostream& os, const HbdmFeatures& features);
void write_segmentation_csv(std::ostream& os, const Segmentation& seg);
/// Two whitespace-separated columns (index, eigenvalue) for plotting.
void write_eigs_plot(std::ostream& os, const std::vector<double>& eigenvalues);

std::string report_json(const MultiplicityReport& report);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

}  // namespace hdm
