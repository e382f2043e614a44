#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hdm/kernels.hpp"
#include "hdm/laplacian.hpp"
#include "hdm/localpca.hpp"
#include "hdm/sampling.hpp"

namespace hdm {

/// Which limiting operator a spectrum looks like. Leading multiplicities:
/// horizontal Laplacian of SO(3) (1, 6, 13), full Laplacian of SO(3) (1, 9, 25),
/// Laplacian of the base S^2 (1, 3, 5).
enum class Regime { Horizontal, Total, Base, Unclassified };

std::string_view to_string(Regime regime);
Regime parse_regime(std::string_view name);
/// Leading group sizes characterizing a regime (empty for Unclassified).
std::vector<std::size_t> regime_signature(Regime regime);

struct So3Config {
  SamplingMode mode = SamplingMode::Noiseless;
  std::size_t n_base = 800;
  std::size_t n_fibre = 24;
  std::size_t k_base = 60;
  std::size_t k_fibre = 16;
  double eps = 0.1;
  double delta = 0.002;
  double alpha = 1.0;
  KernelShape shape = KernelShape::Gaussian;
  Eigen::Index n_eigs = 36;
  double group_tol = 0.1;
  double eps_pca = 0.3;
  std::size_t k_pca = 60;
  PcaKernel pca_kernel = PcaKernel::TruncatedGaussian;
  std::uint64_t seed = 20240601;
  double eig_tol = 1e-9;

  void validate() const;
};

/// Named presets: "desk", "desk-empirical", "paper-noiseless", "paper-empirical".
/// delta is taken from the preset's value for `regime`.
So3Config so3_preset(std::string_view name, Regime regime);
std::vector<std::string> so3_preset_names();

struct EigenGroup {
  std::size_t first = 0;
  std::size_t size = 0;
  double mean = 0.0;
};

/// Greedy gap grouping of an ascending list: a new group starts when
/// lambda_{i+1} - lambda_i > rel_tol * max(lambda_{i+1}, median gap).
std::vector<EigenGroup> group_eigenvalues(const std::vector<double>& evals, double rel_tol);

/// Regime whose signature matches the leading group sizes, else Unclassified.
Regime classify_regime(const std::vector<EigenGroup>& groups);

/// Number of leading group sizes agreeing with the regime signature (0 to 3).
int signature_score(const std::vector<EigenGroup>& groups, Regime target);

/// Balance factor 1 - 1 / (1 + eps^{d/4} delta^{(d-1)/4} sqrt(N_F / N_B)).
double theta_star(double eps, double delta, std::size_t n_fibre, std::size_t n_base, int d = 2);

struct MultiplicityReport {
  So3Config config;
  std::vector<double> eigenvalues;  // ascending, of I - D_alpha^{-1} W_alpha
  std::vector<double> residuals;
  std::vector<EigenGroup> groups;
  std::vector<double> ratios;       // group means over the first nonzero group mean
  double theta_star = 0.0;
  double variance_scale = 0.0;      // N_B^{-1/2} eps^{-d/4}
  Regime regime = Regime::Unclassified;
  std::size_t kappa = 0;
  std::size_t nonzeros = 0;
};

/// Sample, build and normalize the SO(3) horizontal diffusion matrix.
struct So3Build {
  FibreBundleSample sample;
  LaplacianBundle laplacian;
};
So3Build build_so3_laplacian(const So3Config& cfg);

MultiplicityReport run_so3_experiment(const So3Config& cfg);
/// Report for an already assembled build (grouping, ratios, diagnostics).
MultiplicityReport analyze_spectrum(const So3Config& cfg, const LaplacianBundle& lap);

struct RatioCheck {
  bool pass = false;
  std::vector<double> measured;
  std::vector<double> expected;
  double tol = 0.1;
};

/// Compares measured ratios with targets (relative tolerance), position by position.
RatioCheck check_ratios(const std::vector<double>& measured, const std::vector<double>& expected, double tol);

/// Base-regime check: the first three nonzero group ratios against the S^2
/// spectrum l(l+1) normalized by its first value, i.e. (1, 3, 6).
/// Throws RegimeMismatch unless the report is in the base regime.
RatioCheck check_base_ratios(const MultiplicityReport& report, double tol = 0.1);

struct LiftFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Regresses u = (D^{-1} W g_bar - g_bar) / eps against (Laplacian of g) at the
/// base points, where g_bar is g lifted to be constant along fibres.
LiftFit lift_consistency_check(const FibreBundleSample& sample, const LaplacianBundle& lap,
                               const std::function<double(const Eigen::Vector3d&)>& g,
                               const std::function<double(const Eigen::Vector3d&)>& laplacian_g, double eps);

struct CalibrationPoint {
  double delta = 0.0;
  std::vector<std::size_t> group_sizes;
  int score = 0;
};

/// Runs the experiment for each delta and scores the leading group sizes
/// against the target regime's signature.
std::vector<CalibrationPoint> calibrate_delta(So3Config cfg, Regime target, const std::vector<double>& deltas);

}  // namespace hdm
