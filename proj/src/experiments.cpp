#include "hdm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hdm/error.hpp"
#include "hdm/knn.hpp"
#include "hdm/spectral.hpp"

namespace hdm {

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::Horizontal: return "horizontal";
    case Regime::Total: return "total";
    case Regime::Base: return "base";
    case Regime::Unclassified: return "unclassified";
  }
  return "unclassified";
}

Regime parse_regime(std::string_view name) {
  if (name == "horizontal") return Regime::Horizontal;
  if (name == "total") return Regime::Total;
  if (name == "base") return Regime::Base;
  throw Error(ErrorCode::InvalidArgument, "unknown regime '" + std::string(name) + "'");
}

std::vector<std::size_t> regime_signature(Regime regime) {
  switch (regime) {
    case Regime::Horizontal: return {1, 6, 13};
    case Regime::Total: return {1, 9, 25};
    case Regime::Base: return {1, 3, 5};
    case Regime::Unclassified: return {};
  }
  return {};
}

void So3Config::validate() const {
  if (n_base < 2 || n_fibre < 1) throw Error(ErrorCode::InvalidArgument, "need N_B >= 2 and N_F >= 1");
  if (k_base < 1 || k_base >= n_base) throw Error(ErrorCode::InvalidArgument, "need 1 <= K_B < N_B");
  if (k_fibre < 1 || k_fibre > n_fibre) throw Error(ErrorCode::InvalidArgument, "need 1 <= K_F <= N_F");
  KernelSpec{shape, eps, delta}.validate();
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
  if (n_eigs < 1 || static_cast<std::size_t>(n_eigs) > n_base * n_fibre)
    throw Error(ErrorCode::InvalidArgument, "n_eigs must lie in [1, kappa]");
  if (!(group_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "grouping tolerance must be positive");
  if (mode == SamplingMode::Empirical && (!(eps_pca > 0.0) || k_pca < 3))
    throw Error(ErrorCode::InvalidArgument, "empirical mode needs eps_pca > 0 and k_pca >= 3");
}

std::vector<std::string> so3_preset_names() {
  return {"desk", "desk-empirical", "paper-noiseless", "paper-empirical"};
}

So3Config so3_preset(std::string_view name, Regime regime) {
  So3Config cfg;
  double horizontal = 0.002, total = 0.07, base = 20.0;
  if (name == "desk") {
    // defaults
  } else if (name == "desk-empirical") {
    cfg.mode = SamplingMode::Empirical;
    total = 0.07;
  } else if (name == "paper-noiseless") {
    cfg.n_base = 2000;
    cfg.n_fibre = 50;
    cfg.k_base = 100;
    cfg.k_fibre = 50;
    cfg.eps = 0.2;
    total = 0.1;
  } else if (name == "paper-empirical") {
    cfg.mode = SamplingMode::Empirical;
    cfg.n_base = 4000;
    cfg.n_fibre = 100;
    cfg.k_base = 100;
    cfg.k_fibre = 100;
    cfg.eps = 0.2;
    cfg.k_pca = 100;
    cfg.eps_pca = 0.1;
    total = 0.1;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown preset '" + std::string(name) + "'");
  }
  switch (regime) {
    case Regime::Horizontal: cfg.delta = horizontal; break;
    case Regime::Total: cfg.delta = total; break;
    case Regime::Base: cfg.delta = base; break;
    case Regime::Unclassified: break;
  }
  return cfg;
}

std::vector<EigenGroup> group_eigenvalues(const std::vector<double>& evals, double rel_tol) {
  if (!(rel_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "rel_tol must be positive");
  std::vector<EigenGroup> groups;
  if (evals.empty()) return groups;
  std::vector<double> gaps;
  for (std::size_t i = 0; i + 1 < evals.size(); ++i) {
    if (evals[i + 1] < evals[i]) throw Error(ErrorCode::InvalidArgument, "eigenvalues must be ascending");
    gaps.push_back(evals[i + 1] - evals[i]);
  }
  double floor = 0.0;
  if (!gaps.empty()) {
    std::vector<double> sorted = gaps;
    const std::size_t mid = (sorted.size() - 1) / 2;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
    floor = sorted[mid];
  }
  groups.push_back({0, 1, 0.0});
  for (std::size_t i = 0; i + 1 < evals.size(); ++i) {
    if (gaps[i] > rel_tol * std::max(evals[i + 1], floor))
      groups.push_back({i + 1, 1, 0.0});
    else
      ++groups.back().size;
  }
  for (auto& g : groups) {
    double sum = 0.0;
    for (std::size_t i = g.first; i < g.first + g.size; ++i) sum += evals[i];
    g.mean = sum / static_cast<double>(g.size);
  }
  return groups;
}

int signature_score(const std::vector<EigenGroup>& groups, Regime target) {
  const auto sig = regime_signature(target);
  int score = 0;
  for (std::size_t g = 0; g < sig.size() && g < groups.size(); ++g) {
    if (groups[g].size != sig[g]) break;
    ++score;
  }
  return score;
}

Regime classify_regime(const std::vector<EigenGroup>& groups) {
  for (Regime r : {Regime::Horizontal, Regime::Total, Regime::Base})
    if (signature_score(groups, r) == 3) return r;
  return Regime::Unclassified;
}

double theta_star(double eps, double delta, std::size_t n_fibre, std::size_t n_base, int d) {
  const double x = std::pow(eps, d / 4.0) * std::pow(delta, (d - 1) / 4.0) *
                   std::sqrt(static_cast<double>(n_fibre) / static_cast<double>(n_base));
  return 1.0 - 1.0 / (1.0 + x);
}

So3Build build_so3_laplacian(const So3Config& cfg) {
  cfg.validate();
  SamplingConfig scfg;
  scfg.n_base = cfg.n_base;
  scfg.n_fibre = cfg.n_fibre;
  scfg.seed = cfg.seed;
  scfg.mode = cfg.mode;
  scfg.eps_pca = cfg.eps_pca;
  scfg.k_pca = cfg.k_pca;
  scfg.pca_kernel = cfg.pca_kernel;
  const KernelSpec spec{cfg.shape, cfg.eps, cfg.delta};

  if (cfg.mode == SamplingMode::Noiseless) {
    FibreBundleSample sample = sample_utm_noiseless(scfg);
    HorizontalDiffusionMatrix w = build_w_noiseless(sample, cfg.k_base, cfg.k_fibre, spec);
    LaplacianBundle lap = horizontal_laplacians(alpha_normalize(std::move(w), cfg.alpha), cfg.alpha);
    return {std::move(sample), std::move(lap)};
  }
  EmpiricalFibreSample sample = sample_utm_empirical(scfg);
  const auto edges = mutual_knn_edges(NeighborIndex(sample.sample.base_points()), cfg.k_base);
  const auto transports = estimate_transports(sample.bases, edges);
  HorizontalDiffusionMatrix w = build_w_empirical(sample, transports, cfg.k_base, cfg.k_fibre, spec);
  LaplacianBundle lap = horizontal_laplacians(alpha_normalize(std::move(w), cfg.alpha), cfg.alpha);
  return {std::move(sample.sample), std::move(lap)};
}

MultiplicityReport analyze_spectrum(const So3Config& cfg, const LaplacianBundle& lap) {
  EigOptions opt;
  opt.tol = cfg.eig_tol;
  opt.seed = cfg.seed;
  const SpectralDecomposition decomp = laplacian_spectrum(lap, cfg.n_eigs, opt);

  MultiplicityReport report;
  report.config = cfg;
  report.kappa = lap.size();
  report.nonzeros = lap.w().nonzeros();
  report.eigenvalues.assign(decomp.eigenvalues.data(), decomp.eigenvalues.data() + decomp.eigenvalues.size());
  report.residuals.assign(decomp.residuals.data(), decomp.residuals.data() + decomp.residuals.size());
  report.groups = group_eigenvalues(report.eigenvalues, cfg.group_tol);
  if (report.groups.size() > 1) {
    const double unit = report.groups[1].mean;
    for (std::size_t g = 1; g < report.groups.size(); ++g) report.ratios.push_back(report.groups[g].mean / unit);
  }
  report.regime = classify_regime(report.groups);
  report.theta_star = theta_star(cfg.eps, cfg.delta, cfg.n_fibre, cfg.n_base);
  report.variance_scale = 1.0 / (std::sqrt(static_cast<double>(cfg.n_base)) * std::pow(cfg.eps, 0.5));
  return report;
}

MultiplicityReport run_so3_experiment(const So3Config& cfg) {
  const So3Build build = build_so3_laplacian(cfg);
  return analyze_spectrum(cfg, build.laplacian);
}

RatioCheck check_ratios(const std::vector<double>& measured, const std::vector<double>& expected, double tol) {
  RatioCheck out;
  out.measured = measured;
  out.expected = expected;
  out.tol = tol;
  out.pass = measured.size() >= expected.size();
  for (std::size_t i = 0; out.pass && i < expected.size(); ++i)
    out.pass = std::abs(measured[i] - expected[i]) <= tol * std::abs(expected[i]);
  return out;
}

RatioCheck check_base_ratios(const MultiplicityReport& report, double tol) {
  if (report.regime != Regime::Base)
    throw Error(ErrorCode::RegimeMismatch,
                "base-ratio check needs a base-regime report, got " + std::string(to_string(report.regime)));
  // l(l+1) = 2, 6, 12 normalized by 2.
  const std::vector<double> expected{1.0, 3.0, 6.0};
  std::vector<double> measured(report.ratios.begin(),
                               report.ratios.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(3, report.ratios.size())));
  return check_ratios(measured, expected, tol);
}

LiftFit lift_consistency_check(const FibreBundleSample& sample, const LaplacianBundle& lap,
                               const std::function<double(const Eigen::Vector3d&)>& g,
                               const std::function<double(const Eigen::Vector3d&)>& laplacian_g, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  const BlockLayout layout = sample.layout();
  if (layout.total != lap.size()) throw Error(ErrorCode::SizeMismatch, "sample and Laplacian differ in size");
  const auto n = static_cast<Eigen::Index>(layout.total);
  Eigen::VectorXd lifted(n), predictor(n);
  for (std::size_t j = 0; j < layout.fibre_count(); ++j) {
    const Eigen::Vector3d base = sample.fibres[j].base;
    lifted.segment(static_cast<Eigen::Index>(layout.offsets[j]), static_cast<Eigen::Index>(layout.sizes[j]))
        .setConstant(g(base));
    predictor.segment(static_cast<Eigen::Index>(layout.offsets[j]), static_cast<Eigen::Index>(layout.sizes[j]))
        .setConstant(laplacian_g(base));
  }
  const Eigen::VectorXd u = (lap.apply_random_walk(lifted) - lifted) / eps;

  LiftFit fit;
  const double mx = predictor.mean(), my = u.mean();
  const Eigen::VectorXd dx = predictor.array() - mx, dy = u.array() - my;
  const double sxx = dx.squaredNorm(), syy = dy.squaredNorm(), sxy = dx.dot(dy);
  if (sxx <= 0.0) {
    fit.intercept = my;
    return fit;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

std::vector<CalibrationPoint> calibrate_delta(So3Config cfg, Regime target, const std::vector<double>& deltas) {
  std::vector<CalibrationPoint> out;
  for (double d : deltas) {
    cfg.delta = d;
    const MultiplicityReport r = run_so3_experiment(cfg);
    CalibrationPoint p;
    p.delta = d;
    for (const auto& g : r.groups) p.group_sizes.push_back(g.size);
    p.score = signature_score(r.groups, target);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace hdm
