// Command-line front end: sample, build, eigs, embed, dist, so3, segment, selftest.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hdm/clustering.hpp"
#include "hdm/error.hpp"
#include "hdm/experiments.hpp"
#include "hdm/io.hpp"
#include "hdm/laplacian.hpp"
#include "hdm/parallel.hpp"
#include "hdm/selftest.hpp"
#include "hdm/spectral.hpp"

namespace {

using namespace hdm;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

struct Common {
  std::string input = "dataset.json";
  std::string output;
  std::string mode = "noiseless";
  std::string spectrum = "laplacian-literal";
  std::string shape = "gaussian";
  double eps = 0.1;
  double delta = 0.002;
  double alpha = 1.0;
  double t = 1.0;
  Eigen::Index k = 0;
  std::size_t kb = 60;
  std::size_t kf = 16;
  std::size_t nb = 800;
  std::size_t nf = 24;
  std::uint64_t seed = 1;
  std::size_t k_pca = 60;
  double eps_pca = 0.3;
  double eig_tol = 1e-10;
};

SamplingMode parse_mode(const std::string& s) {
  if (s == "noiseless") return SamplingMode::Noiseless;
  if (s == "empirical") return SamplingMode::Empirical;
  throw Error(ErrorCode::InvalidArgument, "--mode must be noiseless or empirical, got '" + s + "'");
}

KernelShape parse_shape(const std::string& s) {
  if (s == "gaussian") return KernelShape::Gaussian;
  if (s == "truncated-gaussian") return KernelShape::TruncatedGaussian;
  if (s == "epanechnikov") return KernelShape::EpanechnikovProduct;
  throw Error(ErrorCode::InvalidArgument, "--shape must be gaussian, truncated-gaussian or epanechnikov");
}

BuildOptions build_options(const Common& c) {
  BuildOptions b;
  b.mode = parse_mode(c.mode);
  b.k_base = c.kb;
  b.k_fibre = c.kf;
  b.kernel = {parse_shape(c.shape), c.eps, c.delta};
  b.alpha = c.alpha;
  b.k_pca = c.k_pca;
  b.eps_pca = c.eps_pca;
  return b;
}

LaplacianBundle laplacian_from(const Common& c) {
  const DatasetManifest m = load_manifest(c.input);
  const BuildOptions b = build_options(c);
  return horizontal_laplacians(alpha_normalize(build_from_manifest(m, b), b.alpha), b.alpha);
}

EigOptions eig_options(const Common& c) {
  EigOptions o;
  o.seed = c.seed;
  o.tol = c.eig_tol;
  return o;
}

Eigen::Index eig_count(const Common& c, std::size_t kappa) {
  return c.k > 0 ? c.k : default_truncation(kappa);
}

// Writes to the file named by `path`, or stdout when it is empty or "-".
template <class F>
void emit(const std::string& path, F&& writer) {
  if (path.empty() || path == "-") {
    writer(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  writer(out);
}

void add_build_flags(CLI::App* app, Common& c) {
  app->add_option("-i,--input", c.input, "dataset manifest")->capture_default_str();
  app->add_option("--mode", c.mode, "noiseless | empirical")->capture_default_str();
  app->add_option("--shape", c.shape, "gaussian | truncated-gaussian | epanechnikov")->capture_default_str();
  app->add_option("--eps", c.eps, "base bandwidth")->capture_default_str();
  app->add_option("--delta", c.delta, "fibre bandwidth (inf allowed)")->capture_default_str();
  app->add_option("--alpha", c.alpha, "density normalization exponent")->capture_default_str();
  app->add_option("--kb", c.kb, "base nearest neighbors")->capture_default_str();
  app->add_option("--kf", c.kf, "fibre nearest neighbors")->capture_default_str();
  app->add_option("--k-pca", c.k_pca, "local PCA neighbors (empirical mode)")->capture_default_str();
  app->add_option("--eps-pca", c.eps_pca, "local PCA bandwidth (empirical mode)")->capture_default_str();
}

void add_spectral_flags(CLI::App* app, Common& c) {
  app->add_option("--k", c.k, "number of eigenpairs (default ceil(sqrt(kappa)))");
  app->add_option("--t", c.t, "diffusion time")->capture_default_str();
  app->add_option("--spectrum", c.spectrum, "laplacian-literal | diffusion")->capture_default_str();
  app->add_option("--seed", c.seed, "solver start vector seed")->capture_default_str();
  app->add_option("--eig-tol", c.eig_tol, "eigensolver residual tolerance")->capture_default_str();
}

std::vector<std::pair<std::size_t, std::size_t>> parse_pairs(const std::string& text) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--pairs expects a:b,c:d");
    try {
      out.emplace_back(std::stoull(item.substr(0, colon)), std::stoull(item.substr(colon + 1)));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "--pairs expects nonnegative integers, got '" + item + "'");
    }
  }
  return out;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "expected a comma-separated list of numbers, got '" + item + "'");
    }
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Horizontal diffusion maps on fibre bundles"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: HDM_THREADS or hardware)");

  Common c;

  auto* sample = app.add_subcommand("sample", "sample the unit tangent bundle of S^2 into a manifest");
  sample->add_option("--nb", c.nb, "base points")->capture_default_str();
  sample->add_option("--nf", c.nf, "points per fibre")->capture_default_str();
  sample->add_option("--seed", c.seed, "sampling seed")->capture_default_str();
  sample->add_option("--mode", c.mode, "noiseless | empirical")->capture_default_str();
  sample->add_option("--k-pca", c.k_pca, "local PCA neighbors (empirical)")->capture_default_str();
  sample->add_option("--eps-pca", c.eps_pca, "local PCA bandwidth (empirical)")->capture_default_str();
  sample->add_option("-o,--output", c.output, "manifest path (default stdout)");

  auto* build = app.add_subcommand("build", "assemble W_alpha and write it as sparse triplets");
  add_build_flags(build, c);
  build->add_option("-o,--output", c.output, "triplet file (default stdout)");

  auto* eigs = app.add_subcommand("eigs", "smallest eigenvalues of L_* as CSV");
  add_build_flags(eigs, c);
  add_spectral_flags(eigs, c);
  std::string plot;
  eigs->add_option("-o,--output", c.output, "eigs.csv path (default stdout)");
  eigs->add_option("--plot", plot, "also write a two-column eigenvalue file");

  auto* embed = app.add_subcommand("embed", "HDM coordinates and HBDM features as CSV");
  add_build_flags(embed, c);
  add_spectral_flags(embed, c);
  std::string features_path;
  embed->add_option("-o,--output", c.output, "embedding.csv path (default stdout)");
  embed->add_option("--features", features_path, "also write per-fibre features.csv");

  auto* dist = app.add_subcommand("dist", "HBDD between fibres or HDD between points");
  add_build_flags(dist, c);
  add_spectral_flags(dist, c);
  std::string kind = "hbdd", pairs;
  dist->add_option("--kind", kind, "hbdd (fibre pairs) | hdd (point pairs)")->capture_default_str();
  dist->add_option("--pairs", pairs, "a:b,c:d (default: all fibre pairs for hbdd)");
  dist->add_option("-o,--output", c.output, "CSV path (default stdout)");

  auto* so3 = app.add_subcommand("so3", "SO(3) multiplicity experiment");
  std::string preset = "desk", regime = "horizontal", calibrate, plot_so3;
  std::optional<double> delta, eps, alpha;
  std::optional<std::size_t> kb, kf, nb, nf;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  so3->add_option("--preset", preset, "desk | desk-empirical | paper-noiseless | paper-empirical")->capture_default_str();
  so3->add_option("--regime", regime, "horizontal | total | base (selects the preset delta)")->capture_default_str();
  so3->add_option("--delta", delta, "override delta");
  so3->add_option("--eps", eps, "override eps");
  so3->add_option("--alpha", alpha, "override alpha");
  so3->add_option("--kb", kb, "override K_B");
  so3->add_option("--kf", kf, "override K_F");
  so3->add_option("--nb", nb, "override N_B");
  so3->add_option("--nf", nf, "override N_F");
  so3->add_option("--seed", seed, "override seed");
  so3->add_option("--mode", mode, "override sampling mode");
  so3->add_option("--calibrate", calibrate, "comma-separated deltas to scan against --regime");
  so3->add_option("-o,--output", c.output, "report.json path (default stdout)");
  so3->add_option("--plot", plot_so3, "also write a two-column eigenvalue file");

  auto* segment = app.add_subcommand("segment", "consistent segmentation by spectral clustering");
  int clusters = 3, restarts = 8;
  bool synthetic = false;
  std::size_t synthetic_fibres = 40, synthetic_points = 60;
  segment->add_option("-i,--input", c.input, "manifest with correspondence blocks")->capture_default_str();
  segment->add_flag("--synthetic", synthetic, "use the built-in circle bundle instead of a manifest");
  segment->add_option("--nb", synthetic_fibres, "synthetic fibres")->capture_default_str();
  segment->add_option("--nf", synthetic_points, "synthetic points per fibre")->capture_default_str();
  segment->add_option("--kb", c.kb, "base nearest neighbors")->capture_default_str();
  segment->add_option("--eps", c.eps, "base bandwidth")->capture_default_str();
  segment->add_option("--alpha", c.alpha, "density normalization exponent")->capture_default_str();
  segment->add_option("--clusters", clusters, "cluster count")->capture_default_str();
  segment->add_option("--restarts", restarts, "k-means restarts")->capture_default_str();
  segment->add_option("--k", c.k, "eigenpairs used for the embedding")->capture_default_str();
  segment->add_option("--t", c.t, "diffusion time")->capture_default_str();
  segment->add_option("--spectrum", c.spectrum, "laplacian-literal | diffusion");
  segment->add_option("--seed", c.seed, "k-means and synthetic seed")->capture_default_str();
  segment->add_option("-o,--output", c.output, "segmentation.csv path (default stdout)");

  auto* selftest = app.add_subcommand("selftest", "run the built-in invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  if (threads > 0) set_thread_count(static_cast<unsigned>(threads));

  if (*sample) {
    SamplingConfig cfg;
    cfg.n_base = c.nb;
    cfg.n_fibre = c.nf;
    cfg.seed = c.seed;
    cfg.mode = parse_mode(c.mode);
    cfg.k_pca = c.k_pca;
    cfg.eps_pca = c.eps_pca;
    const FibreBundleSample s =
        cfg.mode == SamplingMode::Noiseless ? sample_utm_noiseless(cfg) : sample_utm_empirical(cfg).sample;
    const std::string text = write_manifest(manifest_from_sample(s));
    emit(c.output, [&](std::ostream& os) { os << text; });
  } else if (*build) {
    const LaplacianBundle lap = laplacian_from(c);
    emit(c.output, [&](std::ostream& os) { write_triplets(os, lap.w().to_sparse()); });
  } else if (*eigs) {
    const LaplacianBundle lap = laplacian_from(c);
    const auto d = laplacian_spectrum(lap, eig_count(c, lap.size()), eig_options(c));
    emit(c.output, [&](std::ostream& os) { write_eigs_csv(os, d); });
    if (!plot.empty()) {
      std::vector<double> ev(d.eigenvalues.data(), d.eigenvalues.data() + d.eigenvalues.size());
      emit(plot, [&](std::ostream& os) { write_eigs_plot(os, ev); });
    }
  } else if (*embed || *dist) {
    const LaplacianBundle lap = laplacian_from(c);
    const Eigen::Index k = eig_count(c, lap.size());
    const auto d = laplacian_spectrum(lap, k, eig_options(c));
    const SpectrumMode sm = parse_spectrum_mode(c.spectrum);
    const BlockLayout& layout = lap.w().layout();
    if (*embed) {
      const auto coords = hdm_coords(d, layout, c.t, k, sm);
      emit(c.output, [&](std::ostream& os) { write_embedding_csv(os, coords); });
      if (!features_path.empty()) {
        const auto f = hbdm_features(d, layout, c.t, k, sm);
        emit(features_path, [&](std::ostream& os) { write_features_csv(os, f); });
      }
    } else {
      if (kind != "hbdd" && kind != "hdd") throw Error(ErrorCode::InvalidArgument, "--kind must be hbdd or hdd");
      auto list = parse_pairs(pairs);
      if (list.empty()) {
        if (kind == "hdd") throw Error(ErrorCode::InvalidArgument, "--kind hdd needs --pairs");
        for (std::size_t i = 0; i < layout.fibre_count(); ++i)
          for (std::size_t j = i + 1; j < layout.fibre_count(); ++j) list.emplace_back(i, j);
      }
      std::ostringstream out;
      out << "a,b," << kind << '\n';
      out.precision(17);
      if (kind == "hbdd") {
        const auto f = hbdm_features(d, layout, c.t, k, sm);
        for (auto [a, b] : list) out << a << ',' << b << ',' << hbdd(f, a, b) << '\n';
      } else {
        const auto coords = hdm_coords(d, layout, c.t, k, sm);
        for (auto [a, b] : list) out << a << ',' << b << ',' << hdd(coords, a, b) << '\n';
      }
      emit(c.output, [&](std::ostream& os) { os << out.str(); });
    }
  } else if (*so3) {
    const Regime r = parse_regime(regime);
    So3Config cfg = so3_preset(preset, r);
    if (delta) cfg.delta = *delta;
    if (eps) cfg.eps = *eps;
    if (alpha) cfg.alpha = *alpha;
    if (kb) cfg.k_base = *kb;
    if (kf) cfg.k_fibre = *kf;
    if (nb) cfg.n_base = *nb;
    if (nf) cfg.n_fibre = *nf;
    if (seed) cfg.seed = *seed;
    if (mode) cfg.mode = parse_mode(*mode);
    if (!calibrate.empty()) {
      const auto points = calibrate_delta(cfg, r, parse_list(calibrate));
      std::ostringstream out;
      out << "delta,score,group_sizes\n";
      for (const auto& p : points) {
        out << p.delta << ',' << p.score << ',';
        for (std::size_t g = 0; g < p.group_sizes.size(); ++g) out << (g ? " " : "") << p.group_sizes[g];
        out << '\n';
      }
      emit(c.output, [&](std::ostream& os) { os << out.str(); });
    } else {
      const MultiplicityReport rep = run_so3_experiment(cfg);
      const std::string text = report_json(rep);
      emit(c.output, [&](std::ostream& os) { os << text; });
      if (!plot_so3.empty()) emit(plot_so3, [&](std::ostream& os) { write_eigs_plot(os, rep.eigenvalues); });
    }
  } else if (*segment) {
    LaplacianBundle lap = [&] {
      if (synthetic) {
        CircleBundleConfig cfg;
        cfg.n_fibres = synthetic_fibres;
        cfg.n_points = synthetic_points;
        cfg.arcs = clusters;
        cfg.seed = c.seed;
        const CircleBundle cb = make_circle_bundle(cfg);
        std::vector<std::size_t> sizes(cfg.n_fibres, cfg.n_points);
        auto w = build_w_from_blocks(sizes, cb.blocks, cb.base_dists, cfg.base_neighbors, cfg.eps_base);
        return horizontal_laplacians(alpha_normalize(std::move(w), c.alpha), c.alpha);
      }
      Common copy = c;
      return laplacian_from(copy);
    }();
    SegmentOptions so;
    so.n_eigs = c.k > 0 ? c.k : clusters;
    so.t = c.t;
    so.mode = segment->count("--spectrum") ? parse_spectrum_mode(c.spectrum) : SpectrumMode::Diffusion;
    so.kmeans.k = clusters;
    so.kmeans.seed = c.seed;
    so.kmeans.restarts = restarts;
    so.eig.seed = c.seed;
    const Segmentation seg = segment_bundle(lap, so);
    emit(c.output, [&](std::ostream& os) { write_segmentation_csv(os, seg); });
  } else if (*selftest) {
    const auto results = run_selftest();
    bool ok = true;
    for (const auto& r : results) {
      std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << (r.detail.empty() ? "" : "  (" + r.detail + ")") << '\n';
      ok = ok && r.pass;
    }
    return ok ? kExitOk : kExitNumerical;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const hdm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return hdm::is_validation_error(e.code()) ? kExitValidation : kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}
