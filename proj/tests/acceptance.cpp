// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 0 when
// every criterion passes, except those listed with --expect-red (still printed
// as FAIL, see README).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "CLI11.hpp"
#include "hdm/clustering.hpp"
#include "hdm/eigensolver.hpp"
#include "hdm/error.hpp"
#include "hdm/experiments.hpp"
#include "hdm/geometry.hpp"
#include "hdm/knn.hpp"
#include "hdm/laplacian.hpp"
#include "hdm/localpca.hpp"
#include "hdm/rng.hpp"
#include "hdm/spectral.hpp"

using namespace hdm;

namespace {

// Pinned tolerances.
constexpr double kGroupTol = 0.1;
constexpr double kRunSeconds = 300.0;
constexpr double kRatioTol = 0.10;
constexpr double kFrobeniusRel = 1e-8;
constexpr double kRowSumRel = 1e-9;
constexpr double kSpectrumSlack = 1e-9;
constexpr double kSimilarityTol = 1e-9;
constexpr double kZeroEig = 1e-9;
constexpr double kTransportMax = 0.15;
constexpr double kPcaScale = 2.0;  // eps_PCA = kPcaScale * N_B^{-1/2}
constexpr double kLiftR2 = 0.9;
constexpr double kSlopeAgreement = 0.15;
constexpr double kEigValueTol = 1e-8;
constexpr double kEigAngleTol = 1e-6;
constexpr double kIsolatedGap = 1e-3;
constexpr double kSegmentation = 0.95;
constexpr double kRepeatTol = 1e-9;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string join_sizes(const std::vector<EigenGroup>& groups, std::size_t max = 6) {
  std::string s = "(";
  for (std::size_t g = 0; g < groups.size() && g < max; ++g) s += (g ? "," : "") + std::to_string(groups[g].size);
  return s + (groups.size() > max ? ",...)" : ")");
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// Shared SO(3) runs (criteria 1, 2, 4, 6, 9).

struct RegimeRun {
  Regime regime;
  MultiplicityReport report;
  double seconds = 0.0;
};

struct LiftResult {
  LiftFit x1, x3;
};

LiftResult lift_fits(const So3Build& b, double eps) {
  auto coord = [](int c) { return [c](const Eigen::Vector3d& x) { return x[c]; }; };
  auto lap = [](int c) { return [c](const Eigen::Vector3d& x) { return -2.0 * x[c]; }; };
  return {lift_consistency_check(b.sample, b.laplacian, coord(0), lap(0), eps),
          lift_consistency_check(b.sample, b.laplacian, coord(2), lap(2), eps)};
}

struct So3Pass {
  std::vector<RegimeRun> runs;
  LiftResult lift;       // horizontal-regime build
  LiftResult lift_base;  // base-regime build, diagnostic only
  std::optional<So3Build> horizontal_build;
};

// Runs the three desk regimes. The horizontal build is kept when `keep` is set.
So3Pass run_desk(bool keep) {
  So3Pass out;
  for (Regime r : {Regime::Horizontal, Regime::Total, Regime::Base}) {
    So3Config cfg = so3_preset("desk", r);
    cfg.group_tol = kGroupTol;
    const auto t0 = Clock::now();
    So3Build build = build_so3_laplacian(cfg);
    MultiplicityReport rep = analyze_spectrum(cfg, build.laplacian);
    const double secs = seconds_since(t0);
    if (r == Regime::Horizontal) out.lift = lift_fits(build, cfg.eps);
    if (r == Regime::Base) out.lift_base = lift_fits(build, cfg.eps);
    out.runs.push_back({r, std::move(rep), secs});
    if (r == Regime::Horizontal && keep) out.horizontal_build.emplace(std::move(build));
  }
  return out;
}

// ---------------------------------------------------------------------------

Outcome criterion1(const So3Pass& desk, bool paper_scale) {
  Outcome o{true, ""};
  for (const auto& run : desk.runs) {
    const int score = signature_score(run.report.groups, run.regime);
    const bool ok = score == 3 && run.seconds < kRunSeconds;
    o.pass = o.pass && ok;
    o.detail += fmt("%s delta=%g groups %s %.0fs%s; ", std::string(to_string(run.regime)).c_str(),
                    run.report.config.delta, join_sizes(run.report.groups).c_str(), run.seconds, ok ? "" : " <-");
  }
  if (paper_scale) {
    for (Regime r : {Regime::Horizontal, Regime::Total, Regime::Base}) {
      So3Config cfg = so3_preset("paper-noiseless", r);
      cfg.group_tol = kGroupTol;
      const auto t0 = Clock::now();
      const auto rep = run_so3_experiment(cfg);
      const bool ok = signature_score(rep.groups, r) == 3;
      o.pass = o.pass && ok;
      o.detail += fmt("paper %s groups %s %.0fs%s; ", std::string(to_string(r)).c_str(), join_sizes(rep.groups).c_str(),
                      seconds_since(t0), ok ? "" : " <-");
    }
  } else {
    o.detail += "paper scale skipped (set HDM_PAPER_SCALE=1)";
  }
  return o;
}

Outcome criterion2(const So3Pass& desk) {
  const auto& rep = desk.runs.back().report;
  if (rep.regime != Regime::Base) return {false, "base run not classified as base regime"};
  const RatioCheck c = check_base_ratios(rep, kRatioTol);
  std::string m;
  for (double v : c.measured) m += fmt("%.3f ", v);
  return {c.pass, "ratios " + m + "vs 1 3 6, tol 10%"};
}

Outcome criterion3() {
  CounterRng rng(derive_seed(3, 0));
  double worst = 0.0;
  int pairs = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t nf = 2 + rng.below(7);
    std::vector<std::size_t> sizes(nf);
    std::size_t total;
    do {
      total = 0;
      for (auto& s : sizes) total += (s = 1 + rng.below(200 / nf));
    } while (total > 200);
    const auto n = static_cast<Eigen::Index>(total);
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
    const Eigen::MatrixXd a = g * g.transpose() / static_cast<double>(n);
    const int t = 1 + static_cast<int>(rng.below(5));
    const BlockLayout layout = BlockLayout::from_sizes(sizes);

    EigOptions eo;
    eo.k = n;
    eo.method = EigMethod::Dense;
    const auto d = eig_sym(SymmetricOperator::from_dense(a), eo);
    const auto f = hbdm_features(d, layout, static_cast<double>(t), n);
    for (std::size_t i = 0; i < nf; ++i)
      for (std::size_t j = i; j < nf; ++j) {
        const double ip = f.features.row(static_cast<Eigen::Index>(i)).dot(f.features.row(static_cast<Eigen::Index>(j)));
        const double ref = std::pow(block_power_frobenius(a, layout, t, i, j), 2);
        worst = std::max(worst, std::abs(ip - ref) / ref);
        ++pairs;
      }
  }
  return {worst <= kFrobeniusRel, fmt("%d fibre pairs, worst relative error %.2e", pairs, worst)};
}

// Invariants of one assembled W. Dense checks up to 600 points,
// matrix-free checks (sampled entries, operator identities, Lanczos extremes) above.
std::string check_invariants(const LaplacianBundle& lap, std::uint64_t seed) {
  const HorizontalDiffusionMatrix& w = lap.w();
  const BlockLayout& layout = w.layout();
  const auto n = static_cast<Eigen::Index>(lap.size());
  CounterRng rng(seed);
  std::string err;

  // Symmetry and zero diagonal blocks on every stored entry (small) or on samples (large).
  const bool dense = lap.size() <= 600;
  auto check_entry = [&](const HorizontalDiffusionMatrix::Block& b, Eigen::Index r, Eigen::Index c) {
    const std::size_t u = layout.offsets[b.i] + static_cast<std::size_t>(r);
    const std::size_t v = layout.offsets[b.j] + static_cast<std::size_t>(c);
    if (w.entry(u, v) != w.entry(v, u) || w.entry(u, v) != b.values(r, c)) err = "asymmetric entry; ";
  };
  for (const auto& b : w.blocks()) {
    if (dense) {
      for (Eigen::Index r = 0; r < b.values.rows(); ++r)
        for (Eigen::Index c = 0; c < b.values.cols(); ++c) check_entry(b, r, c);
    } else {
      check_entry(b, static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(b.values.rows()))),
                  static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(b.values.cols()))));
    }
  }
  for (int s = 0; s < 2000; ++s) {
    const std::size_t f = rng.below(layout.fibre_count());
    const std::size_t u = layout.offsets[f] + rng.below(layout.sizes[f]);
    const std::size_t v = layout.offsets[f] + rng.below(layout.sizes[f]);
    if (w.entry(u, v) != 0.0) err += "nonzero diagonal block; ";
  }

  // L^H row sums against the row l1 norm 2 d_u.
  const Eigen::VectorXd deg = lap.degrees();
  const Eigen::VectorXd rows = lap.apply_lh(Eigen::VectorXd::Ones(n));
  for (Eigen::Index u = 0; u < n; ++u)
    if (std::abs(rows[u]) >= kRowSumRel * 2.0 * deg[u]) {
      err += "row sum; ";
      break;
    }

  // Similarity L_* = D^{1/2} L_rw D^{-1/2} on random vectors.
  const Eigen::VectorXd sq = deg.cwiseSqrt();
  for (int s = 0; s < 3; ++s) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.normal();
    const Eigen::VectorXd lhs = lap.apply_lstar(x);
    const Eigen::VectorXd rhs = sq.cwiseProduct(lap.apply_lrw(x.cwiseQuotient(sq)));
    if ((lhs - rhs).cwiseAbs().maxCoeff() > kSimilarityTol * std::max(1.0, x.cwiseAbs().maxCoeff())) err += "similarity; ";
  }

  // Spectrum of L_* inside [0, 2] with a simple zero eigenvalue.
  double lo, lo2, hi;
  if (lap.size() <= 600) {
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(lap.lstar_dense(), Eigen::EigenvaluesOnly).eigenvalues();
    lo = ev[0];
    lo2 = ev[1];
    hi = ev[n - 1];
  } else {
    EigOptions eo;
    eo.seed = seed;
    const auto small = laplacian_spectrum(lap, 2, eo);
    lo = small.eigenvalues[0];
    lo2 = small.eigenvalues[1];
    SymmetricOperator adj;
    adj.n = n;
    adj.apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = lap.apply_normalized_adjacency(x); };
    eo.k = 1;
    eo.which = Which::Smallest;
    eo.check_symmetry = false;
    hi = 1.0 - eig_sym(adj, eo).eigenvalues[0];
  }
  if (lo < -kSpectrumSlack || hi > 2.0 + kSpectrumSlack) err += fmt("spectrum [%.3e, %.12f]; ", lo, hi);
  if (std::abs(lo) > kZeroEig || lo2 <= kZeroEig) err += fmt("lambda0 %.2e lambda1 %.2e; ", lo, lo2);
  return err;
}

Outcome criterion4(const So3Pass& desk) {
  CounterRng rng(derive_seed(4, 0));
  int failed = 0;
  std::string first;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t nf = 2 + rng.below(19);
    std::vector<std::size_t> sizes(nf);
    for (auto& s : sizes) s = 1 + rng.below(12);
    std::vector<HorizontalDiffusionMatrix::Block> blocks;
    for (std::uint32_t i = 0; i < nf; ++i)
      for (std::uint32_t j = i + 1; j < nf; ++j) {
        const bool chain = j == i + 1;
        if (!chain && rng.uniform() > 0.3) continue;
        Eigen::MatrixXd v(static_cast<Eigen::Index>(sizes[i]), static_cast<Eigen::Index>(sizes[j]));
        for (Eigen::Index r = 0; r < v.size(); ++r) v.data()[r] = rng.uniform() < 0.5 ? 0.0 : std::exp(-5 * rng.uniform());
        if (chain) {
          v.col(0).array() += 0.05;
          v.row(0).array() += 0.05;
        }
        blocks.push_back({i, j, std::move(v)});
      }
    const double alpha = rng.uniform();
    HorizontalDiffusionMatrix w(BlockLayout::from_sizes(sizes), std::move(blocks));
    const auto lap = horizontal_laplacians(alpha_normalize(std::move(w), alpha), alpha);
    const std::string e = check_invariants(lap, derive_seed(4, static_cast<std::uint64_t>(trial) + 1));
    if (!e.empty()) {
      ++failed;
      if (first.empty()) first = fmt("random #%d: ", trial) + e;
    }
  }
  std::string detail = fmt("random 100: %d failed", failed);

  const std::string noiseless = check_invariants(desk.horizontal_build->laplacian, derive_seed(4, 1000));
  detail += "; desk noiseless: " + (noiseless.empty() ? std::string("ok") : noiseless);
  const So3Config cfg = so3_preset("desk-empirical", Regime::Total);
  const So3Build emp = build_so3_laplacian(cfg);
  const std::string empirical = check_invariants(emp.laplacian, derive_seed(4, 1001));
  detail += "; desk empirical: " + (empirical.empty() ? std::string("ok") : empirical);
  if (!first.empty()) detail += "; " + first;
  return {failed == 0 && noiseless.empty() && empirical.empty(), detail};
}

double median_transport_error(std::size_t n, double eps_pca, std::uint64_t seed) {
  const PointMatrix pts = geometry::uniform_sphere_sample(3, n, seed);
  LocalPcaOptions o;
  o.k = 60;
  o.eps_pca = eps_pca;
  o.dim = 2;
  o.kernel = PcaKernel::Epanechnikov;
  const auto bases = local_pca_bases(pts, o);
  const auto edges = mutual_knn_edges(NeighborIndex(pts), 10);
  const auto transports = estimate_transports(bases, edges);
  std::vector<double> errs;
  for (const auto& t : transports) {
    const Eigen::Vector3d xi = pts.row(t.i).transpose(), xj = pts.row(t.j).transpose();
    const Eigen::MatrixXd c = bases[t.j].basis.transpose() * geometry::transport_rotation(xi, xj) * bases[t.i].basis;
    errs.push_back((t.O - c).norm());
  }
  std::nth_element(errs.begin(), errs.begin() + static_cast<std::ptrdiff_t>(errs.size() / 2), errs.end());
  return errs[errs.size() / 2];
}

Outcome criterion5() {
  std::vector<double> med;
  for (std::size_t n : {500, 1000, 2000})
    med.push_back(median_transport_error(n, kPcaScale / std::sqrt(static_cast<double>(n)), derive_seed(5, n)));
  const bool pass = med[0] > med[1] && med[1] > med[2] && med[2] < kTransportMax;
  std::string literal;
  try {
    median_transport_error(500, 1.0 / std::sqrt(500.0), derive_seed(5, 500));
    literal = "literal N_B^{-1/2} runs";
  } catch (const Error& e) {
    literal = "literal N_B^{-1/2}: " + std::string(to_string(e.code())) + " at N_B=500";
  }
  return {pass, fmt("eps_PCA=2*N_B^{-1/2}, median |O-C|_F %.4f > %.4f > %.4f (< 0.15); ", med[0], med[1], med[2]) + literal};
}

Outcome criterion6(const So3Pass& desk) {
  const auto& l = desk.lift;
  const double rel = std::abs(l.x1.slope - l.x3.slope) / std::max(std::abs(l.x1.slope), std::abs(l.x3.slope));
  const bool pass = l.x3.r2 >= kLiftR2 && l.x3.slope > 0.0 && rel <= kSlopeAgreement;
  return {pass, fmt("horizontal build: g=x3 R^2 %.3f (need %.2f) slope %.4f; g=x1 slope %.4f, slopes differ %.1f%%; "
                    "base build R^2 %.3f (diagnostic)",
                    l.x3.r2, kLiftR2, l.x3.slope, l.x1.slope, 100 * rel, desk.lift_base.x3.r2)};
}

Outcome criterion7() {
  CounterRng rng(derive_seed(7, 0));
  double worst_val = 0.0, worst_angle = 0.0;
  int isolated = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd a(50, 50);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    a = (0.5 * (a + a.transpose())).eval();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(a);
    EigOptions eo;
    eo.k = 50;
    eo.method = EigMethod::Lanczos;
    eo.seed = static_cast<std::uint64_t>(trial);
    const auto d = eig_sym(SymmetricOperator::from_dense(a), eo);
    worst_val = std::max(worst_val, (d.eigenvalues - ref.eigenvalues()).cwiseAbs().maxCoeff());
    const Eigen::VectorXd& ev = ref.eigenvalues();
    for (Eigen::Index i = 0; i < 50; ++i) {
      const double gap = std::min(i > 0 ? ev[i] - ev[i - 1] : INFINITY, i < 49 ? ev[i + 1] - ev[i] : INFINITY);
      if (gap <= kIsolatedGap) continue;
      ++isolated;
      const double c = std::min(1.0, std::abs(d.eigenvectors.col(i).dot(ref.eigenvectors().col(i))));
      worst_angle = std::max(worst_angle, std::acos(c));
    }
  }
  return {worst_val <= kEigValueTol && worst_angle < kEigAngleTol,
          fmt("Lanczos vs dense: max |dlambda| %.2e, max angle %.2e over %d isolated pairs", worst_val, worst_angle,
              isolated)};
}

struct SegRun {
  std::vector<int> labels;
  double consistency = 0.0;
  double worst_fibre = 1.0;
};

SegRun run_circle_benchmark() {
  const CircleBundleConfig cfg;
  const CircleBundle cb = make_circle_bundle(cfg);
  std::vector<std::size_t> sizes(cfg.n_fibres, cfg.n_points);
  auto w = build_w_from_blocks(sizes, cb.blocks, cb.base_dists, cfg.base_neighbors, cfg.eps_base);
  const auto lap = horizontal_laplacians(alpha_normalize(std::move(w), 1.0), 1.0);
  SegmentOptions so;
  so.kmeans.k = cfg.arcs;
  const Segmentation seg = segment_bundle(lap, so);
  SegRun r;
  r.labels = seg.labels;
  r.consistency = label_consistency(seg.labels, cb.truth, cfg.arcs);
  for (double c : per_fibre_consistency(seg, cb.truth)) r.worst_fibre = std::min(r.worst_fibre, c);
  return r;
}

Outcome criterion8(const SegRun& seg) {
  return {seg.consistency >= kSegmentation,
          fmt("40 circles, 3 arcs: consistency %.4f (need %.2f), worst fibre %.3f", seg.consistency, kSegmentation,
              seg.worst_fibre)};
}

Outcome criterion9(const So3Pass& first, const SegRun& seg) {
  const So3Pass second = run_desk(false);
  double dev = 0.0;
  bool groups_same = true;
  for (std::size_t r = 0; r < first.runs.size(); ++r) {
    const auto& a = first.runs[r].report.eigenvalues;
    const auto& b = second.runs[r].report.eigenvalues;
    if (a.size() != b.size()) return {false, "eigenvalue counts differ"};
    for (std::size_t i = 0; i < a.size(); ++i) dev = std::max(dev, std::abs(a[i] - b[i]));
    groups_same = groups_same && join_sizes(first.runs[r].report.groups, 100) == join_sizes(second.runs[r].report.groups, 100);
  }
  const bool lift_same = first.lift.x3.r2 == second.lift.x3.r2 && first.lift.x3.slope == second.lift.x3.slope &&
                         first.lift.x1.slope == second.lift.x1.slope;
  const SegRun again = run_circle_benchmark();
  const bool labels_same = again.labels == seg.labels;
  return {dev <= kRepeatTol && groups_same && lift_same && labels_same,
          fmt("max eigenvalue deviation %.1e, groups %s, lift fit %s, labels %s", dev, groups_same ? "same" : "differ",
              lift_same ? "identical" : "differs", labels_same ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::vector<int> expect_red;
  std::vector<int> only;
  app.add_option("--expect-red", expect_red, "criteria whose failure does not affect the exit status");
  app.add_option("--only", only, "run only these criteria (1 also feeds 2, 4, 6, 9)");
  CLI11_PARSE(app, argc, argv);

  const char* env = std::getenv("HDM_PAPER_SCALE");
  const bool paper_scale = env && std::string(env) == "1";
  auto wanted = [&](int c) { return only.empty() || std::find(only.begin(), only.end(), c) != only.end(); };
  const std::set<int> needs_desk{1, 2, 4, 6, 9};
  bool any_desk = false;
  for (int c : needs_desk) any_desk = any_desk || wanted(c);

  const auto t_all = Clock::now();
  std::optional<So3Pass> desk;
  std::optional<SegRun> seg;
  int hard_failures = 0;

  auto report = [&](int id, const char* title, const std::function<Outcome()>& fn) {
    if (!wanted(id)) return;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw ") + e.what()};
    }
    const bool red_ok = std::find(expect_red.begin(), expect_red.end(), id) != expect_red.end();
    if (!o.pass && !red_ok) ++hard_failures;
    std::printf("%s  criterion %d  %-34s [%.1fs] %s%s\n", o.pass ? "PASS" : "FAIL", id, title, seconds_since(t0),
                o.detail.c_str(), (!o.pass && red_ok) ? "  (expected red)" : "");
    std::fflush(stdout);
  };

  try {
    if (any_desk) desk = run_desk(true);
    if (wanted(8) || wanted(9)) seg = run_circle_benchmark();
  } catch (const std::exception& e) {
    std::printf("setup failed: %s\n", e.what());
    return 1;
  }

  report(1, "SO(3) multiplicities", [&] { return criterion1(*desk, paper_scale); });
  report(2, "base-regime ratios", [&] { return criterion2(*desk); });
  report(3, "HBDM Frobenius identity", criterion3);
  report(4, "Laplacian invariants", [&] { return criterion4(*desk); });
  report(5, "transport convergence", criterion5);
  report(6, "horizontal-lift consistency", [&] { return criterion6(*desk); });
  report(7, "eigensolver vs dense oracle", criterion7);
  report(8, "consistent segmentation", [&] { return criterion8(*seg); });
  report(9, "determinism", [&] { return criterion9(*desk, *seg); });
  std::printf("total %.1fs\n", seconds_since(t_all));
  return hard_failures == 0 ? 0 : 1;
}
