#include "hdm/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "hdm/error.hpp"
#include "hdm/parallel.hpp"
#include "hdm/rng.hpp"

namespace hdm {

namespace {

struct Run {
  std::vector<int> labels;
  Eigen::MatrixXd centers;
  double wcss = std::numeric_limits<double>::infinity();
};

Eigen::MatrixXd plus_plus_seeds(const Eigen::MatrixXd& x, int k, CounterRng& rng) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd centers(k, x.cols());
  centers.row(0) = x.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (pick = 0; pick < n - 1; ++pick) {
        r -= d2[pick];
        if (r < 0.0) break;
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centers.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

Run lloyd(const Eigen::MatrixXd& x, const KMeansOptions& opt, CounterRng& rng) {
  const Eigen::Index n = x.rows();
  Run run;
  run.centers = plus_plus_seeds(x, opt.k, rng);
  run.labels.assign(static_cast<std::size_t>(n), 0);
  double previous = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opt.max_iter; ++iter) {
    double wcss = 0.0;
    Eigen::VectorXd best_d(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index c = 0;
      best_d[i] = (run.centers.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&c);
      run.labels[static_cast<std::size_t>(i)] = static_cast<int>(c);
      wcss += best_d[i];
    }
    run.wcss = wcss;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(opt.k, x.cols());
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(opt.k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(run.labels[static_cast<std::size_t>(i)]) += x.row(i);
      ++counts[run.labels[static_cast<std::size_t>(i)]];
    }
    for (int c = 0; c < opt.k; ++c) {
      if (counts[c] > 0) {
        run.centers.row(c) = sums.row(c) / counts[c];
      } else {
        // Empty cluster: move it to the worst-served point.
        Eigen::Index far = 0;
        best_d.maxCoeff(&far);
        run.centers.row(c) = x.row(far);
        best_d[far] = 0.0;
      }
    }
    if (std::abs(previous - wcss) <= opt.tol * std::max(wcss, 1e-300)) break;
    previous = wcss;
  }
  // Final assignment against the final centers.
  run.wcss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index c = 0;
    run.wcss += (run.centers.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&c);
    run.labels[static_cast<std::size_t>(i)] = static_cast<int>(c);
  }
  return run;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, const KMeansOptions& options) {
  if (points.rows() == 0) throw Error(ErrorCode::EmptyInput, "k-means on an empty point set");
  if (options.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (options.k > points.rows()) throw Error(ErrorCode::InvalidArgument, "k exceeds the number of points");
  if (options.restarts < 1) throw Error(ErrorCode::InvalidArgument, "restarts must be at least 1");

  std::vector<Run> runs(static_cast<std::size_t>(options.restarts));
  parallel_for(runs.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      CounterRng rng(derive_seed(options.seed, r));
      runs[r] = lloyd(points, options, rng);
    }
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].wcss < runs[best].wcss) best = r;
  return {std::move(runs[best].labels), std::move(runs[best].centers), runs[best].wcss};
}

int Segmentation::label(std::size_t fibre, std::size_t point) const {
  if (fibre >= layout.fibre_count() || point >= layout.sizes[fibre])
    throw Error(ErrorCode::IndexOutOfRange, "segmentation index out of range");
  return labels[layout.offsets[fibre] + point];
}

Segmentation spectral_segmentation(const HdmCoordinates& coords, const KMeansOptions& options) {
  if (coords.coords.rows() == 0) throw Error(ErrorCode::EmptyInput, "no embedded points to segment");
  Segmentation seg;
  seg.k = options.k;
  seg.layout = coords.layout;
  if (options.k == 1 || coords.coords.cols() == 0) {
    seg.labels.assign(static_cast<std::size_t>(coords.coords.rows()), 0);
  } else {
    seg.labels = kmeans(coords.coords, options).labels;
  }
  seg.histograms = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(seg.layout.fibre_count()), options.k);
  for (std::size_t j = 0; j < seg.layout.fibre_count(); ++j)
    for (std::size_t s = 0; s < seg.layout.sizes[j]; ++s)
      ++seg.histograms(static_cast<Eigen::Index>(j), seg.labels[seg.layout.offsets[j] + s]);
  return seg;
}

Segmentation segment_bundle(const LaplacianBundle& lap, const SegmentOptions& options) {
  const auto decomp = laplacian_spectrum(lap, options.n_eigs, options.eig);
  const auto coords = hdm_coords(decomp, lap.w().layout(), options.t, options.n_eigs, options.mode);
  return spectral_segmentation(coords, options.kmeans);
}

LabelMatch match_labels(const std::vector<int>& predicted, const std::vector<int>& truth, int k) {
  if (predicted.size() != truth.size()) throw Error(ErrorCode::SizeMismatch, "labelings differ in length");
  if (predicted.empty()) throw Error(ErrorCode::EmptyInput, "empty labelings");
  if (k < 1 || k > 10) throw Error(ErrorCode::InvalidArgument, "exhaustive label matching supports 1 <= k <= 10");
  Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(k, k);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] < 0 || predicted[i] >= k || truth[i] < 0 || truth[i] >= k)
      throw Error(ErrorCode::IndexOutOfRange, "label outside [0, k)");
    ++confusion(predicted[i], truth[i]);
  }
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  LabelMatch best;
  long best_hits = -1;
  do {
    long hits = 0;
    for (int p = 0; p < k; ++p) hits += confusion(p, perm[static_cast<std::size_t>(p)]);
    if (hits > best_hits) {
      best_hits = hits;
      best.permutation = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  best.agreement = static_cast<double>(best_hits) / static_cast<double>(predicted.size());
  return best;
}

double label_consistency(const std::vector<int>& predicted, const std::vector<int>& truth, int k) {
  return match_labels(predicted, truth, k).agreement;
}

std::vector<double> per_fibre_consistency(const Segmentation& seg, const std::vector<int>& truth) {
  const LabelMatch match = match_labels(seg.labels, truth, seg.k);
  std::vector<double> out(seg.layout.fibre_count());
  for (std::size_t j = 0; j < out.size(); ++j) {
    std::size_t hits = 0;
    for (std::size_t s = 0; s < seg.layout.sizes[j]; ++s) {
      const std::size_t p = seg.layout.offsets[j] + s;
      hits += match.permutation[static_cast<std::size_t>(seg.labels[p])] == truth[p];
    }
    out[j] = static_cast<double>(hits) / static_cast<double>(seg.layout.sizes[j]);
  }
  return out;
}

CircleBundle make_circle_bundle(const CircleBundleConfig& cfg) {
  if (cfg.n_fibres < 2 || cfg.arcs < 1 || cfg.n_points < static_cast<std::size_t>(cfg.arcs))
    throw Error(ErrorCode::InvalidArgument, "circle bundle needs >= 2 fibres and >= 1 point per arc");
  const double two_pi = 2.0 * std::numbers::pi;
  const double arc_span = two_pi / cfg.arcs;
  if (!(cfg.gap >= 0.0 && cfg.gap < arc_span)) throw Error(ErrorCode::InvalidArgument, "gap must be shorter than an arc");

  CircleBundle out;
  CounterRng rng(derive_seed(cfg.seed, 0));
  std::vector<double> frame_angle(cfg.n_fibres);
  std::vector<std::vector<double>> local_angle(cfg.n_fibres);
  out.sample.fibres.resize(cfg.n_fibres);
  for (std::size_t j = 0; j < cfg.n_fibres; ++j) {
    const double b = two_pi * static_cast<double>(j) / static_cast<double>(cfg.n_fibres) + 0.1 * rng.normal();
    out.sample.fibres[j].base = Eigen::Vector2d(std::cos(b), std::sin(b));
    frame_angle[j] = two_pi * rng.uniform();
    PointMatrix pts(static_cast<Eigen::Index>(cfg.n_points), 2);
    for (std::size_t s = 0; s < cfg.n_points; ++s) {
      const int arc = static_cast<int>(s % static_cast<std::size_t>(cfg.arcs));
      const double canonical = arc * arc_span + cfg.gap / 2.0 + (arc_span - cfg.gap) * rng.uniform();
      const double local = canonical - frame_angle[j];
      local_angle[j].push_back(local);
      pts(static_cast<Eigen::Index>(s), 0) = std::cos(local);
      pts(static_cast<Eigen::Index>(s), 1) = std::sin(local);
      out.truth.push_back(arc);
    }
    out.sample.fibres[j].points = std::move(pts);
  }

  const auto nf = static_cast<Eigen::Index>(cfg.n_fibres);
  out.base_dists.resize(nf, nf);
  for (Eigen::Index i = 0; i < nf; ++i)
    for (Eigen::Index j = 0; j < nf; ++j)
      out.base_dists(i, j) = (out.sample.fibres[static_cast<std::size_t>(i)].base -
                              out.sample.fibres[static_cast<std::size_t>(j)].base).norm();

  // One block per unordered pair; the builder gates by base neighborhood.
  for (std::uint32_t i = 0; i < cfg.n_fibres; ++i) {
    for (std::uint32_t j = i + 1; j < cfg.n_fibres; ++j) {
      const double shift = frame_angle[i] - frame_angle[j] + cfg.rotation_noise * rng.normal();
      const auto& pi = out.sample.fibres[i].points;
      const auto& pj = out.sample.fibres[j].points;
      Eigen::MatrixXd d2(pi.rows(), pj.rows());
      for (Eigen::Index r = 0; r < pi.rows(); ++r) {
        const double a = local_angle[i][static_cast<std::size_t>(r)] + shift;
        const Eigen::RowVector2d moved(std::cos(a), std::sin(a));
        for (Eigen::Index s = 0; s < pj.rows(); ++s) d2(r, s) = (moved - pj.row(s)).squaredNorm();
      }
      const auto mask = mutual_rank_mask(d2, cfg.fibre_knn);
      std::vector<Eigen::Triplet<double>> trips;
      for (Eigen::Index s = 0; s < d2.cols(); ++s)
        for (Eigen::Index r = 0; r < d2.rows(); ++r)
          if (mask(r, s)) trips.emplace_back(static_cast<int>(r), static_cast<int>(s), std::exp(-d2(r, s) / cfg.fibre_delta));
      CorrespondenceBlock blk;
      blk.i = i;
      blk.j = j;
      blk.rho.resize(pi.rows(), pj.rows());
      blk.rho.setFromTriplets(trips.begin(), trips.end());
      blk.base_distance = out.base_dists(i, j);
      out.blocks.push_back(std::move(blk));
    }
  }
  return out;
}

}  // namespace hdm
