#include "hdm/selftest.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "hdm/error.hpp"
#include "hdm/geometry.hpp"
#include "hdm/io.hpp"
#include "hdm/laplacian.hpp"
#include "hdm/rng.hpp"
#include "hdm/spectral.hpp"

namespace hdm {

namespace {

std::string fmt(double x) {
  std::ostringstream ss;
  ss.precision(3);
  ss << x;
  return ss.str();
}

HorizontalDiffusionMatrix random_w(CounterRng& rng, std::size_t fibres, std::size_t max_size) {
  std::vector<std::size_t> sizes(fibres);
  for (auto& s : sizes) s = 1 + rng.below(max_size);
  std::vector<HorizontalDiffusionMatrix::Block> blocks;
  for (std::uint32_t i = 0; i < fibres; ++i)
    for (std::uint32_t j = i + 1; j < fibres; ++j) {
      Eigen::MatrixXd v(static_cast<Eigen::Index>(sizes[i]), static_cast<Eigen::Index>(sizes[j]));
      for (Eigen::Index r = 0; r < v.size(); ++r) v.data()[r] = rng.uniform() < 0.5 ? 0.0 : rng.uniform();
      v(0, 0) = 0.5 + rng.uniform();  // keeps every pair of fibres linked
      blocks.push_back({i, j, std::move(v)});
    }
  return HorizontalDiffusionMatrix(BlockLayout::from_sizes(sizes), std::move(blocks));
}

SelftestResult check(const std::string& name, const std::function<std::string()>& body) {
  try {
    const std::string failure = body();
    return {name, failure.empty(), failure};
  } catch (const std::exception& e) {
    return {name, false, e.what()};
  }
}

}  // namespace

std::vector<SelftestResult> run_selftest() {
  std::vector<SelftestResult> out;

  out.push_back(check("transport rotation maps x_i to x_j and is orthogonal", []() -> std::string {
    CounterRng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      const auto pts = geometry::uniform_sphere_sample(3, 2, rng());
      const Eigen::Vector3d a = pts.row(0).transpose(), b = pts.row(1).transpose();
      if (a.dot(b) < -0.99) continue;
      const auto r = geometry::transport_rotation(a, b);
      const double e1 = (r * a - b).norm();
      const double e2 = (r.transpose() * r - Eigen::Matrix3d::Identity()).norm();
      if (e1 > 1e-12 || e2 > 1e-12 || std::abs(r.determinant() - 1.0) > 1e-12)
        return "rotation error " + fmt(std::max(e1, e2));
    }
    return std::string();
  }));

  out.push_back(check("Laplacian invariants on random W", []() -> std::string {
    CounterRng rng(12);
    for (int trial = 0; trial < 10; ++trial) {
      auto w = random_w(rng, 2 + rng.below(5), 8);
      const auto lap = horizontal_laplacians(alpha_normalize(std::move(w), 0.5 * static_cast<double>(trial % 3)),
                                             0.5 * static_cast<double>(trial % 3));
      const Eigen::MatrixXd wd = lap.w().to_dense();
      if ((wd - wd.transpose()).cwiseAbs().maxCoeff() != 0.0) return std::string("W not symmetric");
      const Eigen::MatrixXd lh = lap.lh_dense();
      const Eigen::VectorXd rows = lh.rowwise().sum();
      for (Eigen::Index r = 0; r < rows.size(); ++r)
        if (std::abs(rows[r]) > 1e-9 * lh.row(r).cwiseAbs().sum()) return "L^H row sum " + fmt(rows[r]);
      const Eigen::MatrixXd ls = lap.lstar_dense();
      const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(ls).eigenvalues();
      if (ev.minCoeff() < -1e-9 || ev.maxCoeff() > 2.0 + 1e-9) return "spectrum outside [0, 2]";
      const Eigen::VectorXd sq = lap.degrees().cwiseSqrt();
      const Eigen::MatrixXd sim = sq.asDiagonal() * lap.lrw_dense() * sq.cwiseInverse().asDiagonal();
      if ((sim - ls).cwiseAbs().maxCoeff() > 1e-9) return std::string("similarity identity violated");
    }
    return std::string();
  }));

  out.push_back(check("eigensolver matches dense oracle", []() -> std::string {
    CounterRng rng(13);
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::MatrixXd a(50, 50);
      for (Eigen::Index r = 0; r < a.size(); ++r) a.data()[r] = rng.normal();
      a = (0.5 * (a + a.transpose())).eval();
      EigOptions o;
      o.k = 8;
      o.method = EigMethod::Lanczos;
      o.seed = static_cast<std::uint64_t>(trial);
      const auto d = eig_sym(SymmetricOperator::from_dense(a), o);
      const Eigen::VectorXd ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues().head(8);
      const double err = (d.eigenvalues - ref).cwiseAbs().maxCoeff();
      if (err > 1e-8) return "eigenvalue error " + fmt(err);
    }
    return std::string();
  }));

  out.push_back(check("HBDM inner products equal block Frobenius norms", []() -> std::string {
    CounterRng rng(14);
    auto w = random_w(rng, 4, 6);
    const auto lap = horizontal_laplacians(alpha_normalize(std::move(w), 1.0), 1.0);
    const Eigen::MatrixXd ls = lap.lstar_dense();
    EigOptions o;
    o.k = ls.rows();
    o.method = EigMethod::Dense;
    const auto d = eig_sym(SymmetricOperator::from_dense(ls), o);
    const BlockLayout& layout = lap.w().layout();
    for (int t = 1; t <= 3; ++t) {
      const auto f = hbdm_features(d, layout, t, ls.rows());
      for (std::size_t i = 0; i < layout.fibre_count(); ++i)
        for (std::size_t j = 0; j < layout.fibre_count(); ++j) {
          const double ip = f.features.row(static_cast<Eigen::Index>(i)).dot(f.features.row(static_cast<Eigen::Index>(j)));
          const double ref = std::pow(block_power_frobenius(ls, layout, t, i, j), 2);
          if (std::abs(ip - ref) > 1e-8 * std::max(1.0, std::abs(ref))) return "mismatch at t=" + std::to_string(t);
        }
    }
    return std::string();
  }));

  out.push_back(check("two-vertex spectrum is {0, 2}", []() -> std::string {
    std::vector<HorizontalDiffusionMatrix::Block> blocks{{0, 1, Eigen::MatrixXd::Constant(1, 1, 0.7)}};
    HorizontalDiffusionMatrix w(BlockLayout::from_sizes({1, 1}), std::move(blocks));
    const auto lap = horizontal_laplacians(alpha_normalize(std::move(w), 1.0), 1.0);
    EigOptions o;
    const auto d = laplacian_spectrum(lap, 2, o);
    if (std::abs(d.eigenvalues[0]) > 1e-12 || std::abs(d.eigenvalues[1] - 2.0) > 1e-12)
      return "got " + fmt(d.eigenvalues[0]) + ", " + fmt(d.eigenvalues[1]);
    return std::string();
  }));

  out.push_back(check("manifest round trip is value-identical", []() -> std::string {
    SamplingConfig cfg;
    cfg.n_base = 12;
    cfg.n_fibre = 4;
    cfg.seed = 15;
    DatasetManifest m = manifest_from_sample(sample_utm_noiseless(cfg));
    CorrespondenceBlock b;
    b.i = 0;
    b.j = 3;
    b.rho.resize(4, 4);
    b.rho.insert(1, 2) = 1.0 / 3.0;
    b.rho.insert(3, 0) = std::exp(1.0);
    b.base_distance = std::sqrt(2.0);
    m.blocks.push_back(b);
    m.edges = std::vector<BaseEdge>{{0, 3}};
    const DatasetManifest back = parse_manifest(write_manifest(m));
    if (!manifests_equal(m, back)) return std::string("values changed");
    if (write_manifest(back) != write_manifest(m)) return std::string("text changed");
    return std::string();
  }));

  return out;
}

}  // namespace hdm
