#include "hdm/sampling.hpp"

#include <cmath>
#include <numbers>

#include "hdm/error.hpp"
#include "hdm/geometry.hpp"
#include "hdm/parallel.hpp"
#include "hdm/rng.hpp"

namespace hdm {

using geometry::Vec3;

namespace {

// Stream 0 draws the base points; fibre j draws from stream j + 1.
std::uint64_t base_stream(std::uint64_t seed) { return derive_seed(seed, 0); }
std::uint64_t fibre_stream(std::uint64_t seed, std::size_t j) { return derive_seed(seed, j + 1); }

PointMatrix circle_points(const Vec3& e1, const Vec3& e2, std::size_t n, CounterRng& rng) {
  PointMatrix pts(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index s = 0; s < pts.rows(); ++s) {
    const double a = 2.0 * std::numbers::pi * rng.uniform();
    pts.row(s) = (std::cos(a) * e1 + std::sin(a) * e2).transpose();
  }
  return pts;
}

}  // namespace

BlockLayout FibreBundleSample::layout() const {
  std::vector<std::size_t> sizes;
  sizes.reserve(fibres.size());
  for (const auto& f : fibres) sizes.push_back(static_cast<std::size_t>(f.points.rows()));
  return BlockLayout::from_sizes(std::move(sizes));
}

PointMatrix FibreBundleSample::base_points() const {
  if (fibres.empty()) return {};
  const Eigen::Index dim = fibres.front().base.size();
  PointMatrix out(static_cast<Eigen::Index>(fibres.size()), dim);
  for (std::size_t j = 0; j < fibres.size(); ++j) {
    if (fibres[j].base.size() != dim || dim == 0)
      throw Error(ErrorCode::InvalidArgument,
                  "fibre " + std::to_string(j) + " has no base point of dimension " + std::to_string(dim));
    out.row(static_cast<Eigen::Index>(j)) = fibres[j].base.transpose();
  }
  return out;
}

void SamplingConfig::validate() const {
  if (n_base < 2) throw Error(ErrorCode::InvalidArgument, "N_B must be at least 2");
  if (n_fibre < 1) throw Error(ErrorCode::InvalidArgument, "N_F must be at least 1");
  if (dim != 3) throw Error(ErrorCode::InvalidArgument, "only the unit tangent bundle of S^2 is supported");
  if (mode == SamplingMode::Empirical) {
    if (!(eps_pca > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps_pca must be positive");
    if (k_pca < 3) throw Error(ErrorCode::NeighborCountTooSmall, "k_pca must be at least d + 1 = 3");
  }
}

FibreBundleSample sample_utm_noiseless(const SamplingConfig& cfg) {
  cfg.validate();
  const Eigen::MatrixXd bases = geometry::uniform_sphere_sample(3, cfg.n_base, base_stream(cfg.seed));
  FibreBundleSample out;
  out.fibres.resize(cfg.n_base);
  parallel_for(cfg.n_base, [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j) {
      const Vec3 xi = bases.row(static_cast<Eigen::Index>(j)).transpose();
      const auto [e1, e2] = geometry::tangent_frame_s2(xi);
      CounterRng rng(fibre_stream(cfg.seed, j));
      out.fibres[j].base = xi;
      out.fibres[j].points = circle_points(e1, e2, cfg.n_fibre, rng);
    }
  });
  return out;
}

EmpiricalFibreSample sample_utm_empirical(const SamplingConfig& cfg) {
  cfg.validate();
  if (cfg.mode != SamplingMode::Empirical)
    throw Error(ErrorCode::InvalidArgument, "sample_utm_empirical needs mode = empirical");
  const PointMatrix bases = geometry::uniform_sphere_sample(3, cfg.n_base, base_stream(cfg.seed));

  LocalPcaOptions pca;
  pca.k = cfg.k_pca;
  pca.eps_pca = cfg.eps_pca;
  pca.kernel = cfg.pca_kernel;
  pca.dim = 2;

  EmpiricalFibreSample out;
  out.bases = local_pca_bases(bases, pca);
  out.coefficients.resize(cfg.n_base);
  out.sample.fibres.resize(cfg.n_base);
  parallel_for(cfg.n_base, [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j) {
      CounterRng rng(fibre_stream(cfg.seed, j));
      PointMatrix c(static_cast<Eigen::Index>(cfg.n_fibre), 2);
      for (Eigen::Index s = 0; s < c.rows(); ++s) {
        const double a = 2.0 * std::numbers::pi * rng.uniform();
        c(s, 0) = std::cos(a);
        c(s, 1) = std::sin(a);
      }
      PointMatrix pts = c * out.bases[j].basis.transpose();
      pts.rowwise().normalize();
      out.coefficients[j] = std::move(c);
      out.sample.fibres[j].base = bases.row(static_cast<Eigen::Index>(j)).transpose();
      out.sample.fibres[j].points = std::move(pts);
    }
  });
  return out;
}

FibreBundleSample sample_utm_rejection(const SamplingConfig& cfg, const BundleDensity& density) {
  cfg.validate();
  if (!density.base_density || !density.fibre_density || !(density.base_bound > 0.0) ||
      !(density.fibre_bound > 0.0))
    throw Error(ErrorCode::InvalidArgument, "rejection sampling needs both densities and positive bounds");

  auto accept = [](CounterRng& rng, double p, double bound) {
    if (p < 0.0 || p > bound)
      throw Error(ErrorCode::InvalidArgument, "density outside [0, bound]");
    return rng.uniform() * bound < p;
  };

  FibreBundleSample out;
  out.fibres.resize(cfg.n_base);
  CounterRng base_rng(base_stream(cfg.seed));
  for (std::size_t j = 0; j < cfg.n_base; ++j) {
    Vec3 xi;
    do {
      do {
        xi = Vec3(base_rng.normal(), base_rng.normal(), base_rng.normal());
      } while (xi.norm() < 1e-300);
      xi.normalize();
    } while (!accept(base_rng, density.base_density(xi), density.base_bound));
    out.fibres[j].base = xi;
  }
  parallel_for(cfg.n_base, [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j) {
      const Vec3 xi = out.fibres[j].base;
      const auto [e1, e2] = geometry::tangent_frame_s2(xi);
      CounterRng rng(fibre_stream(cfg.seed, j));
      PointMatrix pts(static_cast<Eigen::Index>(cfg.n_fibre), 3);
      for (Eigen::Index s = 0; s < pts.rows(); ++s) {
        Vec3 v;
        do {
          const double a = 2.0 * std::numbers::pi * rng.uniform();
          v = std::cos(a) * e1 + std::sin(a) * e2;
        } while (!accept(rng, density.fibre_density(xi, v), density.fibre_bound));
        pts.row(s) = v.transpose();
      }
      out.fibres[j].points = std::move(pts);
    }
  });
  return out;
}

}  // namespace hdm
