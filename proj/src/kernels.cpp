#include "hdm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "hdm/error.hpp"
#include "hdm/geometry.hpp"
#include "hdm/knn.hpp"
#include "hdm/parallel.hpp"

namespace hdm {

void KernelSpec::validate() const {
  if (!(eps > 0.0) || std::isnan(eps) || std::isinf(eps))
    throw Error(ErrorCode::InvalidArgument, "eps must be a positive finite number");
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
}

double coupled_weight(double base_dist2, double fibre_dist2, const KernelSpec& spec) {
  const double b = base_dist2 / spec.eps;
  const double f = std::isinf(spec.delta) ? 0.0 : fibre_dist2 / spec.delta;
  switch (spec.shape) {
    case KernelShape::Gaussian:
      return std::exp(-(b + f));
    case KernelShape::TruncatedGaussian:
      return (b <= 1.0 && f <= 1.0) ? std::exp(-(b + f)) : 0.0;
    case KernelShape::EpanechnikovProduct:
      return (b <= 1.0 && f <= 1.0) ? (1.0 - b) * (1.0 - f) : 0.0;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// HorizontalDiffusionMatrix

HorizontalDiffusionMatrix::HorizontalDiffusionMatrix(BlockLayout layout, std::vector<Block> blocks)
    : layout_(std::move(layout)), blocks_(std::move(blocks)) {
  const std::size_t nf = layout_.fibre_count();
  incidence_.assign(nf, {});
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const Block& blk = blocks_[b];
    if (blk.i >= nf || blk.j >= nf) throw Error(ErrorCode::IndexOutOfRange, "block index beyond the fibre count");
    if (blk.i >= blk.j) throw Error(ErrorCode::InvalidArgument, "blocks must satisfy i < j");
    if (b > 0 && !(std::pair(blocks_[b - 1].i, blocks_[b - 1].j) < std::pair(blk.i, blk.j)))
      throw Error(ErrorCode::InvalidArgument, "blocks must be sorted and unique");
    if (static_cast<std::size_t>(blk.values.rows()) != layout_.sizes[blk.i] ||
        static_cast<std::size_t>(blk.values.cols()) != layout_.sizes[blk.j])
      throw Error(ErrorCode::SizeMismatch, "block shape does not match fibre sizes");
    if (blk.values.size() > 0 && !(blk.values.minCoeff() >= 0.0))
      throw Error(ErrorCode::NegativeWeight, "negative or NaN kernel weight");
    incidence_[blk.i].push_back({static_cast<std::uint32_t>(b), true});
    incidence_[blk.j].push_back({static_cast<std::uint32_t>(b), false});
  }
}

std::vector<BaseEdge> HorizontalDiffusionMatrix::base_edges() const {
  std::vector<BaseEdge> out;
  out.reserve(blocks_.size());
  for (const auto& b : blocks_) out.emplace_back(b.i, b.j);
  return out;
}

double HorizontalDiffusionMatrix::entry(std::size_t u, std::size_t v) const {
  std::size_t fu = layout_.fibre_of(u), fv = layout_.fibre_of(v);
  std::size_t ru = u - layout_.offsets[fu], rv = v - layout_.offsets[fv];
  if (fu == fv) return 0.0;
  if (fu > fv) {
    std::swap(fu, fv);
    std::swap(ru, rv);
  }
  auto it = std::lower_bound(blocks_.begin(), blocks_.end(), std::pair(fu, fv),
                             [](const Block& b, const std::pair<std::size_t, std::size_t>& key) {
                               return std::pair<std::size_t, std::size_t>(b.i, b.j) < key;
                             });
  if (it == blocks_.end() || it->i != fu || it->j != fv) return 0.0;
  return it->values(static_cast<Eigen::Index>(ru), static_cast<Eigen::Index>(rv));
}

std::size_t HorizontalDiffusionMatrix::nonzeros() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += static_cast<std::size_t>((b.values.array() != 0.0).count());
  return 2 * n;
}

void HorizontalDiffusionMatrix::multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  if (static_cast<std::size_t>(x.size()) != size())
    throw Error(ErrorCode::SizeMismatch, "vector length differs from matrix size");
  y.setZero(x.size());
  parallel_for(layout_.fibre_count(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t f = begin; f < end; ++f) {
      auto out = y.segment(static_cast<Eigen::Index>(layout_.offsets[f]),
                           static_cast<Eigen::Index>(layout_.sizes[f]));
      for (const auto& inc : incidence_[f]) {
        const Block& b = blocks_[inc.block];
        if (inc.as_row) {
          out.noalias() += b.values * x.segment(static_cast<Eigen::Index>(layout_.offsets[b.j]),
                                                static_cast<Eigen::Index>(layout_.sizes[b.j]));
        } else {
          out.noalias() += b.values.transpose() *
                           x.segment(static_cast<Eigen::Index>(layout_.offsets[b.i]),
                                     static_cast<Eigen::Index>(layout_.sizes[b.i]));
        }
      }
    }
  });
}

Eigen::VectorXd HorizontalDiffusionMatrix::row_sums() const {
  Eigen::VectorXd y;
  multiply(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(size())), y);
  return y;
}

HorizontalDiffusionMatrix HorizontalDiffusionMatrix::scaled(const Eigen::VectorXd& s) const {
  HorizontalDiffusionMatrix out = *this;
  out.scale_in_place(s);
  return out;
}

void HorizontalDiffusionMatrix::scale_in_place(const Eigen::VectorXd& s) {
  if (static_cast<std::size_t>(s.size()) != size())
    throw Error(ErrorCode::SizeMismatch, "scale vector length differs from matrix size");
  parallel_for(blocks_.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      Block& b = blocks_[k];
      const auto si = s.segment(static_cast<Eigen::Index>(layout_.offsets[b.i]), b.values.rows());
      const auto sj = s.segment(static_cast<Eigen::Index>(layout_.offsets[b.j]), b.values.cols());
      b.values = si.asDiagonal() * b.values * sj.asDiagonal();
    }
  });
}

bool HorizontalDiffusionMatrix::connected() const {
  const std::size_t n = size();
  if (n <= 1) return true;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  std::size_t components = n;
  for (const auto& b : blocks_) {
    const std::size_t oi = layout_.offsets[b.i], oj = layout_.offsets[b.j];
    for (Eigen::Index c = 0; c < b.values.cols(); ++c)
      for (Eigen::Index r = 0; r < b.values.rows(); ++r) {
        if (b.values(r, c) == 0.0) continue;
        const std::size_t ra = find(oi + static_cast<std::size_t>(r));
        const std::size_t rb = find(oj + static_cast<std::size_t>(c));
        if (ra != rb) {
          parent[ra] = rb;
          --components;
        }
      }
  }
  return components == 1;
}

Eigen::SparseMatrix<double> HorizontalDiffusionMatrix::to_sparse() const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(nonzeros());
  for (const auto& b : blocks_) {
    const auto oi = static_cast<int>(layout_.offsets[b.i]), oj = static_cast<int>(layout_.offsets[b.j]);
    for (Eigen::Index c = 0; c < b.values.cols(); ++c)
      for (Eigen::Index r = 0; r < b.values.rows(); ++r) {
        const double w = b.values(r, c);
        if (w == 0.0) continue;
        trips.emplace_back(oi + static_cast<int>(r), oj + static_cast<int>(c), w);
        trips.emplace_back(oj + static_cast<int>(c), oi + static_cast<int>(r), w);
      }
  }
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

Eigen::MatrixXd HorizontalDiffusionMatrix::to_dense(std::size_t max_size) const {
  if (size() > max_size)
    throw Error(ErrorCode::ScaleTooLarge, "dense copy of a " + std::to_string(size()) + "-point matrix");
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (const auto& b : blocks_) {
    const auto oi = static_cast<Eigen::Index>(layout_.offsets[b.i]);
    const auto oj = static_cast<Eigen::Index>(layout_.offsets[b.j]);
    m.block(oi, oj, b.values.rows(), b.values.cols()) = b.values;
    m.block(oj, oi, b.values.cols(), b.values.rows()) = b.values.transpose();
  }
  return m;
}

// ---------------------------------------------------------------------------
// Builders

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mutual_rank_mask(const Eigen::MatrixXd& dist2,
                                                                     std::size_t k) {
  const Eigen::Index rows = dist2.rows(), cols = dist2.cols();
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> row_ok =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(rows, cols, false);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> col_ok = row_ok;

  std::vector<Eigen::Index> idx;
  auto select = [&](Eigen::Index n, auto&& value, auto&& mark) {
    idx.resize(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    const auto take = static_cast<std::ptrdiff_t>(std::min<std::size_t>(k, static_cast<std::size_t>(n)));
    if (take < n)
      std::nth_element(idx.begin(), idx.begin() + take, idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        const double va = value(a), vb = value(b);
        return va < vb || (va == vb && a < b);
      });
    for (std::ptrdiff_t t = 0; t < take; ++t) mark(idx[static_cast<std::size_t>(t)]);
  };
  for (Eigen::Index r = 0; r < rows; ++r)
    select(cols, [&](Eigen::Index c) { return dist2(r, c); }, [&](Eigen::Index c) { row_ok(r, c) = true; });
  for (Eigen::Index c = 0; c < cols; ++c)
    select(rows, [&](Eigen::Index r) { return dist2(r, c); }, [&](Eigen::Index r) { col_ok(r, c) = true; });
  return row_ok.array() && col_ok.array();
}

namespace {

void check_neighbor_counts(const FibreBundleSample& sample, std::size_t k_base, std::size_t k_fibre) {
  if (k_base < 1 || k_base >= sample.fibre_count())
    throw Error(ErrorCode::InvalidArgument, "K_B must satisfy 1 <= K_B < N_B");
  if (k_fibre < 1) throw Error(ErrorCode::InvalidArgument, "K_F must be positive");
  for (const auto& f : sample.fibres)
    if (k_fibre > static_cast<std::size_t>(f.points.rows()))
      throw Error(ErrorCode::InvalidArgument, "K_F exceeds a fibre size");
}

template <typename FibreDist2>
HorizontalDiffusionMatrix assemble(const FibreBundleSample& sample, const std::vector<BaseEdge>& edges,
                                   std::size_t k_fibre, const KernelSpec& spec, FibreDist2&& fibre_dist2) {
  const PointMatrix bases = sample.base_points();
  std::vector<HorizontalDiffusionMatrix::Block> blocks(edges.size());
  // Each unordered pair is assembled exactly once, so symmetry is exact.
  parallel_for(edges.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t e = begin; e < end; ++e) {
      const auto [i, j] = edges[e];
      const double base_d2 = (bases.row(i) - bases.row(j)).squaredNorm();
      const Eigen::MatrixXd d2 = fibre_dist2(e, i, j);
      const auto mask = mutual_rank_mask(d2, k_fibre);
      Eigen::MatrixXd values(d2.rows(), d2.cols());
      for (Eigen::Index c = 0; c < d2.cols(); ++c)
        for (Eigen::Index r = 0; r < d2.rows(); ++r)
          values(r, c) = mask(r, c) ? coupled_weight(base_d2, d2(r, c), spec) : 0.0;
      blocks[e] = {i, j, std::move(values)};
    }
  });
  // Entries are only gated, not pruned: truncated shapes may leave all-zero blocks in place.
  HorizontalDiffusionMatrix w(sample.layout(), std::move(blocks));
  if (!w.connected())
    throw Error(ErrorCode::DisconnectedGraph, "the horizontal diffusion graph is not connected");
  return w;
}

// Pairwise squared distances between rows of a and rows of b.
Eigen::MatrixXd cross_dist2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd d2(a.rows(), b.rows());
  for (Eigen::Index s = 0; s < b.rows(); ++s)
    for (Eigen::Index r = 0; r < a.rows(); ++r) d2(r, s) = (a.row(r) - b.row(s)).squaredNorm();
  return d2;
}

}  // namespace

HorizontalDiffusionMatrix build_w_noiseless(const FibreBundleSample& sample, std::size_t k_base,
                                            std::size_t k_fibre, const KernelSpec& spec) {
  spec.validate();
  check_neighbor_counts(sample, k_base, k_fibre);
  const PointMatrix bases = sample.base_points();
  if (bases.cols() != 3) throw Error(ErrorCode::InvalidArgument, "noiseless build needs base points in R^3");
  for (const auto& f : sample.fibres) {
    geometry::require_unit(f.base, "base point");
    if (f.points.cols() != 3) throw Error(ErrorCode::InvalidArgument, "fibre points must lie in R^3");
  }
  const auto edges = mutual_knn_edges(NeighborIndex(bases), k_base);
  return assemble(sample, edges, k_fibre, spec, [&](std::size_t, std::uint32_t i, std::uint32_t j) {
    const geometry::Mat3 rot = geometry::transport_rotation(sample.fibres[i].base, sample.fibres[j].base);
    const Eigen::MatrixXd moved = sample.fibres[i].points * rot.transpose();
    return cross_dist2(moved, sample.fibres[j].points);
  });
}

HorizontalDiffusionMatrix build_w_empirical(const EmpiricalFibreSample& sample,
                                            const std::vector<TransportEstimate>& transports,
                                            std::size_t k_base, std::size_t k_fibre,
                                            const KernelSpec& spec) {
  spec.validate();
  const FibreBundleSample& fb = sample.sample;
  check_neighbor_counts(fb, k_base, k_fibre);
  if (sample.coefficients.size() != fb.fibre_count())
    throw Error(ErrorCode::SizeMismatch, "one coefficient matrix per fibre is required");
  const auto edges = mutual_knn_edges(NeighborIndex(fb.base_points()), k_base);

  std::map<BaseEdge, const TransportEstimate*> lookup;
  for (const auto& t : transports) lookup[{t.i, t.j}] = &t;
  std::vector<Eigen::MatrixXd> o_ji(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [i, j] = edges[e];
    if (auto it = lookup.find({i, j}); it != lookup.end()) {
      o_ji[e] = it->second->O;
    } else if (auto rev = lookup.find({j, i}); rev != lookup.end()) {
      o_ji[e] = rev->second->O.transpose();
    } else {
      throw Error(ErrorCode::InvalidArgument,
                  "no transport estimate for base edge (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
  }
  return assemble(fb, edges, k_fibre, spec, [&](std::size_t e, std::uint32_t i, std::uint32_t j) {
    const Eigen::MatrixXd moved = sample.coefficients[i] * o_ji[e].transpose();
    return cross_dist2(moved, sample.coefficients[j]);
  });
}

HorizontalDiffusionMatrix build_w_from_blocks(const std::vector<std::size_t>& fibre_sizes,
                                              const std::vector<CorrespondenceBlock>& blocks,
                                              const Eigen::MatrixXd& base_dists,
                                              std::size_t n_neighbors, double eps_base) {
  if (!(eps_base > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps_B must be positive");
  BlockLayout layout = BlockLayout::from_sizes(fibre_sizes);
  const std::size_t nf = fibre_sizes.size();
  if (n_neighbors < 1) throw Error(ErrorCode::InvalidArgument, "n_neighbors must be at least 1");

  // Orient every block as (min, max) and check paired blocks agree.
  std::map<BaseEdge, Eigen::MatrixXd> rho;
  std::map<BaseEdge, double> block_dist;
  std::map<BaseEdge, int> seen;
  for (const auto& blk : blocks) {
    if (blk.i >= nf || blk.j >= nf) throw Error(ErrorCode::IndexOutOfRange, "block refers to a missing fibre");
    if (blk.i == blk.j) throw Error(ErrorCode::InvalidArgument, "diagonal correspondence blocks are not allowed");
    if (static_cast<std::size_t>(blk.rho.rows()) != fibre_sizes[blk.i] ||
        static_cast<std::size_t>(blk.rho.cols()) != fibre_sizes[blk.j])
      throw Error(ErrorCode::SizeMismatch, "correspondence block shape does not match fibre sizes");
    Eigen::MatrixXd dense = Eigen::MatrixXd(blk.rho);
    if (dense.size() > 0 && !(dense.minCoeff() >= 0.0))
      throw Error(ErrorCode::NegativeWeight, "negative correspondence weight");
    if (blk.base_distance && !(*blk.base_distance >= 0.0))
      throw Error(ErrorCode::NegativeWeight, "negative base distance");
    const bool flip = blk.i > blk.j;
    const BaseEdge key = flip ? BaseEdge{blk.j, blk.i} : BaseEdge{blk.i, blk.j};
    if (flip) dense.transposeInPlace();
    const int dir = flip ? 2 : 1;
    if (seen[key] & dir) throw Error(ErrorCode::InvalidArgument, "duplicate correspondence block");
    if (seen[key] != 0) {
      if ((rho[key] - dense).cwiseAbs().maxCoeff() > 1e-12)
        throw Error(ErrorCode::AsymmetricBlocks, "rho_ji differs from rho_ij^T");
      if (blk.base_distance && block_dist.count(key) && std::abs(block_dist[key] - *blk.base_distance) > 1e-12)
        throw Error(ErrorCode::AsymmetricBlocks, "paired blocks disagree on the base distance");
    } else {
      rho[key] = std::move(dense);
    }
    if (blk.base_distance) block_dist[key] = *blk.base_distance;
    seen[key] |= dir;
  }

  // Base distances: explicit matrix, else the distances attached to blocks.
  Eigen::MatrixXd dist;
  if (base_dists.size() > 0) {
    if (static_cast<std::size_t>(base_dists.rows()) != nf || static_cast<std::size_t>(base_dists.cols()) != nf)
      throw Error(ErrorCode::SizeMismatch, "base distance matrix must be fibre count square");
    if ((base_dists - base_dists.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw Error(ErrorCode::AsymmetricBlocks, "base distances are not symmetric");
    if (!(base_dists.minCoeff() >= 0.0)) throw Error(ErrorCode::NegativeWeight, "negative base distance");
    dist = base_dists;
  } else {
    dist = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(nf), static_cast<Eigen::Index>(nf),
                                     std::numeric_limits<double>::infinity());
    for (const auto& [key, d] : block_dist) dist(key.first, key.second) = dist(key.second, key.first) = d;
    for (const auto& [key, m] : rho)
      if (!block_dist.count(key))
        throw Error(ErrorCode::InvalidArgument, "block without base distance and no base distance matrix");
  }

  std::vector<std::vector<std::uint32_t>> near(nf);
  for (std::size_t i = 0; i < nf; ++i) {
    std::vector<std::uint32_t> order;
    for (std::uint32_t j = 0; j < nf; ++j)
      if (j != i && std::isfinite(dist(static_cast<Eigen::Index>(i), j))) order.push_back(j);
    const auto take = static_cast<std::ptrdiff_t>(std::min(n_neighbors, order.size()));
    std::partial_sort(order.begin(), order.begin() + take, order.end(), [&](std::uint32_t a, std::uint32_t b) {
      const double da = dist(static_cast<Eigen::Index>(i), a), db = dist(static_cast<Eigen::Index>(i), b);
      return da < db || (da == db && a < b);
    });
    order.resize(static_cast<std::size_t>(take));
    std::sort(order.begin(), order.end());
    near[i] = std::move(order);
  }
  auto is_near = [&](std::size_t i, std::uint32_t j) {
    return std::binary_search(near[i].begin(), near[i].end(), j);
  };

  std::vector<HorizontalDiffusionMatrix::Block> out;
  for (const auto& [key, m] : rho) {
    const auto [i, j] = key;
    if (!is_near(i, j) || !is_near(j, i)) continue;
    const double d = dist(i, j);
    out.push_back({i, j, std::exp(-d * d / eps_base) * m});
  }
  return HorizontalDiffusionMatrix(std::move(layout), std::move(out));
}

}  // namespace hdm
