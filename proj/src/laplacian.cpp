#include "hdm/laplacian.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "hdm/error.hpp"

namespace hdm {

namespace {

Eigen::VectorXd positive_degrees(const HorizontalDiffusionMatrix& w) {
  Eigen::VectorXd deg = w.row_sums();
  for (Eigen::Index u = 0; u < deg.size(); ++u)
    if (!(deg[u] > 0.0))
      throw Error(ErrorCode::ZeroDegreeVertex, "point " + std::to_string(u) + " has no positive weight");
  return deg;
}

}  // namespace

HorizontalDiffusionMatrix alpha_normalize(HorizontalDiffusionMatrix w, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
  const Eigen::VectorXd deg = positive_degrees(w);
  if (alpha == 0.0) return w;
  w.scale_in_place(deg.array().pow(-alpha).matrix());
  return w;
}

LaplacianBundle::LaplacianBundle(HorizontalDiffusionMatrix w_alpha, double alpha)
    : w_(std::move(w_alpha)), alpha_(alpha) {
  degrees_ = positive_degrees(w_);
  inv_sqrt_degrees_ = degrees_.array().rsqrt();
}

Eigen::VectorXd LaplacianBundle::apply_lh(const Eigen::VectorXd& x) const {
  Eigen::VectorXd wx;
  w_.multiply(x, wx);
  return degrees_.cwiseProduct(x) - wx;
}

Eigen::VectorXd LaplacianBundle::apply_random_walk(const Eigen::VectorXd& x) const {
  Eigen::VectorXd wx;
  w_.multiply(x, wx);
  return wx.cwiseQuotient(degrees_);
}

Eigen::VectorXd LaplacianBundle::apply_lrw(const Eigen::VectorXd& x) const { return x - apply_random_walk(x); }

Eigen::VectorXd LaplacianBundle::apply_normalized_adjacency(const Eigen::VectorXd& x) const {
  Eigen::VectorXd wx;
  w_.multiply(inv_sqrt_degrees_.cwiseProduct(x), wx);
  return inv_sqrt_degrees_.cwiseProduct(wx);
}

Eigen::VectorXd LaplacianBundle::apply_lstar(const Eigen::VectorXd& x) const {
  return x - apply_normalized_adjacency(x);
}

Eigen::SparseMatrix<double> LaplacianBundle::lh_sparse() const {
  Eigen::SparseMatrix<double> l = -w_.to_sparse();
  for (Eigen::Index u = 0; u < degrees_.size(); ++u) l.coeffRef(u, u) += degrees_[u];
  l.makeCompressed();
  return l;
}

Eigen::MatrixXd LaplacianBundle::lh_dense(std::size_t max_size) const {
  Eigen::MatrixXd l = -w_.to_dense(max_size);
  l.diagonal() += degrees_;
  return l;
}

Eigen::MatrixXd LaplacianBundle::lrw_dense(std::size_t max_size) const {
  Eigen::MatrixXd l = -(degrees_.cwiseInverse().asDiagonal() * w_.to_dense(max_size));
  l.diagonal().array() += 1.0;
  return l;
}

Eigen::MatrixXd LaplacianBundle::lstar_dense(std::size_t max_size) const {
  Eigen::MatrixXd l =
      -(inv_sqrt_degrees_.asDiagonal() * w_.to_dense(max_size) * inv_sqrt_degrees_.asDiagonal());
  l.diagonal().array() += 1.0;
  return l;
}

LaplacianBundle horizontal_laplacians(HorizontalDiffusionMatrix w_alpha, double alpha) {
  positive_degrees(w_alpha);
  if (!w_alpha.connected())
    throw Error(ErrorCode::DisconnectedGraph, "graph horizontal Laplacian of a disconnected graph");
  return LaplacianBundle(std::move(w_alpha), alpha);
}

void write_triplets(std::ostream& os, const Eigen::SparseMatrix<double>& m) {
  const auto old = os.precision(17);
  for (Eigen::Index c = 0; c < m.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, c); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  os.precision(old);
}

Eigen::SparseMatrix<double> read_triplets(std::istream& is, Eigen::Index n) {
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::Index max_index = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::istringstream ls(line);
    long long r = 0, c = 0;
    double v = 0.0;
    if (!(ls >> r >> c >> v) || r < 0 || c < 0)
      throw Error(ErrorCode::InvalidArgument, "malformed triplet on line " + std::to_string(line_no));
    max_index = std::max<Eigen::Index>(max_index, std::max(r, c));
    trips.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
  }
  const Eigen::Index size = n > 0 ? n : max_index + 1;
  if (max_index >= size) throw Error(ErrorCode::IndexOutOfRange, "triplet index exceeds matrix size");
  Eigen::SparseMatrix<double> m(size, size);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

}  // namespace hdm
