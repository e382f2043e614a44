#include "hdm/geometry.hpp"

#include <cmath>
#include <string>

#include "hdm/error.hpp"
#include "hdm/rng.hpp"

namespace hdm::geometry {

void require_unit(const Eigen::Ref<const Eigen::VectorXd>& x, const char* what) {
  const double n = x.norm();
  if (!(std::abs(n - 1.0) <= kUnitTol))
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " is not a unit vector (norm " +
                                                std::to_string(n) + ")");
}

Mat3 transport_rotation(const Vec3& xi, const Vec3& xj) {
  if ((xi + xj).norm() < kAntipodalTol)
    throw Error(ErrorCode::AntipodalPoints, "transport between antipodal points is not unique");
  const Vec3 axis = xi.cross(xj);  // |axis| = sin(angle)
  const double c = xi.dot(xj);
  Mat3 skew;
  skew << 0.0, -axis.z(), axis.y(), axis.z(), 0.0, -axis.x(), -axis.y(), axis.x(), 0.0;
  // (1 - cos) / sin^2 = 1 / (1 + cos)
  return c * Mat3::Identity() + skew + axis * axis.transpose() / (1.0 + c);
}

Vec3 parallel_transport_s2(const Vec3& xi, const Vec3& xj, const Vec3& v) {
  require_unit(xi, "xi");
  require_unit(xj, "xj");
  if (std::abs(xi.dot(v)) > kTangentTol)
    throw Error(ErrorCode::NotTangent, "v is not tangent at xi");
  return transport_rotation(xi, xj) * v;
}

std::pair<Vec3, Vec3> tangent_frame_s2(const Vec3& x) {
  require_unit(x, "x");
  Eigen::Index axis = 0;
  x.cwiseAbs().minCoeff(&axis);
  Vec3 e1 = Vec3::Unit(axis) - x[axis] * x;
  e1.normalize();
  Vec3 e2 = x.cross(e1);
  e2.normalize();
  return {e1, e2};
}

Eigen::MatrixXd uniform_sphere_sample(int d, std::size_t n, std::uint64_t seed) {
  if (d < 1) throw Error(ErrorCode::InvalidArgument, "sphere dimension must be >= 1");
  CounterRng rng(seed);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    if (d == 1) {
      out(i, 0) = (rng() >> 63) ? 1.0 : -1.0;
      continue;
    }
    double norm = 0.0;
    do {
      for (int c = 0; c < d; ++c) out(i, c) = rng.normal();
      norm = out.row(i).norm();
    } while (norm < 1e-300);
    out.row(i) /= norm;
  }
  return out;
}

}  // namespace hdm::geometry
