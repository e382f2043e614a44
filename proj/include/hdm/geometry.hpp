#pragma once

#include <cstdint>
#include <utility>

#include <Eigen/Dense>

namespace hdm::geometry {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kUnitTol = 1e-12;
inline constexpr double kTangentTol = 1e-10;
inline constexpr double kAntipodalTol = 1e-8;

/// Throws InvalidArgument unless |x| = 1 within kUnitTol.
void require_unit(const Eigen::Ref<const Eigen::VectorXd>& x, const char* what);

/// Rotation about xi x xj taking xi to xj (Rodrigues form, written without
/// normalizing the axis so the identity case needs no branch).
/// Throws AntipodalPoints when |xi + xj| < kAntipodalTol.
Mat3 transport_rotation(const Vec3& xi, const Vec3& xj);

/// Parallel transport of the tangent vector v at xi to the tangent plane at xj
/// along the connecting great circle.
Vec3 parallel_transport_s2(const Vec3& xi, const Vec3& xj, const Vec3& v);

/// Deterministic orthonormal tangent frame (e1, e2) at x with e1 x e2 = x.
/// e1 is Gram-Schmidt applied to the coordinate axis where |x| is smallest.
std::pair<Vec3, Vec3> tangent_frame_s2(const Vec3& x);

/// n i.i.d. uniform points on S^{d-1}, one per row.
Eigen::MatrixXd uniform_sphere_sample(int d, std::size_t n, std::uint64_t seed);

}  // namespace hdm::geometry
