#include "doctest.h"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "hdm/eigensolver.hpp"
#include "hdm/error.hpp"
#include "hdm/laplacian.hpp"
#include "hdm/parallel.hpp"
#include "hdm/spectral.hpp"
#include "test_util.hpp"

using namespace hdm;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Io;
}

SpectralDecomposition full_dense(const Eigen::MatrixXd& a) {
  EigOptions o;
  o.k = a.rows();
  o.method = EigMethod::Dense;
  return eig_sym(SymmetricOperator::from_dense(a), o);
}

double subspace_angle(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::acos(std::min(1.0, std::abs(a.normalized().dot(b.normalized()))));
}

const Eigen::Matrix2d kTwoVertex = (Eigen::Matrix2d() << 1, -1, -1, 1).finished();

}  // namespace

TEST_CASE("eig_sym: two-vertex example") {
  for (auto method : {EigMethod::Dense, EigMethod::Lanczos}) {
    EigOptions o;
    o.k = 2;
    o.method = method;
    const auto d = eig_sym(SymmetricOperator::from_dense(kTwoVertex), o);
    CHECK(std::abs(d.eigenvalues[0]) < 1e-12);
    CHECK(d.eigenvalues[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(std::abs(d.eigenvectors(0, 0)) - 1.0 / std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(d.eigenvectors(0, 0) - d.eigenvectors(1, 0)) < 1e-12);
  }
}

TEST_CASE("eig_sym: random symmetric 50 x 50 against the dense oracle") {
  CounterRng rng(51);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd a = testing::random_symmetric(rng, 50);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(a);
    for (auto which : {Which::Smallest, Which::Largest}) {
      EigOptions o;
      o.k = 50;
      o.which = which;
      o.method = EigMethod::Lanczos;
      o.seed = static_cast<std::uint64_t>(trial);
      const auto d = eig_sym(SymmetricOperator::from_dense(a), o);
      CHECK((d.eigenvalues - ref.eigenvalues()).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((d.eigenvectors.transpose() * d.eigenvectors - Eigen::MatrixXd::Identity(50, 50)).cwiseAbs().maxCoeff() <
            1e-8);
      for (Eigen::Index i = 0; i < 50; ++i) {
        const double gap = std::min(i > 0 ? ref.eigenvalues()[i] - ref.eigenvalues()[i - 1] : 1e300,
                                    i < 49 ? ref.eigenvalues()[i + 1] - ref.eigenvalues()[i] : 1e300);
        if (gap > 1e-3) CHECK(subspace_angle(d.eigenvectors.col(i), ref.eigenvectors().col(i)) < 1e-6);
      }
    }
  }
}

TEST_CASE("eig_sym: partial spectra at both ends, residual contract, sign convention") {
  CounterRng rng(52);
  const Eigen::MatrixXd a = testing::random_symmetric(rng, 300);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(a);
  for (auto which : {Which::Smallest, Which::Largest}) {
    EigOptions o;
    o.k = 12;
    o.which = which;
    o.seed = 3;
    const auto d = eig_sym(SymmetricOperator::from_dense(a), o);
    const Eigen::VectorXd want = which == Which::Smallest ? ref.eigenvalues().head(12) : ref.eigenvalues().tail(12);
    CHECK((d.eigenvalues - want).cwiseAbs().maxCoeff() < 1e-8);
    const double norm = ref.eigenvalues().cwiseAbs().maxCoeff();
    for (Eigen::Index c = 0; c < 12; ++c) {
      const Eigen::VectorXd v = d.eigenvectors.col(c);
      CHECK((a * v - d.eigenvalues[c] * v).norm() <= 1e-9 * norm);
      Eigen::Index big = 0;
      v.cwiseAbs().maxCoeff(&big);
      CHECK(v[big] > 0);
    }
  }
}

TEST_CASE("eig_sym: exact multiplicities are found") {
  // Identity-plus-rank-one: eigenvalue 1 with multiplicity n - 1.
  const Eigen::Index n = 400;
  Eigen::VectorXd u = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) + 3.0 * u * u.transpose();
  EigOptions o;
  o.k = 6;
  o.which = Which::Largest;
  const auto d = eig_sym(SymmetricOperator::from_dense(a), o);
  CHECK(d.eigenvalues[5] == doctest::Approx(4.0));
  for (Eigen::Index c = 0; c < 5; ++c) CHECK(d.eigenvalues[c] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("eig_sym: deterministic and independent of the thread count") {
  CounterRng rng(53);
  const auto w = testing::random_w(rng, testing::random_sizes(rng, 120, 5), 0.05);
  const auto lap = horizontal_laplacians(alpha_normalize(w, 1.0), 1.0);
  EigOptions o;
  o.seed = 9;
  o.method = EigMethod::Lanczos;
  set_thread_count(1);
  const auto a = laplacian_spectrum(lap, 8, o);
  set_thread_count(3);
  const auto b = laplacian_spectrum(lap, 8, o);
  set_thread_count(0);
  CHECK((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff() < 1e-10);
  const auto c = laplacian_spectrum(lap, 8, o);
  CHECK(c.eigenvalues == b.eigenvalues);
}

TEST_CASE("eig_sym: errors") {
  Eigen::MatrixXd ns = Eigen::MatrixXd::Identity(3, 3);
  ns(0, 1) = 1.0;
  EigOptions o;
  o.k = 1;
  CHECK(code_of([&] { eig_sym(SymmetricOperator::from_dense(ns), o); }) == ErrorCode::NotSymmetric);
  o.k = 4;
  CHECK(code_of([&] { eig_sym(SymmetricOperator::from_dense(Eigen::MatrixXd::Identity(3, 3)), o); }) ==
        ErrorCode::InvalidArgument);
  CounterRng rng(54);
  const Eigen::MatrixXd a = testing::random_symmetric(rng, 400);
  o.k = 20;
  o.method = EigMethod::Lanczos;
  o.max_restarts = 1;
  o.ncv = 22;
  CHECK(code_of([&] { eig_sym(SymmetricOperator::from_dense(a), o); }) == ErrorCode::NoConvergence);
}

TEST_CASE("laplacian_spectrum matches the dense L_*") {
  CounterRng rng(55);
  const auto w = testing::random_w(rng, testing::random_sizes(rng, 60, 6), 0.1);
  const auto lap = horizontal_laplacians(alpha_normalize(w, 0.5), 0.5);
  const Eigen::VectorXd ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(lap.lstar_dense()).eigenvalues();
  EigOptions o;
  o.method = EigMethod::Lanczos;
  const auto d = laplacian_spectrum(lap, 10, o);
  CHECK((d.eigenvalues - ref.head(10)).cwiseAbs().maxCoeff() < 1e-9);
  const Eigen::VectorXd v0 = lap.degrees().cwiseSqrt().normalized();
  CHECK(std::abs(std::abs(d.eigenvectors.col(0).dot(v0)) - 1.0) < 1e-9);
  CHECK(default_truncation(lap.size()) == static_cast<Eigen::Index>(std::ceil(std::sqrt(lap.size()))));
}

TEST_CASE("HDM coordinates and HDD on the two-vertex example") {
  const auto d = full_dense(kTwoVertex);
  const auto l = BlockLayout::from_sizes({1, 1});
  const auto h = hdm_coords(d, l, 1.0, 2);
  REQUIRE(h.coords.cols() == 1);
  CHECK(h.coords(0, 0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(h.coords(1, 0) == doctest::Approx(-std::sqrt(2.0)));
  CHECK(hdd(h, 0, 1) == doctest::Approx(2.0 * std::sqrt(2.0)));
  CHECK(hdd(h, 1, 1) == 0.0);
  CHECK(code_of([&] { hdd(h, 0, 2); }) == ErrorCode::IndexOutOfRange);
}

TEST_CASE("HDD is a metric on random embeddings") {
  CounterRng rng(56);
  const Eigen::MatrixXd a = testing::random_psd(rng, 12);
  const auto d = full_dense(a);
  const auto h = hdm_coords(d, BlockLayout::from_sizes({4, 5, 3}), 1.5, 12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = rng.below(12), q = rng.below(12), r = rng.below(12);
    CHECK(hdd(h, p, q) == hdd(h, q, p));
    CHECK(hdd(h, p, r) <= hdd(h, p, q) + hdd(h, q, r) + 1e-12);
  }
}

TEST_CASE("HBDM: single pair, zero spectrum, errors") {
  SpectralDecomposition one;
  one.eigenvalues = Eigen::VectorXd::Constant(1, 0.3);
  one.eigenvectors = (Eigen::MatrixXd(3, 1) << 0.6, 0.0, 0.8).finished();
  one.residuals = Eigen::VectorXd::Zero(1);
  const auto l = BlockLayout::from_sizes({2, 1});
  const auto f = hbdm_features(one, l, 2.0, 1);
  CHECK(f.features(0, 0) == doctest::Approx(0.09 * 0.36));
  CHECK(f.features(1, 0) == doctest::Approx(0.09 * 0.64));

  SpectralDecomposition zero = one;
  zero.eigenvalues.setZero();
  CHECK(hbdm_features(zero, l, 1.0, 1).features.cwiseAbs().maxCoeff() == 0.0);

  SpectralDecomposition neg = one;
  neg.eigenvalues[0] = -1e-6;
  CHECK(code_of([&] { hbdm_features(neg, l, 1.0, 1); }) == ErrorCode::NegativeEigenvalue);
  neg.eigenvalues[0] = -1e-13;  // inside the clamp
  CHECK(hbdm_features(neg, l, 1.0, 1).features.cwiseAbs().maxCoeff() == 0.0);
  CHECK(code_of([&] { hbdm_features(one, l, 0.0, 1); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { hbdm_features(one, l, 1.0, 2); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { hbdm_features(one, BlockLayout::from_sizes({1, 1}), 1.0, 1); }) == ErrorCode::SizeMismatch);
}

TEST_CASE("HBDM: Frobenius identity and HBDD on small dense examples") {
  CounterRng rng(57);
  {
    const Eigen::MatrixXd a = testing::random_psd(rng, 4);
    const auto l = BlockLayout::from_sizes({2, 2});
    const auto f = hbdm_features(full_dense(a), l, 3.0, 4);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        const double ip = f.features.row(i).dot(f.features.row(j));
        const double ref = std::pow(block_power_frobenius(a, l, 3, i, j), 2);
        CHECK(std::abs(ip - ref) < 1e-10 * std::max(1.0, ref));
      }
    const double fii = std::pow(block_power_frobenius(a, l, 3, 0, 0), 2);
    const double fjj = std::pow(block_power_frobenius(a, l, 3, 1, 1), 2);
    const double fij = std::pow(block_power_frobenius(a, l, 3, 0, 1), 2);
    CHECK(hbdd(f, 0, 1) == doctest::Approx(std::sqrt(fii + fjj - 2 * fij)).epsilon(1e-8));
    CHECK(std::abs(hbdd(f, 0, 1) - hbdd_expanded(f, 0, 1)) < 1e-10);
    CHECK(hbdd(f, 1, 1) == 0.0);
  }
  {
    // Two fibres with identical eigenvector segments have equal features.
    SpectralDecomposition d;
    d.eigenvalues = Eigen::Vector2d(0.5, 1.5);
    d.eigenvectors = (Eigen::MatrixXd(4, 2) << 0.5, 0.5, 0.5, -0.5, 0.5, 0.5, 0.5, -0.5).finished();
    d.residuals = Eigen::Vector2d::Zero();
    const auto f = hbdm_features(d, BlockLayout::from_sizes({2, 2}), 1.0, 2);
    CHECK(hbdd(f, 0, 1) == 0.0);
  }
}

TEST_CASE("block power Frobenius oracle") {
  CounterRng rng(58);
  const auto l = BlockLayout::from_sizes({3, 5});
  const Eigen::MatrixXd a = testing::random_psd(rng, 8);
  CHECK(block_power_frobenius(a, l, 1, 0, 1) == doctest::Approx(a.block(0, 3, 3, 5).norm()));
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(8, 8);
  CHECK(block_power_frobenius(id, l, 3, 1, 1) == doctest::Approx(std::sqrt(5.0)));
  CHECK(block_power_frobenius(id, l, 3, 0, 1) == 0.0);

  // Spectral formula sum_l sum_m lambda_l^t lambda_m^t <v_l[i], v_m[i]> <v_l[j], v_m[j]>.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::VectorXd lt = es.eigenvalues().array().pow(4.0);
  const Eigen::MatrixXd gi = es.eigenvectors().topRows(3).transpose() * es.eigenvectors().topRows(3);
  const Eigen::MatrixXd gj = es.eigenvectors().bottomRows(5).transpose() * es.eigenvectors().bottomRows(5);
  const double spectral = (lt.asDiagonal() * gi * lt.asDiagonal()).cwiseProduct(gj).sum();
  CHECK(std::abs(std::pow(block_power_frobenius(a, l, 4, 0, 1), 2) - spectral) < 1e-10 * std::max(1.0, spectral));

  CHECK(code_of([&] { block_power_frobenius(Eigen::MatrixXd::Identity(513, 513), BlockLayout::from_sizes({513}), 1, 0, 0); }) ==
        ErrorCode::ScaleTooLarge);
  CHECK(code_of([&] { block_power_frobenius(a, l, 0, 0, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("HBDM truncation never decreases diagonal features on PSD input") {
  CounterRng rng(59);
  const Eigen::MatrixXd a = testing::random_psd(rng, 20);
  const auto d = full_dense(a);
  const auto l = BlockLayout::from_sizes({6, 8, 6});
  std::vector<double> prev(3, 0.0);
  for (Eigen::Index k = 1; k <= 20; ++k) {
    const auto f = hbdm_features(d, l, 2.0, k);
    for (std::size_t j = 0; j < 3; ++j) {
      const double diag = f.features.row(j).squaredNorm();
      CHECK(diag >= prev[j] - 1e-14);
      prev[j] = diag;
    }
  }
}

TEST_CASE("diffusion mode weights mu^t and rejects fractional powers of negative mu") {
  const auto d = full_dense(kTwoVertex);  // lambda = (0, 2), mu = (1, -1)
  const auto l = BlockLayout::from_sizes({1, 1});
  const auto h = hdm_coords(d, l, 2.0, 2, SpectrumMode::Diffusion);
  CHECK(h.coords(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(code_of([&] { hdm_coords(d, l, 1.5, 2, SpectrumMode::Diffusion); }) == ErrorCode::InvalidArgument);
  CHECK(parse_spectrum_mode("diffusion") == SpectrumMode::Diffusion);
  CHECK(to_string(SpectrumMode::LaplacianLiteral) == "laplacian-literal");
  CHECK(code_of([] { parse_spectrum_mode("nope"); }) == ErrorCode::InvalidArgument);
}
