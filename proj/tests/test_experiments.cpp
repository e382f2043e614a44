#include "doctest.h"

#include <cmath>

#include "hdm/error.hpp"
#include "hdm/experiments.hpp"

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

std::vector<std::size_t> sizes_of(const std::vector<EigenGroup>& groups) {
  std::vector<std::size_t> out;
  for (const auto& g : groups) out.push_back(g.size);
  return out;
}

std::vector<EigenGroup> groups_of(const std::vector<std::size_t>& sizes) {
  std::vector<EigenGroup> out;
  std::size_t first = 0;
  for (auto s : sizes) {
    out.push_back({first, s, static_cast<double>(out.size())});
    first += s;
  }
  return out;
}

So3Config small_config() {
  So3Config cfg;
  cfg.n_base = 200;
  cfg.n_fibre = 8;
  cfg.k_base = 30;
  cfg.k_fibre = 6;
  cfg.eps = 0.3;
  cfg.n_eigs = 10;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("eigenvalue grouping") {
  const std::vector<double> ev{0.0, 1.0, 1.01, 0.99 + 0.03, 3.0, 3.05, 2.98 + 0.1};
  std::vector<double> sorted = ev;
  std::sort(sorted.begin(), sorted.end());
  const auto g = group_eigenvalues(sorted, 0.1);
  CHECK(sizes_of(g) == std::vector<std::size_t>{1, 3, 3});
  CHECK(g[1].first == 1);
  CHECK(g[1].mean == doctest::Approx((1.0 + 1.01 + 1.02) / 3));
  CHECK(group_eigenvalues({}, 0.1).empty());
  CHECK(sizes_of(group_eigenvalues({2.0}, 0.1)) == std::vector<std::size_t>{1});
  // Equal values always stay together; a huge tolerance merges everything.
  CHECK(sizes_of(group_eigenvalues({1, 1, 1, 1}, 1e-9)) == std::vector<std::size_t>{4});
  CHECK(sizes_of(group_eigenvalues({0, 1, 2, 3}, 10.0)) == std::vector<std::size_t>{4});
  CHECK(code_of([] { group_eigenvalues({1.0, 0.5}, 0.1); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { group_eigenvalues({0.0, 1.0}, 0.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("regime signatures and classification") {
  CHECK(regime_signature(Regime::Horizontal) == std::vector<std::size_t>{1, 6, 13});
  CHECK(regime_signature(Regime::Total) == std::vector<std::size_t>{1, 9, 25});
  CHECK(regime_signature(Regime::Base) == std::vector<std::size_t>{1, 3, 5});
  CHECK(regime_signature(Regime::Unclassified).empty());
  CHECK(classify_regime(groups_of({1, 6, 13, 16})) == Regime::Horizontal);
  CHECK(classify_regime(groups_of({1, 9, 25, 1})) == Regime::Total);
  CHECK(classify_regime(groups_of({1, 3, 5, 7})) == Regime::Base);
  CHECK(classify_regime(groups_of({1, 3, 4})) == Regime::Unclassified);
  CHECK(classify_regime(groups_of({1, 6})) == Regime::Unclassified);
  CHECK(signature_score(groups_of({1, 6, 12}), Regime::Horizontal) == 2);
  CHECK(signature_score(groups_of({2, 6, 13}), Regime::Horizontal) == 0);
  for (auto r : {Regime::Horizontal, Regime::Total, Regime::Base}) CHECK(parse_regime(to_string(r)) == r);
  CHECK(code_of([] { parse_regime("vertical"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("theta star") {
  // eps = 0.16, delta = 0.0016, N_F / N_B = 1/4: x = 0.4 * 0.2 * 0.5 = 0.04.
  CHECK(theta_star(0.16, 0.0016, 25, 100) == doctest::Approx(1.0 - 1.0 / 1.04).epsilon(1e-12));
  CHECK(theta_star(1.0, 1.0, 1, 1) == doctest::Approx(0.5));
  double prev = 0.0;
  for (double delta : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
    const double t = theta_star(0.1, delta, 24, 800);
    CHECK(t > prev);
    CHECK(t < 1.0);
    prev = t;
  }
}

TEST_CASE("ratio checks") {
  CHECK(check_ratios({1.0, 2.8, 6.5}, {1.0, 3.0, 6.0}, 0.1).pass);
  CHECK_FALSE(check_ratios({1.0, 2.6, 6.0}, {1.0, 3.0, 6.0}, 0.1).pass);
  CHECK_FALSE(check_ratios({1.0, 3.0}, {1.0, 3.0, 6.0}, 0.1).pass);
  MultiplicityReport r;
  r.regime = Regime::Base;
  r.ratios = {1.0, 2.95, 5.9, 10.0};
  const auto c = check_base_ratios(r);
  CHECK(c.pass);
  CHECK(c.measured.size() == 3);
  CHECK(c.expected == std::vector<double>{1.0, 3.0, 6.0});
  r.regime = Regime::Horizontal;
  CHECK(code_of([&] { check_base_ratios(r); }) == ErrorCode::RegimeMismatch);
}

TEST_CASE("presets and configuration validation") {
  for (const auto& name : so3_preset_names())
    for (auto r : {Regime::Horizontal, Regime::Total, Regime::Base}) CHECK_NOTHROW(so3_preset(name, r).validate());
  CHECK(so3_preset("desk", Regime::Base).delta > so3_preset("desk", Regime::Total).delta);
  CHECK(so3_preset("desk", Regime::Total).delta > so3_preset("desk", Regime::Horizontal).delta);
  CHECK(so3_preset("desk-empirical", Regime::Total).mode == SamplingMode::Empirical);
  CHECK(code_of([] { so3_preset("laptop", Regime::Base); }) == ErrorCode::InvalidArgument);

  auto bad = [](auto mutate) {
    So3Config c = small_config();
    mutate(c);
    return code_of([&] { c.validate(); });
  };
  CHECK(bad([](So3Config& c) { c.k_base = c.n_base; }) == ErrorCode::InvalidArgument);
  CHECK(bad([](So3Config& c) { c.k_fibre = c.n_fibre + 1; }) == ErrorCode::InvalidArgument);
  CHECK(bad([](So3Config& c) { c.alpha = 1.5; }) == ErrorCode::InvalidArgument);
  CHECK(bad([](So3Config& c) { c.delta = 0.0; }) == ErrorCode::InvalidArgument);
  CHECK(bad([](So3Config& c) { c.n_eigs = 0; }) == ErrorCode::InvalidArgument);
  CHECK(bad([](So3Config& c) { c.n_eigs = 2000; }) == ErrorCode::InvalidArgument);
}

TEST_CASE("small SO(3) experiment: structure of the report") {
  const So3Config cfg = small_config();
  const auto r = run_so3_experiment(cfg);
  REQUIRE(r.eigenvalues.size() == 10);
  CHECK(r.kappa == cfg.n_base * cfg.n_fibre);
  CHECK(r.nonzeros > 0);
  CHECK(std::abs(r.eigenvalues[0]) < 1e-8);
  CHECK(r.eigenvalues[1] > 1e-6);
  for (std::size_t i = 1; i < r.eigenvalues.size(); ++i) CHECK(r.eigenvalues[i] >= r.eigenvalues[i - 1]);
  for (double res : r.residuals) CHECK(res < 1e-6);
  std::size_t covered = 0;
  for (const auto& g : r.groups) covered += g.size;
  CHECK(covered == 10);
  REQUIRE_FALSE(r.ratios.empty());
  CHECK(r.ratios[0] == doctest::Approx(1.0));
  CHECK(r.theta_star == doctest::Approx(theta_star(cfg.eps, cfg.delta, cfg.n_fibre, cfg.n_base)));
  CHECK(r.variance_scale == doctest::Approx(1.0 / (std::sqrt(200.0) * std::sqrt(0.3))));

  // Same seed, same report.
  const auto again = run_so3_experiment(cfg);
  CHECK(again.eigenvalues == r.eigenvalues);

  const auto cal = calibrate_delta(cfg, Regime::Base, {0.01, 20.0});
  REQUIRE(cal.size() == 2);
  CHECK(cal[1].delta == 20.0);
  CHECK(cal[1].score == signature_score(groups_of(cal[1].group_sizes), Regime::Base));
}

TEST_CASE("lift consistency on a linear function") {
  So3Config cfg = small_config();
  cfg.delta = 20.0;
  const auto build = build_so3_laplacian(cfg);
  auto g = [](const Eigen::Vector3d& x) { return x.z(); };
  auto lg = [](const Eigen::Vector3d& x) { return -2.0 * x.z(); };
  const auto fit = lift_consistency_check(build.sample, build.laplacian, g, lg, cfg.eps);
  CHECK(fit.slope > 0.0);
  CHECK(fit.r2 > 0.5);
  CHECK(fit.r2 <= 1.0);

  const auto flat = lift_consistency_check(
      build.sample, build.laplacian, [](const Eigen::Vector3d&) { return 1.0; },
      [](const Eigen::Vector3d&) { return 0.0; }, cfg.eps);
  CHECK(flat.slope == 0.0);
  CHECK(std::abs(flat.intercept) < 1e-12);
  CHECK(code_of([&] { lift_consistency_check(build.sample, build.laplacian, g, lg, 0.0); }) ==
        ErrorCode::InvalidArgument);
}
