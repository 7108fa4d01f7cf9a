#include "betheform/algebra.hpp"
#include "betheform/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace betheform;
using Catch::Matchers::WithinAbs;

namespace {
const Coupling kUnit{cplx{1.0, 0.0}};
}

TEST_CASE("g: direct values and poles", "[algebra]") {
  CHECK_THAT(std::abs(g({2, 0}, {1, 0}, kUnit) - cplx{1, 0}), WithinAbs(0.0, 1e-15));
  // g(u, u+c) = -1 for any u, c
  const Coupling c2{cplx{0.7, 0.3}};
  const cplx u{1.5, -0.2};
  CHECK_THAT(std::abs(g(u, u + c2.c, c2) - cplx{-1, 0}), WithinAbs(0.0, 1e-15));
  CHECK_THAT(std::abs(g({1, 1}, {0, 1}, Coupling{{2, 0}}) - cplx{2, 0}), WithinAbs(0.0, 1e-15));
  CHECK_THROWS_AS(g({1, 0}, {1, 0}, kUnit), pole_error);
}

TEST_CASE("f: direct values, pole shift, f = 1 + g", "[algebra]") {
  CHECK_THAT(std::abs(f({2, 0}, {1, 0}, kUnit) - cplx{2, 0}), WithinAbs(0.0, 1e-15));
  // f(u, u-c) = 2c/c = 2
  CHECK_THAT(std::abs(f({1, 0}, {0, 0}, kUnit) - cplx{2, 0}), WithinAbs(0.0, 1e-15));
  // f(u,v) f(v,u) = 1 - g(u,v)^2
  for (auto [u, v] : {std::pair<cplx, cplx>{{3, 0}, {1, 0}}, {{2, 0}, {1, 0}}, {{1.3, 0.4}, {-0.2, 0.9}}}) {
    const cplx lhs = f(u, v, kUnit) * f(v, u, kUnit);
    const cplx rhs = 1.0 - g(u, v, kUnit) * g(u, v, kUnit);
    CHECK_THAT(std::abs(lhs - rhs), WithinAbs(0.0, 1e-14));
  }
  SplitMix64 rng(3, "fg");
  for (int k = 0; k < 20; ++k) {
    const cplx u = rng.in_disk({0, 0}, 2.0), v = rng.in_disk({0, 0}, 2.0);
    if (std::abs(u - v) < 1e-3) continue;
    CHECK_THAT(std::abs(f(u, v, kUnit) - (1.0 + g(u, v, kUnit))), WithinAbs(0.0, 1e-15));
  }
}

TEST_CASE("prod_f: empty sets, small products, union factorization", "[algebra]") {
  const ParamSet empty;
  const ParamSet v12{{1, 0}, {2, 0}};
  CHECK(prod_f(std::span<const cplx>(empty), std::span<const cplx>(v12), kUnit) == cplx{1, 0});
  const ParamSet u3{{3, 0}};
  CHECK_THAT(std::abs(prod_f(std::span<const cplx>(u3), std::span<const cplx>(v12), kUnit) - cplx{3, 0}),
             WithinAbs(0.0, 1e-14));
  const ParamSet u5{{5, 0}}, v2{{2, 0}};
  CHECK_THAT(std::abs(prod_f(std::span<const cplx>(u5), std::span<const cplx>(v2), kUnit) -
                      f({5, 0}, {2, 0}, kUnit)),
             WithinAbs(0.0, 1e-15));
  // prod over a union factorizes
  SplitMix64 rng(5, "union");
  ParamSet u1, u2, w;
  for (int k = 0; k < 3; ++k) {
    u1.push_back(rng.in_disk({0, 0}, 1.0));
    u2.push_back(rng.in_disk({3, 0}, 1.0));
    w.push_back(rng.in_disk({0, 3}, 1.0));
  }
  ParamSet both = u1;
  both.insert(both.end(), u2.begin(), u2.end());
  const cplx lhs = prod_f(std::span<const cplx>(both), std::span<const cplx>(w), kUnit);
  const cplx rhs = prod_f(std::span<const cplx>(u1), std::span<const cplx>(w), kUnit) *
                   prod_f(std::span<const cplx>(u2), std::span<const cplx>(w), kUnit);
  CHECK_THAT(std::abs(lhs - rhs) / std::abs(rhs), WithinAbs(0.0, 1e-13));
}

TEST_CASE("tau: empty sets and permutation symmetry", "[algebra]") {
  VacuumRatios R;
  R.r1 = [](cplx w) { return w * w + 1.0; };
  const cplx w{1.7, 0.4};
  const ParamSet empty;
  CHECK_THAT(std::abs(tau(w, empty, empty, R, kUnit) - (R.r1(w) + 2.0)), WithinAbs(0.0, 1e-14));

  SplitMix64 rng(11, "tau");
  ParamSet u, v;
  for (int k = 0; k < 3; ++k) u.push_back(rng.in_disk({0, 0}, 1.5));
  for (int k = 0; k < 2; ++k) v.push_back(rng.in_disk({0, 0}, 1.5));
  const cplx base = tau(w, u, v, R, kUnit);
  std::swap(u[0], u[2]);
  std::swap(v[0], v[1]);
  CHECK_THAT(std::abs(tau(w, u, v, R, kUnit) - base) / std::abs(base), WithinAbs(0.0, 1e-14));
}

TEST_CASE("bethe residual: untwisted equals unit twist, principal strip", "[algebra]") {
  VacuumRatios R;
  R.r1 = [](cplx u) { return (u + 1.0) / (u - 1.0); };
  R.dlog_r1 = [](cplx u) { return 1.0 / (u + 1.0) - 1.0 / (u - 1.0); };
  const Levels t{{{0.3, 0.7}, {-0.4, -0.1}}, {{0.1, 1.4}}};
  const auto kap1 = unit_twist(3);
  const std::vector<cplx> kap_explicit{{1, 0}, {1, 0}, {1, 0}};
  const auto r1v = bethe_residual_levels(t, R, kap1, kUnit);
  const auto r2v = bethe_residual_levels(t, R, kap_explicit, kUnit);
  CHECK((r1v - r2v).norm() == 0.0);
  for (int k = 0; k < r1v.size(); ++k) CHECK(std::abs(r1v(k).imag()) <= std::numbers::pi + 1e-12);

  CHECK_THAT(std::abs(reduce_principal(cplx{0.3, 7.0}) - cplx{0.3, 7.0 - 2 * std::numbers::pi}),
             WithinAbs(0.0, 1e-15));
}

TEST_CASE("bethe jacobian matches central finite differences", "[algebra]") {
  VacuumRatios R;
  R.r1 = [](cplx u) { return ((u + 2.0) * (u - cplx{0.0, 1.0})) / ((u - 2.0) * (u + cplx{0.0, 1.0})); };
  R.dlog_r1 = [](cplx u) {
    return 1.0 / (u + 2.0) + 1.0 / (u - cplx{0.0, 1.0}) - 1.0 / (u - 2.0) - 1.0 / (u + cplx{0.0, 1.0});
  };
  const Levels t{{{0.3, 0.7}, {-0.6, -0.2}}, {{0.15, 1.3}}};
  const auto kap = unit_twist(3);
  const Eigen::MatrixXcd jac = bethe_jacobian_levels(t, R, kUnit);
  const double h = 1e-6;
  int col = 0;
  for (size_t lv = 0; lv < t.size(); ++lv)
    for (size_t r = 0; r < t[lv].size(); ++r, ++col) {
      for (cplx dir : {cplx{h, 0.0}, cplx{0.0, h}}) {
        Levels plus = t, minus = t;
        plus[lv][r] += dir;
        minus[lv][r] -= dir;
        const Eigen::VectorXcd fd =
            (bethe_residual_levels(plus, R, kap, kUnit) - bethe_residual_levels(minus, R, kap, kUnit)) /
            (2.0 * h);
        const Eigen::VectorXcd an = jac.col(col) * (dir / h);
        REQUIRE((fd - an).cwiseAbs().maxCoeff() / an.cwiseAbs().maxCoeff() < 1e-6);
      }
    }
}

TEST_CASE("jacobian of a single level-1 root is dlog r1", "[algebra]") {
  VacuumRatios R;
  R.r1 = [](cplx u) { return (u + 1.0) / (u - 1.0); };
  R.dlog_r1 = [](cplx u) { return 1.0 / (u + 1.0) - 1.0 / (u - 1.0); };
  const Levels t{{{0.4, 0.3}}, {}};
  const auto jac = bethe_jacobian_levels(t, R, kUnit);
  REQUIRE(jac.rows() == 1);
  CHECK_THAT(std::abs(jac(0, 0) - R.dlog_r1({0.4, 0.3})), WithinAbs(0.0, 1e-14));
}

TEST_CASE("residual dkappa: rescale direction is flat", "[algebra]") {
  const Levels t{{{0.3, 0.7}, {-0.6, -0.2}}, {{0.15, 1.3}}};
  Eigen::VectorXcd total = Eigen::VectorXcd::Zero(root_count(t));
  for (int i = 1; i <= 3; ++i) total += bethe_residual_dkappa(t, i);
  CHECK(total.cwiseAbs().maxCoeff() == 0.0);
  // level-1 rows do not see kappa_3
  const auto d3 = bethe_residual_dkappa(t, 3);
  CHECK(d3(0) == cplx{0.0, 0.0});
  CHECK(d3(1) == cplx{0.0, 0.0});
  CHECK(d3(2) == cplx{-1.0, 0.0});
}
