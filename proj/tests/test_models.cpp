// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "phdae/errors.hpp"
#include "phdae/models.hpp"

using namespace phdae;

namespace {

// Damped nonlinear oscillator with a state-dependent mass.
PHDAESystem pendulum_like() {
  PHDAESystem s;
  s.name = "test_oscillator";
  s.n = 2;
  s.m = 1;
  s.E = [](const Vec& x) -> Mat {
    Mat E = Mat::Identity(2, 2);
    E(1, 1) = 2.0 + std::sin(x(0));
    return E;
  };
  s.J = [](const Vec&) -> Mat {
    Mat J(2, 2);
    J << 0, 1, -1, 0;
    return J;
  };
  s.R = [](const Vec&) -> Mat {
    Mat R = Mat::Zero(2, 2);
    R(1, 1) = 0.3;
    return R;
  };
  s.B = [](const Vec&) -> Mat {
    Mat B(2, 1);
    B << 0.0, 1.0;
    return B;
  };
  // H = 1 - cos(q) + (2 + sin q) p^2 / 2 with z = (sin q + cos(q) p^2 / 2, p).
  s.H = {2, [](const Vec& x) { return 1.0 - std::cos(x(0)) + 0.5 * (2.0 + std::sin(x(0))) * x(1) * x(1); },
         [](const Vec& x) -> Vec {
           Vec g(2);
           g << std::sin(x(0)) + 0.5 * std::cos(x(0)) * x(1) * x(1), (2.0 + std::sin(x(0))) * x(1);
           return g;
         }};
  s.z = [](const Vec& x) -> Vec {
    Vec z(2);
    z << std::sin(x(0)) + 0.5 * std::cos(x(0)) * x(1) * x(1), x(1);
    return z;
  };
  return s;
}

std::vector<Vec> samples(int n, int count) {
  std::mt19937_64 rng(1);
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) out.push_back(oracle::random_vec(rng, n));
  return out;
}

}  // namespace

TEST_CASE("a consistent system passes validation") {
  const PHDAESystem s = pendulum_like();
  const ValidationReport r = validate_phdae(s, samples(2, 20), 1e-10);
  CHECK(r.passed());
  REQUIRE(r.find("gradient_pair") != nullptr);
  CHECK(r.find("gradient_pair")->max_violation <= 1e-14);
  CHECK(r.find("rank_E")->passed);
  CHECK(r.find("nonexistent") == nullptr);
}

TEST_CASE("validation flags each broken property") {
  PHDAESystem s = pendulum_like();
  s.z = [](const Vec& x) -> Vec { return x; };
  CHECK_FALSE(validate_phdae(s, samples(2, 5), 1e-8).find("gradient_pair")->passed);

  s = pendulum_like();
  s.J = [](const Vec&) -> Mat { return Mat::Identity(2, 2); };
  CHECK_FALSE(validate_phdae(s, samples(2, 5), 1e-8).find("skew_J")->passed);

  s = pendulum_like();
  s.R = [](const Vec&) -> Mat { return -Mat::Identity(2, 2); };
  const auto* psd = validate_phdae(s, samples(2, 5), 1e-8).find("psd_R");
  CHECK_FALSE(psd->passed);
  CHECK(psd->max_violation == doctest::Approx(1.0));

  s = pendulum_like();
  s.E = [](const Vec& x) -> Mat {
    Mat E = Mat::Identity(2, 2);
    if (x(0) > 0.0) E(1, 1) = 0.0;
    return E;
  };
  std::vector<Vec> pts{Vec::Constant(2, 1.0), Vec::Constant(2, -1.0)};
  CHECK_FALSE(validate_phdae(s, pts, 1e9).find("rank_E")->passed);
  ValidationOptions no_rank;
  no_rank.check_rank = false;
  CHECK(validate_phdae(s, pts, 1e9, no_rank).find("rank_E") == nullptr);
}

TEST_CASE("shape errors are model definition errors") {
  PHDAESystem s = pendulum_like();
  s.z = [](const Vec&) -> Vec { return Vec::Zero(3); };
  CHECK_THROWS_AS(validate_phdae(s, samples(2, 1), 1e-8), ModelDefinitionError);
}

TEST_CASE("semi-explicit embedding") {
  SemiExplicitPHDAE se;
  se.name = "se";
  se.n1 = 2;
  se.n2 = 1;
  se.m = 0;
  se.E11 = [](const Vec& x) -> Mat {
    Mat E(2, 2);
    E << 2.0 + x(2) * x(2), 0.5, 0.0, 1.0;
    return E;
  };
  se.H1 = oracle::quadratic((Mat(2, 2) << 3, 1, 1, 2).finished(), Vec::Zero(2));
  se.z2 = [](const Vec& x) -> Vec { return Vec::Constant(1, x(0) - x(2)); };
  se.J = [](const Vec&) -> Mat {
    Mat J = Mat::Zero(3, 3);
    J(0, 2) = 1.0;
    J(2, 0) = -1.0;
    return J;
  };
  se.R = [](const Vec&) -> Mat { return Mat::Zero(3, 3); };
  se.B = [](const Vec&) -> Mat { return Mat::Zero(3, 0); };

  const PHDAESystem sys = embed_semi_explicit(se);
  CHECK(sys.n == 3);
  const ValidationReport r = validate_phdae(sys, samples(3, 10), 1e-12);
  CHECK(r.passed());
  Vec x(3);
  x << 0.4, -0.2, 1.5;
  CHECK(sys.E(x).row(2).isZero(0.0));
  CHECK((se.E11(x).transpose() * se.z1(x) - se.H1.gradient(x.head(2))).norm() <= 1e-14);

  se.E11 = [](const Vec&) -> Mat { return Mat::Zero(2, 2); };
  CHECK_THROWS_AS(se.z1(x), SingularE11);
}

TEST_CASE("transformed systems keep the gradient pair identity") {
  const PHDAESystem s = pendulum_like();
  Mat A(2, 2), U(2, 2);
  A << 1.0, 0.5, -0.3, 2.0;
  U << 2.0, 0.0, 1.0, 1.0;
  const PHDAESystem t = transform_system(s, linear_transformation(A, U));
  const ValidationReport r = validate_phdae(t, samples(2, 20), 1e-10);
  CHECK(r.passed());
  Vec xt(2);
  xt << 0.3, 0.8;
  CHECK(t.H.value(xt) == doctest::Approx(s.H.value(A * xt)).epsilon(1e-15));
}

TEST_CASE("linear transformation inverse") {
  Mat A(2, 2);
  A << 1.0, 2.0, 3.0, 4.0;
  const SystemTransformation T = linear_transformation(A, Mat::Identity(2, 2));
  const SystemTransformation Ti = inverse_transformation(T);
  Vec x(2);
  x << 0.7, -0.1;
  CHECK((Ti.phi.value(T.phi.value(x)) - x).norm() <= 1e-14);
  CHECK((Ti.dj_phi(x, 2.0 * x) * A - Mat::Identity(2, 2)).norm() <= 1e-12);
  CHECK_THROWS_AS(linear_transformation(Mat::Zero(2, 2), Mat::Identity(2, 2)),
                  SingularTransformation);
}

TEST_CASE("DDR kernel has the dissipative symmetric part") {
  const PHDAESystem s = pendulum_like();
  const DDRSystem d = to_ddr(s);
  Vec x(2);
  x << 0.2, -0.4;
  const Mat K = ddr_kernel(d, x);
  CHECK(K.rows() == 5);
  Mat expected = Mat::Zero(5, 5);
  expected.block(2, 2, 2, 2) = -2.0 * s.R(x);
  CHECK((K + K.transpose() - expected).norm() <= 1e-15);

  // Along the exact vector field the residual vanishes with f = z(x).
  const Vec u = Vec::Constant(1, 0.7);
  const Vec xdot = s.E(x).lu().solve((s.J(x) - s.R(x)) * s.z(x) + s.B(x) * u);
  const Vec res = ddr_residual(d, x, xdot, s.z(x), u, s.output(x));
  CHECK(res.norm() <= 1e-14);
}
