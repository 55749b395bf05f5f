// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "phdae/discrete_calculus.hpp"
#include "phdae/errors.hpp"

using namespace phdae;

namespace {

double directionality(const DiscreteGradient& dg, const ScalarField& H, const Vec& x, const Vec& xp) {
  return std::abs(dg(x, xp).dot(xp - x) - (H.value(xp) - H.value(x)));
}

}  // namespace

TEST_CASE("every kind satisfies directionality and consistency") {
  const ScalarField H = oracle::quartic();
  std::mt19937_64 rng(11);
  for (DGKind kind : {DGKind::gonzalez, DGKind::left, DGKind::right}) {
    CAPTURE(to_string(kind));
    const DiscreteGradient dg = make_discrete_gradient(H, kind);
    CHECK(dg.kind == kind);
    for (int i = 0; i < 200; ++i) {
      const Vec x = oracle::random_vec(rng, 3);
      const Vec xp = oracle::random_vec(rng, 3);
      const double scale = 1.0 + std::abs(H.value(x)) + std::abs(H.value(xp));
      CHECK(directionality(dg, H, x, xp) <= 1e-11 * scale);
      CHECK((dg(x, x) - H.gradient(x)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("gonzalez matches the written out formula") {
  const ScalarField H = oracle::quartic();
  const DiscreteGradient dg = gonzalez_gradient(H);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Vec x = oracle::random_vec(rng, 3);
    const Vec xp = oracle::random_vec(rng, 3);
    const Vec ref = oracle::gonzalez(H.value, H.gradient, x, xp);
    CHECK((dg(x, xp) - ref).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("gonzalez reduces to the midpoint gradient for quadratics") {
  Mat Q(3, 3);
  Q << 4, 1, 0, 1, 3, -1, 0, -1, 2;
  Vec c(3);
  c << 0.5, -1.0, 2.0;
  const ScalarField H = oracle::quadratic(Q, c);
  const DiscreteGradient g = gonzalez_gradient(H);
  const DiscreteGradient m = midpoint_gradient(H);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    const Vec x = oracle::random_vec(rng, 3, 3.0);
    const Vec xp = oracle::random_vec(rng, 3, 3.0);
    CHECK((g(x, xp) - m(x, xp)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((m(x, xp) - (Q * (0.5 * (x + xp)) + c)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("coincident points take the consistency branch") {
  const ScalarField H = oracle::quartic();
  Vec x(3);
  x << 0.3, -0.7, 1.1;
  Vec xp = x;
  xp(1) += 1e-17;
  CHECK(same_point(x, xp));
  const Vec g = gonzalez_gradient(H)(x, xp);
  CHECK(g.allFinite());
  CHECK((g - H.gradient(x)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("discrete jacobian rows are discrete gradients") {
  const VectorField phi = oracle::twist();
  const DiscreteJacobian dj = gonzalez_jacobian(phi);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const Vec x = oracle::random_vec(rng, 2);
    const Vec xp = oracle::random_vec(rng, 2);
    CHECK((dj(x, xp) * (xp - x) - (phi.value(xp) - phi.value(x))).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((dj(x, x) - phi.jacobian(x)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("twist map: singular gonzalez jacobian between origin and the full turn") {
  const VectorField phi = oracle::twist();
  const DiscreteJacobian dj = gonzalez_jacobian(phi);
  const Vec x0 = Vec::Zero(2);
  Vec x1(2);
  x1 << std::sqrt(2.0 * std::numbers::pi), 0.0;
  Mat expected(2, 2);
  expected << 1.0, -1.0, 0.0, 0.0;
  CHECK((dj(x0, x1) - expected).cwiseAbs().maxCoeff() <= 1e-12);

  const DiscreteJacobian inv = inverse_discrete_jacobian(dj, oracle::twist_inverse());
  // phi fixes both points, so the inverse is evaluated at the same pair.
  CHECK_THROWS_AS(inv(phi.value(x0), phi.value(x1)), SingularDiscreteJacobian);

  Vec a(2), b(2);
  a << 0.2, 0.1;
  b << -0.3, 0.4;
  const Mat fwd = dj(a, b);
  const Mat back = inv(phi.value(a), phi.value(b));
  CHECK((fwd * back - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("chain rule gradient of H after phi") {
  // H(y) = y1^2 + 3 y2^2 composed with the twist.
  Mat Q(2, 2);
  Q << 2, 0, 0, 6;
  const ScalarField H = oracle::quadratic(Q, Vec::Zero(2));
  const VectorField phi = oracle::twist();
  const DiscreteGradient dg =
      chain_rule_gradient(gonzalez_jacobian(phi), gonzalez_gradient(H), phi);
  const ScalarField Hphi = compose(H, phi);
  CHECK(dg.kind == DGKind::composite);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const Vec x = oracle::random_vec(rng, 2);
    const Vec xp = oracle::random_vec(rng, 2);
    CHECK(directionality(dg, Hphi, x, xp) <= 1e-11 * (1.0 + std::abs(Hphi.value(xp))));
    CHECK((dg(x, x) - Hphi.gradient(x)).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("lifted gradient ignores the trailing block") {
  const ScalarField H1 = oracle::quartic();
  const DiscreteGradient lifted = lift_specified_gradient(gonzalez_gradient(H1), 2);
  CHECK(lifted.dim == 5);
  Vec x(5), xp(5);
  x << 0.1, 0.2, 0.3, 7.0, -1.0;
  xp << -0.4, 0.5, 0.0, 2.0, 9.0;
  const Vec g = lifted(x, xp);
  CHECK(g.tail(2).isZero(0.0));
  CHECK((g.head(3) - gonzalez_gradient(H1)(x.head(3), xp.head(3))).norm() <= 1e-15);
}

TEST_CASE("kind names round trip") {
  for (DGKind k : {DGKind::gonzalez, DGKind::left, DGKind::right, DGKind::midpoint_exact})
    CHECK(dg_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(dg_kind_from_string("avf"), ConfigError);
}
