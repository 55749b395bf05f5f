// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "phdae/errors.hpp"
#include "phdae/integrators.hpp"
#include "phdae/model_library.hpp"

using namespace phdae;

namespace {

// q' = p, p' = -q - r p + u with H = (q^2 + p^2) / 2 and E = I.
PHDAESystem damped_oscillator(double r) {
  PHDAESystem s;
  s.name = "damped_oscillator";
  s.n = 2;
  s.m = 1;
  s.E = [](const Vec&) -> Mat { return Mat::Identity(2, 2); };
  s.J = [](const Vec&) -> Mat { return (Mat(2, 2) << 0, 1, -1, 0).finished(); };
  s.R = [r](const Vec&) -> Mat { return (Mat(2, 2) << 0, 0, 0, r).finished(); };
  s.B = [](const Vec&) -> Mat { return (Mat(2, 1) << 0, 1).finished(); };
  s.z = [](const Vec& x) { return x; };
  s.H = oracle::quadratic(Mat::Identity(2, 2), Vec::Zero(2));
  return s;
}

// Pendulum with unit mass and length: H = p^2/2 + 1 - cos q.
PHDAESystem pendulum(double r) {
  PHDAESystem s = damped_oscillator(r);
  s.name = "pendulum";
  s.H = {2, [](const Vec& x) { return 0.5 * x(1) * x(1) + 1.0 - std::cos(x(0)); },
         [](const Vec& x) -> Vec { return (Vec(2) << std::sin(x(0)), x(1)).finished(); }};
  s.z = s.H.gradient;
  return s;
}

DiscreteGradientPair identity_pair(const PHDAESystem& s, DGKind kind = DGKind::gonzalez) {
  const int n = s.n;
  return {[n](const Vec&, const Vec&) -> Mat { return Mat::Identity(n, n); },
          make_discrete_gradient(s.H, kind).eval};
}

// One step of the implicit midpoint rule for x' = A x + b u.
Vec linear_midpoint(const Mat& A, const Vec& b, const Vec& x, double u, double h) {
  const Mat I = Mat::Identity(A.rows(), A.cols());
  return (I - 0.5 * h * A).lu().solve((I + 0.5 * h * A) * x + h * b * u);
}

NewtonConfig tight() {
  NewtonConfig c;
  c.tol = 1e-13;
  return c;
}

}  // namespace

TEST_CASE("DGP on a linear oscillator is the midpoint rule") {
  const PHDAESystem s = damped_oscillator(0.4);
  const ConsistentApprox a = make_approx(s);
  const DiscreteGradientPair pair = identity_pair(s);
  Mat A(2, 2);
  A << 0, 1, -1, -0.4;
  Vec x(2);
  x << 1.0, 0.0;
  for (int k = 0; k < 20; ++k) {
    const double u = 0.1 * k;
    const StepResult r = step_dgp(s, pair, a, x, Vec::Constant(1, u), 0.1, tight());
    const Vec ref = linear_midpoint(A, (Vec(2) << 0, 1).finished(), x, u, 0.1);
    CHECK((r.x_next - ref).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::abs(r.ledger.balance_residual) <= 1e-12);
    x = r.x_next;
  }
}

TEST_CASE("midpoint scheme matches the same oracle") {
  const PHDAESystem s = damped_oscillator(0.0);
  Vec x(2);
  x << 0.3, -0.8;
  const Mat A = (Mat(2, 2) << 0, 1, -1, 0).finished();
  const StepResult r = step_midpoint(s, x, Vec::Zero(1), 0.2, tight());
  CHECK((r.x_next - linear_midpoint(A, Vec::Zero(2), x, 0.0, 0.2)).norm() <= 1e-12);
  // Without dissipation the quadratic energy is conserved exactly.
  CHECK(std::abs(s.H.value(r.x_next) - s.H.value(x)) <= 1e-13);
}

TEST_CASE("discrete power balance for a nonlinear system with input") {
  const PHDAESystem s = pendulum(0.25);
  for (DGKind kind : {DGKind::gonzalez, DGKind::left, DGKind::right}) {
    CAPTURE(to_string(kind));
    auto st = make_dgp_stepper(s, identity_pair(s, kind), make_approx(s), NewtonConfig{});
    const InputFn u = [](int, double t) { return Vec::Constant(1, std::sin(3.0 * t)); };
    const Trajectory tr = integrate(st, (Vec(2) << 2.5, 0.0).finished(), u, 5.0, 0.05);
    REQUIRE(tr.steps.size() == 100);
    for (const StepResult& r : tr.steps) {
      CHECK(std::abs(r.ledger.balance_residual) <= 1e-9);
      CHECK(r.ledger.dissipated >= 0.0);
      CHECK(r.newton.converged);
    }
    const auto series = power_balance_series(tr);
    REQUIRE(series.size() == tr.steps.size());
    for (std::size_t k = 0; k < series.size(); ++k)
      CHECK(std::abs(series[k].balance_residual - tr.steps[k].ledger.balance_residual) <= 1e-14);
  }
}

TEST_CASE("energy increments are non-positive without input") {
  const PHDAESystem s = pendulum(0.5);
  auto st = make_dgp_stepper(s, identity_pair(s), make_approx(s), NewtonConfig{});
  const Trajectory tr = integrate(st, (Vec(2) << 3.0, 1.0).finished(), zero_input(1), 10.0, 0.1);
  for (const StepResult& r : tr.steps) CHECK(r.ledger.dH <= 1e-12);
}

TEST_CASE("semi-explicit scheme on the harmonic oscillator with a constraint") {
  // x = (q, p, lambda): q' = p + lambda, p' = -q, 0 = -q. Hence q = 0,
  // lambda = -p and p stays constant.
  SemiExplicitPHDAE se;
  se.name = "constrained_oscillator";
  se.n1 = 2;
  se.n2 = 1;
  se.m = 0;
  se.E11 = [](const Vec&) -> Mat { return Mat::Identity(2, 2); };
  se.H1 = oracle::quadratic(Mat::Identity(2, 2), Vec::Zero(2));
  se.z2 = [](const Vec& x) -> Vec { return Vec::Constant(1, x(2)); };
  se.J = [](const Vec&) -> Mat {
    Mat J = Mat::Zero(3, 3);
    J(0, 1) = 1.0;
    J(1, 0) = -1.0;
    J(0, 2) = 1.0;
    J(2, 0) = -1.0;
    return J;
  };
  se.R = [](const Vec&) -> Mat { return Mat::Zero(3, 3); };
  se.B = [](const Vec&) -> Mat { return Mat::Zero(3, 0); };
  const ConsistentApprox a = make_approx(se);
  auto st = make_semi_explicit_stepper(se, gonzalez_gradient(se.H1), a, tight());
  Vec x0(3);
  x0 << 0.0, 1.0, -1.0;
  const Trajectory tr = integrate(st, x0, zero_input(0), 1.0, 0.1);
  for (std::size_t k = 0; k < tr.steps.size(); ++k) {
    const Vec& x = tr.states[k + 1];
    CHECK(std::abs(x(0)) <= 1e-12);
    CHECK(std::abs(x(1) - 1.0) <= 1e-12);
    CHECK(std::abs(x(2) + 1.0) <= 1e-12);
    CHECK(std::abs(tr.steps[k].ledger.dH) <= 1e-12);
  }
}

TEST_CASE("DDR on the linear index-1 example") {
  const PHDAESystem s = make_linear_index1();
  const DDRSystem d = to_ddr(s);
  const ConsistentApprox a = make_approx(s);
  const DiscreteGradient dg = gonzalez_gradient(s.H);
  const double rho = 0.95 / 1.05;

  SUBCASE("costate at the new point") {
    DDRCompletion c{Completion::match_costate_next, {}};
    Vec x(2);
    x << 1.0, 0.0;
    for (int k = 0; k < 10; ++k) {
      const StepResult r = step_ddr(d, dg, a, c, x, Vec::Zero(0), 0.1, tight());
      CHECK(r.x_next(0) == doctest::Approx(std::pow(rho, k + 1)).epsilon(1e-12));
      CHECK(std::abs(r.x_next(1) + 0.5 * (x(0) + r.x_next(0))) <= 1e-12);
      x = r.x_next;
    }
  }
  SUBCASE("midpoint costate and least norm keep x2 = -x1") {
    for (Completion comp : {Completion::match_costate_midpoint, Completion::least_norm}) {
      DDRCompletion c{comp, {}};
      Vec x(2);
      x << 1.0, -1.0;
      for (int k = 0; k < 10; ++k) {
        const StepResult r = step_ddr(d, dg, a, c, x, Vec::Zero(0), 0.1, tight());
        CHECK(std::abs(r.x_next(0) - std::pow(rho, k + 1)) <= 1e-12);
        CHECK(std::abs(r.x_next(1) + r.x_next(0)) <= 1e-12);
        x = r.x_next;
      }
    }
  }
  SUBCASE("known structure completion") {
    // c(x, x', f) = f - x' is the same rule as match_costate_next.
    DDRCompletion c{Completion::known_structure,
                    [](const Vec&, const Vec& xp, const Vec& f) -> Vec { return f - xp; }};
    Vec x(2);
    x << 1.0, 0.0;
    const StepResult r = step_ddr(d, dg, a, c, x, Vec::Zero(0), 0.1, tight());
    CHECK(std::abs(r.x_next(0) - rho) <= 1e-12);
    CHECK(std::abs(r.x_next(1) + 0.5 * (1.0 + rho)) <= 1e-12);
  }
}

TEST_CASE("newton failure surfaces as NonConvergence") {
  const PHDAESystem s = pendulum(0.0);
  NewtonConfig c;
  c.max_iter = 1;
  c.tol = 1e-15;
  try {
    step_dgp(s, identity_pair(s), make_approx(s), (Vec(2) << 3.0, 2.0).finished(), Vec::Zero(1), 1.0,
             c);
    FAIL("expected NonConvergence");
  } catch (const NonConvergence& e) {
    CHECK(e.iterations() == 1);
    CHECK(e.residual() > 1e-15);
    CHECK(e.best_iterate().size() == 2);
  }
}

TEST_CASE("integrate: step count, partial trajectories and domain exits") {
  CHECK(step_count(10.0, 0.01) == 1000);
  CHECK(step_count(0.1, 0.0025) == 40);
  CHECK_THROWS_AS(step_count(1.0, 0.3), ConfigError);
  CHECK_THROWS_AS(step_count(1.0, -0.1), ConfigError);
  CHECK_THROWS_AS(step_count(0.1, 0.2), ConfigError);

  PHDAESystem s = damped_oscillator(0.0);
  s.in_domain = [](const Vec& x) { return x(0) < 0.9; };
  auto st = make_dgp_stepper(s, identity_pair(s), make_approx(s), NewtonConfig{});
  try {
    integrate(st, (Vec(2) << 0.0, 1.0).finished(), zero_input(1), 3.0, 0.1);
    FAIL("expected a domain exit");
  } catch (const IntegrationAborted& e) {
    CHECK(e.cause() == "DomainExit");
    const Trajectory& p = e.partial();
    CHECK(p.states.size() == p.steps.size() + 1);
    CHECK(p.steps.size() > 5);
    for (const Vec& x : p.states) CHECK(x(0) < 0.9);
  }
  CHECK_THROWS_AS(integrate(st, (Vec(2) << 1.0, 0.0).finished(), zero_input(1), 1.0, 0.1), DomainExit);
  CHECK_THROWS_AS(integrate(st, Vec::Zero(3), zero_input(1), 1.0, 0.1), DimensionMismatch);
}

TEST_CASE("input sampling instants") {
  const PHDAESystem s = damped_oscillator(0.0);
  auto st = make_midpoint_stepper(s, NewtonConfig{});
  std::vector<double> seen;
  const InputFn rec = [&seen](int, double t) {
    seen.push_back(t);
    return Vec::Zero(1).eval();
  };
  integrate(st, Vec::Zero(2), rec, 0.3, 0.1, InputSampling::midpoint);
  REQUIRE(seen.size() == 3);
  CHECK(seen[0] == doctest::Approx(0.05));
  CHECK(seen[2] == doctest::Approx(0.25));
  seen.clear();
  integrate(st, Vec::Zero(2), rec, 0.3, 0.1, InputSampling::left);
  CHECK(seen[1] == doctest::Approx(0.1));
}

TEST_CASE("consistent approximations") {
  const PHDAESystem s = pendulum(0.3);
  std::mt19937_64 rng(8);
  std::vector<std::pair<Vec, Vec>> pairs;
  for (int i = 0; i < 20; ++i) pairs.emplace_back(oracle::random_vec(rng, 2), oracle::random_vec(rng, 2));
  for (CoeffMode m : {CoeffMode::midpoint, CoeffMode::left, CoeffMode::right}) {
    CoeffModes modes{m, m, m, m, m};
    CHECK(approx_violation(make_approx(s, modes), s, pairs) <= 1e-14);
  }
  const TwoPointVec left = sample_two_point(s.z, CoeffMode::left);
  const Vec x = pairs[0].first, xp = pairs[0].second;
  CHECK((left(x, xp) - s.z(x)).norm() == 0.0);
  CHECK((sample_two_point(s.z, CoeffMode::midpoint)(x, xp) - s.z(0.5 * (x + xp))).norm() == 0.0);
}

TEST_CASE("names round trip") {
  for (Completion c : {Completion::known_structure, Completion::match_costate_next,
                       Completion::match_costate_prev, Completion::match_costate_midpoint,
                       Completion::least_norm})
    CHECK(completion_from_string(to_string(c)) == c);
  for (CoeffMode m : {CoeffMode::midpoint, CoeffMode::left, CoeffMode::right})
    CHECK(coeff_mode_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(completion_from_string("guess"), ConfigError);
  CHECK_THROWS_AS(coeff_mode_from_string("trapezoid"), ConfigError);
}
