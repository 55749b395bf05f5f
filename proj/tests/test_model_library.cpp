// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "phdae/errors.hpp"
#include "phdae/model_library.hpp"

using namespace phdae;

TEST_CASE("five models are shipped") {
  const auto& names = model_names();
  CHECK(names.size() == 5);
  for (const auto& n : names) {
    CAPTURE(n);
    const ModelInstance m = make_model(n);
    CHECK(m.name == n);
    CHECK(m.x0.size() == m.system.n);
    CHECK(m.system.admissible(m.x0));
    CHECK_FALSE(m.observables.empty());
    CHECK(m.default_h > 0.0);
  }
  CHECK_THROWS_AS(make_model("double_pendulum"), ConfigError);
}

TEST_CASE("every shipped model passes structural validation") {
  for (const auto& n : model_names()) {
    CAPTURE(n);
    const ModelInstance m = make_model(n);
    const auto pts = validation_samples(m, 20);
    CHECK(pts.size() == (m.rank_varies ? 21u : 20u));
    ValidationOptions opts;
    opts.check_rank = !m.rank_varies;
    const ValidationReport r = validate_phdae(m.system, pts, 1e-8, opts);
    for (const auto& c : r.checks) {
      CAPTURE(c.name);
      CHECK(c.passed);
    }
  }
}

TEST_CASE("the counterexample loses rank only at the origin") {
  const ModelInstance m = make_model("appc_counterexample");
  CHECK(m.rank_varies);
  CHECK(numerical_rank(m.system.E(Vec::Zero(2))) == 0);
  CHECK(numerical_rank(m.system.E((Vec(2) << 0.3, -0.2).finished())) == 1);
}

TEST_CASE("parameter overrides") {
  const ModelInstance m = make_model("four_particle", {{"k13", 10.0}, {"eta0", 0.0}});
  CHECK(m.params.at("k13") == 10.0);
  CHECK(m.params.at("k24") == 500.0);
  CHECK_THROWS_AS(make_model("four_particle", {{"k31", 1.0}}), ConfigError);
  CHECK_THROWS_AS(make_model("four_particle", {{"m1", -1.0}}), ConfigError);
  CHECK_THROWS_AS(make_model("mass_spring_singular", {{"k1", 0.0}}), ConfigError);
  CHECK_THROWS_AS(make_model("synchronous_machine", {{"eps", 5.0}}), ConfigError);
}

TEST_CASE("four-particle initial state is consistent") {
  const ModelInstance m = make_model("four_particle");
  const auto& c = *m.system.constraints;
  CHECK(c.position(m.x0).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(c.velocity(m.x0).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(m.semi_explicit->n1 == 24);
  CHECK(m.semi_explicit->n2 == 2);
  CHECK(m.system.m == 12);
}

TEST_CASE("dissipation switches off with eta0 = 0") {
  const ModelInstance m = make_model("four_particle", {{"eta0", 0.0}});
  CHECK(m.system.R(m.x0).cwiseAbs().maxCoeff() == 0.0);
  const ModelInstance d = make_model("four_particle");
  CHECK(d.system.R(d.x0).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("linear index-1 closed form") {
  const ModelInstance m = make_model("linear_index1");
  REQUIRE(m.exact);
  const Vec x = m.exact(0.7, m.x0);
  CHECK(x(0) == doctest::Approx(m.x0(0) * std::exp(-0.7)));
  CHECK(x(1) == doctest::Approx(-x(0)));
}

TEST_CASE("synchronous machine inductance is periodic and positive") {
  const SyncMachineParams p = default_sync_machine_params();
  CHECK((p.L(0.3) - p.L(0.3 + M_PI)).norm() <= 1e-13);
  const double h = 1e-6;
  CHECK(((p.L(0.4 + h) - p.L(0.4 - h)) / (2 * h) - p.L_prime(0.4)).norm() <= 1e-8);
  CHECK_NOTHROW(p.validate());
}
