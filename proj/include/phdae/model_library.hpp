// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "phdae/integrators.hpp"
#include "phdae/models.hpp"

namespace phdae {

struct FourParticleParams {
  std::array<double, 4> masses{1.0, 3.0, 2.3, 1.7};
  double k13 = 50.0;
  double k24 = 500.0;
  double eta0 = 1.0;
  double alpha = 0.5;

  void validate() const;
};

/// x = (q1..q4, v1..v4, lambda1, lambda2); n1 = 24, n2 = 2, m = 12.
SemiExplicitPHDAE make_four_particle(const FourParticleParams& p);

/// Discretisation used with the semi-explicit scheme: E11 constant, the
/// constraint Jacobian replaced by its Gonzalez discrete Jacobian, R at the
/// midpoint and lambda_bar = lambda^{k+1}.
ConsistentApprox four_particle_approx(const FourParticleParams& p);

Vec four_particle_initial_state();

ScalarField four_particle_potential(const FourParticleParams& p);  // V(q), q in R^12
VectorField four_particle_constraints();                            // g(q) in R^2

struct MassSpringParams {
  double m1 = 1.0;
  double m2 = 2.0;
  double k1 = 1.0;
  double k2 = 1.0;
  double l10 = 1.0;
  double l20 = 1.0;
  double w = 1.0;

  void validate() const;
};

/// x = (x1, q2, x2, v1, v2, v3, lambda), E = diag(I3, M, 0) with the
/// singular mass matrix of the redundant coordinates.
PHDAESystem make_mass_spring_singular(const MassSpringParams& p);

Mat mass_spring_E(const MassSpringParams& p);
Vec mass_spring_initial_state(const MassSpringParams& p);

struct SyncMachineParams {
  Vec R_s = Vec::Constant(3, 0.1);
  Vec R_r = Vec::Constant(3, 0.2);
  double d = 0.05;
  double J_r = 1.0;
  std::function<Mat(double)> L;       // 6x6, SPD and 2 pi periodic
  std::function<Mat(double)> L_prime;

  void validate() const;
};

/// L(theta) = L0 I + eps cos(2 theta) (ones - I).
SyncMachineParams default_sync_machine_params(double L0 = 2.0, double eps = 0.1);

/// x = (I in R^6, p, theta), u = (V_s, V_f, tau).
PHDAESystem make_synchronous_machine(const SyncMachineParams& p);

/// E = diag(1, 0), J - R = [[0, 1], [-1, -1]], H = x1^2 / 2, z = x.
PHDAESystem make_linear_index1();

/// H = exp(x1^2 / 2) - 1 + x2^2 / 2, E = [1; 1] grad H^T, z = (1/2, 1/2).
PHDAESystem make_appC_counterexample();

struct Observable {
  std::string name;
  int offset = 0;
  int size = 0;
};

using ParamMap = std::map<std::string, double>;

/// A named model with everything the drivers need.
struct ModelInstance {
  std::string name;
  PHDAESystem system;
  std::optional<SemiExplicitPHDAE> semi_explicit;
  std::optional<ConsistentApprox> scheme_approx;  // model specific discretisation
  std::optional<Mat> constant_E;
  bool pointwise_invertible_E = false;
  bool rank_varies = false;  // E loses rank somewhere in the domain
  Vec x0;
  std::vector<Observable> observables;
  std::function<Vec(std::mt19937_64&)> sample;
  std::function<Vec(double, const Vec&)> exact;  // closed-form solution x(t; x0), if known
  double default_h = 0.01;
  double default_t_end = 1.0;
  std::string default_scheme = "dgp";
  ParamMap params;  // effective parameters
};

const std::vector<std::string>& model_names();

/// Throws ConfigError for unknown names or parameter keys.
ModelInstance make_model(const std::string& name, const ParamMap& overrides = {});

/// Deterministic domain samples (plus model specific special points).
std::vector<Vec> validation_samples(const ModelInstance& model, int count, unsigned seed = 7);

}  // namespace phdae
