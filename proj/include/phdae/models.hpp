// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "phdae/discrete_calculus.hpp"
#include "phdae/numerics.hpp"

namespace phdae {

using DomainFn = std::function<bool(const Vec&)>;

/// Position and velocity level constraint residuals of a mechanical model,
/// used for diagnostics only.
struct ConstraintMonitor {
  VecFn position;  // g(q)
  VecFn velocity;  // Dg(q) v
};

/// E(x) x' = (J(x) - R(x)) z(x) + B(x) u,  y = B(x)^T z(x),  E^T z = grad H.
struct PHDAESystem {
  std::string name;
  int n = 0;
  int m = 0;
  MatFn E, J, R, B;
  VecFn z;
  ScalarField H;
  DomainFn in_domain;  // empty means every finite state is admissible
  std::optional<ConstraintMonitor> constraints;

  bool admissible(const Vec& x) const { return x.allFinite() && (!in_domain || in_domain(x)); }
  Vec output(const Vec& x) const { return B(x).transpose() * z(x); }
};

/// Partitioned system with E = diag(E11, 0), E11 pointwise invertible and a
/// specified Hamiltonian H1 acting on the leading n1 coordinates only.
struct SemiExplicitPHDAE {
  std::string name;
  int n1 = 0;
  int n2 = 0;
  int m = 0;
  MatFn E11;        // n1 x n1, evaluated on the full state
  ScalarField H1;   // over R^n1
  VecFn z2;         // R^n -> R^n2
  MatFn J, R, B;    // full n x n, n x m
  DomainFn in_domain;
  std::optional<ConstraintMonitor> constraints;

  int n() const { return n1 + n2; }
  bool admissible(const Vec& x) const { return x.allFinite() && (!in_domain || in_domain(x)); }
  /// z1 recovered from E11(x)^T z1 = grad H1(x1).
  Vec z1(const Vec& x) const;
};

/// Dirac-dissipative representation: the base coefficients reused in the
/// extended kernel form with the auxiliary effort f = z(x).
struct DDRSystem {
  PHDAESystem base;
};

struct ValidationCheck {
  std::string name;
  double max_violation = 0.0;
  int samples = 0;
  double tol = 0.0;
  bool passed = false;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool passed() const;
  const ValidationCheck* find(const std::string& name) const;
};

struct ValidationOptions {
  bool check_rank = true;
  double rank_rel_tol = 1e-8;
};

/// Gradient-pair identity, skew J, PSD R and constant rank of E at samples.
ValidationReport validate_phdae(const PHDAESystem& sys, const std::vector<Vec>& samples, double tol,
                                const ValidationOptions& opts = {});

/// E = diag(E11, 0), z = (E11^{-T} grad H1, z2), H(x) = H1(x1).
PHDAESystem embed_semi_explicit(const SemiExplicitPHDAE& se);

/// State change x = phi(xt) combined with left multiplication by U(xt)^T.
struct SystemTransformation {
  VectorField phi;
  VectorField phi_inv;
  MatFn U;
  DiscreteJacobian dj_phi;
  TwoPointMat U_bar;
};

SystemTransformation identity_transformation(int n);

/// phi(xt) = A xt with constant multiplier U; dj_phi = A and U_bar = U.
SystemTransformation linear_transformation(const Mat& A, const Mat& U);

/// (phi^{-1}, U^{-1} o phi^{-1}) with the inverse discrete Jacobian and
/// U_bar^{-1} evaluated at the pre-images.
SystemTransformation inverse_transformation(const SystemTransformation& T);

/// E~ = U^T (E o phi) Dphi, J~ = U^T (J o phi) U, R~ = U^T (R o phi) U,
/// z~ = U^{-1} (z o phi), B~ = U^T (B o phi), H~ = H o phi.
PHDAESystem transform_system(const PHDAESystem& sys, const SystemTransformation& T);

DDRSystem to_ddr(const PHDAESystem& sys);

/// K(x) = [[0, -E^T, 0], [E, J - R, B], [0, -B^T, 0]].
Mat ddr_kernel(const DDRSystem& ddr, const Vec& x);

/// [grad H; 0; y] + K(x) [-xdot; f; u]; zero along solutions with f = z(x).
Vec ddr_residual(const DDRSystem& ddr, const Vec& x, const Vec& xdot, const Vec& f, const Vec& u,
                 const Vec& y);

}  // namespace phdae
