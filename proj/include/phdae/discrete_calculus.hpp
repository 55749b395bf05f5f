// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "phdae/numerics.hpp"

namespace phdae {

/// Scalar function with analytic gradient, e.g. a Hamiltonian.
struct ScalarField {
  int dim = 0;
  std::function<double(const Vec&)> value;
  VecFn gradient;
};

/// Vector field F: R^in -> R^out with analytic Jacobian (out x in).
struct VectorField {
  int in_dim = 0;
  int out_dim = 0;
  VecFn value;
  MatFn jacobian;
};

enum class DGKind { gonzalez, left, right, midpoint_exact, composite };

std::string to_string(DGKind k);
DGKind dg_kind_from_string(const std::string& s);

/// Two-point approximation g(x, x') of grad f with
///   g(x, x')^T (x' - x) = f(x') - f(x)  and  g(x, x) = grad f(x).
struct DiscreteGradient {
  int dim = 0;
  TwoPointVec eval;
  DGKind kind = DGKind::gonzalez;

  Vec operator()(const Vec& x, const Vec& xp) const { return eval(x, xp); }
};

/// Two-point matrix A(x, x') with A (x' - x) = F(x') - F(x) and A(x, x) = DF(x).
struct DiscreteJacobian {
  int in_dim = 0;
  int out_dim = 0;
  TwoPointMat eval;
  DGKind kind = DGKind::gonzalez;

  Mat operator()(const Vec& x, const Vec& xp) const { return eval(x, xp); }
};

/// Pairs closer than this (relative to 1 + |x|_inf) use the consistency branch.
inline constexpr double kSwitchTol = 1e-14;

bool same_point(const Vec& x, const Vec& xp);

DiscreteGradient gonzalez_gradient(const ScalarField& H);

/// Gonzalez construction with the midpoint gradient replaced by grad H(x)
/// (left) or grad H(x') (right).
DiscreteGradient endpoint_gradient(const ScalarField& H, DGKind side);

/// grad H at the midpoint. Only a discrete gradient when H is at most quadratic.
DiscreteGradient midpoint_gradient(const ScalarField& H);

/// Dispatches on kind (gonzalez, left, right, midpoint_exact).
DiscreteGradient make_discrete_gradient(const ScalarField& H, DGKind kind);

DiscreteJacobian gonzalez_jacobian(const VectorField& F);

/// (DG f1(x1, x1'), 0) for a function that depends only on the leading n1
/// coordinates of an (n1 + n2)-dimensional state.
DiscreteGradient lift_specified_gradient(const DiscreteGradient& dg1, int n2);

/// Discrete gradient of H o phi via dj_phi(x, x')^T dg_H(phi(x), phi(x')).
DiscreteGradient chain_rule_gradient(const DiscreteJacobian& dj_phi, const DiscreteGradient& dg_H,
                                     const VectorField& phi);

/// Discrete Jacobian of phi^{-1}: (dj_phi(phi^{-1}(x), phi^{-1}(x')))^{-1}.
/// Evaluation throws SingularDiscreteJacobian where the inner matrix is singular.
DiscreteJacobian inverse_discrete_jacobian(const DiscreteJacobian& dj_phi, const VectorField& phi_inv);

ScalarField compose(const ScalarField& H, const VectorField& phi);

}  // namespace phdae
