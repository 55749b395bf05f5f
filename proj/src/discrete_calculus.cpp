// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#include "phdae/discrete_calculus.hpp"

#include "phdae/errors.hpp"

namespace phdae {

std::string to_string(DGKind k) {
  switch (k) {
    case DGKind::gonzalez: return "gonzalez";
    case DGKind::left: return "left";
    case DGKind::right: return "right";
    case DGKind::midpoint_exact: return "midpoint-exact";
    case DGKind::composite: return "composite";
  }
  return "unknown";
}

DGKind dg_kind_from_string(const std::string& s) {
  if (s == "gonzalez") return DGKind::gonzalez;
  if (s == "left") return DGKind::left;
  if (s == "right") return DGKind::right;
  if (s == "midpoint-exact" || s == "midpoint_exact") return DGKind::midpoint_exact;
  throw ConfigError("unknown discrete gradient kind '" + s + "'");
}

bool same_point(const Vec& x, const Vec& xp) {
  return inf_norm(Vec(xp - x)) <= kSwitchTol * (1.0 + inf_norm(x));
}

namespace {

// base + (f(x') - f(x) - base^T dx) / |dx|^2 dx, the correction that restores
// directionality while keeping base on the orthogonal complement of dx.
DiscreteGradient corrected_gradient(const ScalarField& H, DGKind kind) {
  DiscreteGradient dg;
  dg.dim = H.dim;
  dg.kind = kind;
  dg.eval = [H, kind](const Vec& x, const Vec& xp) -> Vec {
    if (x.size() != H.dim || xp.size() != H.dim)
      throw DimensionMismatch("discrete gradient: point dimension mismatch");
    if (same_point(x, xp)) return H.gradient(x);
    const Vec dx = xp - x;
    const double dH = H.value(xp) - H.value(x);
    if (H.dim == 1) return Vec::Constant(1, dH / dx(0));
    Vec base;
    switch (kind) {
      case DGKind::left: base = H.gradient(x); break;
      case DGKind::right: base = H.gradient(xp); break;
      default: base = H.gradient(0.5 * (x + xp)); break;
    }
    const double nrm2 = dx.squaredNorm();
    return base + ((dH - base.dot(dx)) / nrm2) * dx;
  };
  return dg;
}

}  // namespace

DiscreteGradient gonzalez_gradient(const ScalarField& H) {
  return corrected_gradient(H, DGKind::gonzalez);
}

DiscreteGradient endpoint_gradient(const ScalarField& H, DGKind side) {
  if (side != DGKind::left && side != DGKind::right)
    throw ConfigError("endpoint_gradient: side must be left or right");
  return corrected_gradient(H, side);
}

DiscreteGradient midpoint_gradient(const ScalarField& H) {
  DiscreteGradient dg;
  dg.dim = H.dim;
  dg.kind = DGKind::midpoint_exact;
  dg.eval = [H](const Vec& x, const Vec& xp) -> Vec { return H.gradient(0.5 * (x + xp)); };
  return dg;
}

DiscreteGradient make_discrete_gradient(const ScalarField& H, DGKind kind) {
  switch (kind) {
    case DGKind::gonzalez: return gonzalez_gradient(H);
    case DGKind::left:
    case DGKind::right: return endpoint_gradient(H, kind);
    case DGKind::midpoint_exact: return midpoint_gradient(H);
    default: throw ConfigError("make_discrete_gradient: unsupported kind " + to_string(kind));
  }
}

DiscreteJacobian gonzalez_jacobian(const VectorField& F) {
  DiscreteJacobian dj;
  dj.in_dim = F.in_dim;
  dj.out_dim = F.out_dim;
  dj.kind = DGKind::gonzalez;
  dj.eval = [F](const Vec& x, const Vec& xp) -> Mat {
    if (x.size() != F.in_dim || xp.size() != F.in_dim)
      throw DimensionMismatch("discrete Jacobian: point dimension mismatch");
    if (same_point(x, xp)) return F.jacobian(x);
    const Vec dx = xp - x;
    const Vec dF = F.value(xp) - F.value(x);
    if (F.in_dim == 1) return Mat(dF / dx(0));
    const Mat D = F.jacobian(0.5 * (x + xp));
    return D + ((dF - D * dx) / dx.squaredNorm()) * dx.transpose();
  };
  return dj;
}

DiscreteGradient lift_specified_gradient(const DiscreteGradient& dg1, int n2) {
  if (n2 < 0) throw DimensionMismatch("lift_specified_gradient: negative n2");
  if (n2 == 0) return dg1;
  DiscreteGradient dg;
  const int n1 = dg1.dim;
  dg.dim = n1 + n2;
  dg.kind = dg1.kind;
  dg.eval = [dg1, n1, n2](const Vec& x, const Vec& xp) -> Vec {
    Vec out = Vec::Zero(n1 + n2);
    out.head(n1) = dg1(x.head(n1), xp.head(n1));
    return out;
  };
  return dg;
}

DiscreteGradient chain_rule_gradient(const DiscreteJacobian& dj_phi, const DiscreteGradient& dg_H,
                                     const VectorField& phi) {
  if (dj_phi.out_dim != dg_H.dim || phi.out_dim != dg_H.dim || phi.in_dim != dj_phi.in_dim)
    throw DimensionMismatch("chain_rule_gradient: incompatible dimensions");
  DiscreteGradient dg;
  dg.dim = dj_phi.in_dim;
  dg.kind = DGKind::composite;
  dg.eval = [dj_phi, dg_H, phi](const Vec& x, const Vec& xp) -> Vec {
    return dj_phi(x, xp).transpose() * dg_H(phi.value(x), phi.value(xp));
  };
  return dg;
}

DiscreteJacobian inverse_discrete_jacobian(const DiscreteJacobian& dj_phi, const VectorField& phi_inv) {
  if (dj_phi.in_dim != dj_phi.out_dim || phi_inv.in_dim != dj_phi.out_dim)
    throw DimensionMismatch("inverse_discrete_jacobian: phi must be a square map");
  DiscreteJacobian dj;
  dj.in_dim = dj_phi.out_dim;
  dj.out_dim = dj_phi.in_dim;
  dj.kind = DGKind::composite;
  dj.eval = [dj_phi, phi_inv](const Vec& x, const Vec& xp) -> Mat {
    const Mat inner = dj_phi(phi_inv.value(x), phi_inv.value(xp));
    if (is_numerically_singular(inner, 1e-10))
      throw SingularDiscreteJacobian("inverse_discrete_jacobian: discrete Jacobian is singular");
    return inner.inverse();
  };
  return dj;
}

ScalarField compose(const ScalarField& H, const VectorField& phi) {
  ScalarField out;
  out.dim = phi.in_dim;
  out.value = [H, phi](const Vec& x) { return H.value(phi.value(x)); };
  out.gradient = [H, phi](const Vec& x) -> Vec {
    return phi.jacobian(x).transpose() * H.gradient(phi.value(x));
  };
  return out;
}

}  // namespace phdae
