// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#include "phdae/models.hpp"

#include <algorithm>
#include <limits>

#include "phdae/errors.hpp"

namespace phdae {

Vec SemiExplicitPHDAE::z1(const Vec& x) const {
  const Mat E = E11(x);
  Eigen::PartialPivLU<Mat> lu(E.transpose());
  if (is_numerically_singular(E, 1e-13)) throw SingularE11(name + ": E11 is singular");
  return lu.solve(H1.gradient(x.head(n1)));
}

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

ValidationReport validate_phdae(const PHDAESystem& sys, const std::vector<Vec>& samples, double tol,
                                const ValidationOptions& opts) {
  ValidationCheck pair{"gradient_pair", 0.0, 0, tol, false};
  ValidationCheck skew{"skew_J", 0.0, 0, tol, false};
  ValidationCheck psd{"psd_R", 0.0, 0, tol, false};
  ValidationCheck rank{"rank_E", 0.0, 0, 0.0, false};
  int rmin = std::numeric_limits<int>::max();
  int rmax = -1;

  for (const Vec& x : samples) {
    Mat E, J, R;
    Vec z, g;
    try {
      E = sys.E(x);
      J = sys.J(x);
      R = sys.R(x);
      z = sys.z(x);
      g = sys.H.gradient(x);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw ModelDefinitionError(sys.name + ": evaluator failed: " + e.what());
    }
    if (E.rows() != sys.n || E.cols() != sys.n || z.size() != sys.n || g.size() != sys.n)
      throw ModelDefinitionError(sys.name + ": coefficient shape mismatch");

    const double viol = inf_norm(Vec(E.transpose() * z - g)) / (1.0 + inf_norm(g));
    pair.max_violation = std::max(pair.max_violation, viol);
    const StructureReport st = validate_structure(J, R, tol);
    skew.max_violation = std::max(skew.max_violation, st.skew_violation);
    psd.max_violation = std::max(psd.max_violation, st.psd_violation);
    if (opts.check_rank) {
      const int r = numerical_rank(E, opts.rank_rel_tol);
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
    }
  }
  const int ns = static_cast<int>(samples.size());
  for (ValidationCheck* c : {&pair, &skew, &psd}) {
    c->samples = ns;
    c->passed = c->max_violation <= c->tol;
  }
  ValidationReport rep;
  rep.checks = {pair, skew, psd};
  if (opts.check_rank) {
    rank.samples = ns;
    rank.max_violation = ns > 0 ? static_cast<double>(rmax - rmin) : 0.0;
    rank.passed = rank.max_violation == 0.0;
    rep.checks.push_back(rank);
  }
  return rep;
}

PHDAESystem embed_semi_explicit(const SemiExplicitPHDAE& se) {
  PHDAESystem sys;
  sys.name = se.name;
  const int n1 = se.n1, n2 = se.n2, n = se.n();
  sys.n = n;
  sys.m = se.m;
  sys.E = [se, n1, n](const Vec& x) -> Mat {
    Mat E = Mat::Zero(n, n);
    E.topLeftCorner(n1, n1) = se.E11(x);
    return E;
  };
  sys.J = se.J;
  sys.R = se.R;
  sys.B = se.B;
  sys.z = [se, n1, n2](const Vec& x) -> Vec {
    Vec z(n1 + n2);
    z.head(n1) = se.z1(x);
    z.tail(n2) = se.z2(x);
    return z;
  };
  sys.H.dim = n;
  sys.H.value = [se, n1](const Vec& x) { return se.H1.value(x.head(n1)); };
  sys.H.gradient = [se, n1, n](const Vec& x) -> Vec {
    Vec g = Vec::Zero(n);
    g.head(n1) = se.H1.gradient(x.head(n1));
    return g;
  };
  sys.in_domain = se.in_domain;
  sys.constraints = se.constraints;
  return sys;
}

SystemTransformation identity_transformation(int n) {
  return linear_transformation(Mat::Identity(n, n), Mat::Identity(n, n));
}

SystemTransformation linear_transformation(const Mat& A, const Mat& U) {
  if (A.rows() != A.cols() || U.rows() != U.cols() || A.rows() != U.rows())
    throw DimensionMismatch("linear_transformation: A and U must be square of equal size");
  if (is_numerically_singular(A) || is_numerically_singular(U))
    throw SingularTransformation("linear_transformation: singular A or U");
  const int n = static_cast<int>(A.rows());
  const Mat Ainv = A.inverse();
  SystemTransformation T;
  T.phi = {n, n, [A](const Vec& x) -> Vec { return A * x; }, [A](const Vec&) -> Mat { return A; }};
  T.phi_inv = {n, n, [Ainv](const Vec& x) -> Vec { return Ainv * x; },
               [Ainv](const Vec&) -> Mat { return Ainv; }};
  T.U = [U](const Vec&) -> Mat { return U; };
  T.dj_phi = {n, n, [A](const Vec&, const Vec&) -> Mat { return A; }, DGKind::gonzalez};
  T.U_bar = [U](const Vec&, const Vec&) -> Mat { return U; };
  return T;
}

namespace {

Mat checked_inverse(const Mat& M, const char* what) {
  if (is_numerically_singular(M)) throw SingularTransformation(std::string(what) + " is singular");
  return M.inverse();
}

}  // namespace

SystemTransformation inverse_transformation(const SystemTransformation& T) {
  SystemTransformation inv;
  inv.phi = T.phi_inv;
  inv.phi_inv = T.phi;
  inv.U = [T](const Vec& x) -> Mat { return checked_inverse(T.U(T.phi_inv.value(x)), "U"); };
  inv.dj_phi = inverse_discrete_jacobian(T.dj_phi, T.phi_inv);
  inv.U_bar = [T](const Vec& x, const Vec& xp) -> Mat {
    return checked_inverse(T.U_bar(T.phi_inv.value(x), T.phi_inv.value(xp)), "U_bar");
  };
  return inv;
}

PHDAESystem transform_system(const PHDAESystem& sys, const SystemTransformation& T) {
  if (T.phi.out_dim != sys.n || T.phi.in_dim != sys.n)
    throw DimensionMismatch("transform_system: phi does not match the state dimension");
  PHDAESystem out;
  out.name = sys.name + "~";
  out.n = sys.n;
  out.m = sys.m;
  const auto phi = T.phi;
  const auto U = T.U;
  out.E = [sys, phi, U](const Vec& xt) -> Mat {
    return U(xt).transpose() * sys.E(phi.value(xt)) * phi.jacobian(xt);
  };
  out.J = [sys, phi, U](const Vec& xt) -> Mat {
    const Mat u = U(xt);
    return u.transpose() * sys.J(phi.value(xt)) * u;
  };
  out.R = [sys, phi, U](const Vec& xt) -> Mat {
    const Mat u = U(xt);
    return u.transpose() * sys.R(phi.value(xt)) * u;
  };
  out.B = [sys, phi, U](const Vec& xt) -> Mat { return U(xt).transpose() * sys.B(phi.value(xt)); };
  out.z = [sys, phi, U](const Vec& xt) -> Vec {
    return checked_inverse(U(xt), "U") * sys.z(phi.value(xt));
  };
  out.H = compose(sys.H, phi);
  if (sys.in_domain) {
    out.in_domain = [sys, phi](const Vec& xt) { return sys.in_domain(phi.value(xt)); };
  }
  if (sys.constraints) {
    ConstraintMonitor cm;
    cm.position = [sys, phi](const Vec& xt) { return sys.constraints->position(phi.value(xt)); };
    cm.velocity = [sys, phi](const Vec& xt) { return sys.constraints->velocity(phi.value(xt)); };
    out.constraints = cm;
  }
  return out;
}

DDRSystem to_ddr(const PHDAESystem& sys) { return DDRSystem{sys}; }

Mat ddr_kernel(const DDRSystem& ddr, const Vec& x) {
  const auto& s = ddr.base;
  const int n = s.n, m = s.m;
  const Mat E = s.E(x);
  const Mat B = s.B(x);
  Mat K = Mat::Zero(2 * n + m, 2 * n + m);
  K.block(0, n, n, n) = -E.transpose();
  K.block(n, 0, n, n) = E;
  K.block(n, n, n, n) = s.J(x) - s.R(x);
  if (m > 0) {
    K.block(n, 2 * n, n, m) = B;
    K.block(2 * n, n, m, n) = -B.transpose();
  }
  return K;
}

Vec ddr_residual(const DDRSystem& ddr, const Vec& x, const Vec& xdot, const Vec& f, const Vec& u,
                 const Vec& y) {
  const int n = ddr.base.n, m = ddr.base.m;
  Vec lhs = Vec::Zero(2 * n + m);
  lhs.head(n) = ddr.base.H.gradient(x);
  if (m > 0) lhs.tail(m) = y;
  Vec w(2 * n + m);
  w.head(n) = -xdot;
  w.segment(n, n) = f;
  if (m > 0) w.tail(m) = u;
  return lhs + ddr_kernel(ddr, x) * w;
}

}  // namespace phdae
