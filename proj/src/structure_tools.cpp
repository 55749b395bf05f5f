// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#include "phdae/structure_tools.hpp"

#include <algorithm>
#include <future>
#include <sstream>
#include <utility>

namespace phdae {

DiscreteGradientPair build_pair_semi_explicit(TwoPointMat E11_bar, DiscreteGradient dg1,
                                              TwoPointVec z2_bar, int n1, int n2) {
  if (n1 <= 0 || n2 < 0 || dg1.dim != n1)
    throw DimensionMismatch("build_pair_semi_explicit: inconsistent block sizes");
  if (n2 > 0 && !z2_bar) throw ModelDefinitionError("build_pair_semi_explicit: z2_bar missing");
  const int n = n1 + n2;
  DiscreteGradientPair p;
  p.E_bar = [E11_bar, n1, n](const Vec& x, const Vec& xp) -> Mat {
    Mat E = Mat::Zero(n, n);
    E.topLeftCorner(n1, n1) = E11_bar(x, xp);
    return E;
  };
  p.z_bar = [E11_bar, dg1, z2_bar, n1, n2, n](const Vec& x, const Vec& xp) -> Vec {
    const Mat E11 = E11_bar(x, xp);
    if (is_numerically_singular(E11, 1e-13)) throw SingularE11("discrete E11 is singular");
    Vec z(n);
    z.head(n1) = E11.transpose().partialPivLu().solve(dg1(x.head(n1), xp.head(n1)));
    if (n2 > 0) z.tail(n2) = z2_bar(x, xp);
    return z;
  };
  return p;
}

ConstantEDecomposition decompose_constant_E(const Mat& E) {
  if (E.rows() != E.cols()) throw DimensionMismatch("decompose_constant_E: E must be square");
  const int n = static_cast<int>(E.rows());
  SvdResult s = svd(E);
  const double s1 = n > 0 ? s.sigma(0) : 0.0;
  int r = 0;
  for (int i = 0; i < n; ++i) {
    const double si = s.sigma(i);
    if (si >= 1e-12 * s1 && si <= 1e-8 * s1) {
      std::ostringstream os;
      os << "decompose_constant_E: singular value " << si << " is too close to the rank cut";
      throw RankAmbiguous(os.str());
    }
    if (si > 1e-10 * s1) ++r;
  }
  // Fix the sign freedom of the SVD so the factors are reproducible.
  for (int i = 0; i < n; ++i) {
    Eigen::Index k;
    s.V.col(i).cwiseAbs().maxCoeff(&k);
    if (s.V(k, i) < 0) {
      s.V.col(i) *= -1.0;
      if (i < r) s.U.col(i) *= -1.0;
    }
    if (i >= r) {
      s.U.col(i).cwiseAbs().maxCoeff(&k);
      if (s.U(k, i) < 0) s.U.col(i) *= -1.0;
    }
  }
  ConstantEDecomposition d;
  d.r = r;
  d.U1 = s.U.leftCols(r);
  d.U2 = s.U.rightCols(n - r);
  d.V1 = s.V.leftCols(r);
  d.V2 = s.V.rightCols(n - r);
  d.sigma1 = s.sigma.head(r);
  return d;
}

ScalarField reduced_hamiltonian(const ScalarField& H, const ConstantEDecomposition& d) {
  const Mat V1 = d.V1;
  return {d.r, [H, V1](const Vec& xt) { return H.value(V1 * xt); },
          [H, V1](const Vec& xt) -> Vec { return V1.transpose() * H.gradient(V1 * xt); }};
}

DiscreteGradientPair build_pair_constant_E(const Mat& E, const ScalarField& H,
                                           const DiscreteGradient& dg_spec,
                                           const TwoPointVec& z2_hat) {
  if (E.rows() != H.dim) throw DimensionMismatch("build_pair_constant_E: E does not match H");
  const ConstantEDecomposition d = decompose_constant_E(E);
  if (dg_spec.dim != d.r)
    throw DimensionMismatch("build_pair_constant_E: reduced gradient has the wrong dimension");
  if (d.r < E.rows() && !z2_hat) throw ModelDefinitionError("build_pair_constant_E: z2_hat missing");
  const Mat W = d.U1 * d.sigma1.cwiseInverse().asDiagonal();
  const Mat V1 = d.V1;
  const Mat U2 = d.U2;
  DiscreteGradientPair p;
  p.E_bar = [E](const Vec&, const Vec&) -> Mat { return E; };
  p.z_bar = [W, V1, U2, dg_spec, z2_hat](const Vec& x, const Vec& xp) -> Vec {
    Vec z = W * dg_spec(Vec(V1.transpose() * x), Vec(V1.transpose() * xp));
    if (U2.cols() > 0) z += U2 * z2_hat(x, xp);
    return z;
  };
  return p;
}

TwoPointVec default_z2_hat(const Mat& E, const VecFn& z) {
  const Mat U2 = decompose_constant_E(E).U2;
  return [U2, z](const Vec& x, const Vec& xp) -> Vec {
    return U2.transpose() * z(Vec(0.5 * (x + xp)));
  };
}

namespace {

Mat checked_inverse(const Mat& M) {
  if (is_numerically_singular(M)) throw SingularTransformation("U_bar is singular");
  return M.inverse();
}

}  // namespace

DiscreteGradientPair transform_pair(const DiscreteGradientPair& pair, const SystemTransformation& T) {
  DiscreteGradientPair out;
  out.E_bar = [pair, T](const Vec& xt, const Vec& xtp) -> Mat {
    return T.U_bar(xt, xtp).transpose() * pair.E_bar(T.phi.value(xt), T.phi.value(xtp)) *
           T.dj_phi(xt, xtp);
  };
  out.z_bar = [pair, T](const Vec& xt, const Vec& xtp) -> Vec {
    return checked_inverse(T.U_bar(xt, xtp)) * pair.z_bar(T.phi.value(xt), T.phi.value(xtp));
  };
  return out;
}

ConsistentApprox transform_approx(const ConsistentApprox& a, const SystemTransformation& T) {
  ConsistentApprox out;
  auto congruence = [T](const TwoPointMat& F) -> TwoPointMat {
    if (!F) return {};
    return [F, T](const Vec& xt, const Vec& xtp) -> Mat {
      const Mat U = T.U_bar(xt, xtp);
      return U.transpose() * F(T.phi.value(xt), T.phi.value(xtp)) * U;
    };
  };
  out.J_bar = congruence(a.J_bar);
  out.R_bar = congruence(a.R_bar);
  if (a.B_bar) {
    out.B_bar = [F = a.B_bar, T](const Vec& xt, const Vec& xtp) -> Mat {
      return T.U_bar(xt, xtp).transpose() * F(T.phi.value(xt), T.phi.value(xtp));
    };
  }
  if (a.E_bar && a.z_bar) {
    const DiscreteGradientPair p = transform_pair({a.E_bar, a.z_bar}, T);
    out.E_bar = p.E_bar;
    out.z_bar = p.z_bar;
  }
  out.E_mode = out.J_mode = out.R_mode = out.B_mode = out.z_mode = CoeffMode::custom;
  return out;
}

ColspaceCheck check_colspace(const Mat& E_bar_T, const Vec& dgH_val, double rel_tol) {
  if (E_bar_T.rows() != dgH_val.size()) throw DimensionMismatch("check_colspace: size mismatch");
  const LeastSquaresResult ls = least_squares_min_norm(E_bar_T, dgH_val);
  ColspaceCheck c;
  c.f = ls.x;
  c.residual = ls.residual_norm;
  c.solvable = c.residual <= rel_tol * dgH_val.norm();
  return c;
}

namespace {

void compare_runs(const Trajectory& a, const Trajectory& b, const VectorField* map_b,
                  EquivalenceReport& rep) {
  const std::size_t steps = std::min(a.steps.size(), b.steps.size());
  for (std::size_t k = 1; k <= steps; ++k) {
    const Vec xb = map_b ? map_b->value(b.states[k]) : b.states[k];
    const double d = inf_norm(Vec(a.states[k] - xb));
    rep.step_deviations.push_back(d);
    rep.max_state_deviation = std::max(rep.max_state_deviation, d);
    if (!map_b) {
      const double dc = inf_norm(Vec(a.steps[k - 1].costate - b.steps[k - 1].costate));
      rep.max_costate_deviation = std::max(rep.max_costate_deviation, dc);
    }
  }
}

EquivalenceReport run_pair(std::shared_ptr<const Stepper> sa, const Vec& xa,
                           std::shared_ptr<const Stepper> sb, const Vec& xb, const InputFn& input,
                           double t_end, double h, const VectorField* map_b, double tol,
                           std::string mapping) {
  EquivalenceReport rep;
  rep.tol = tol;
  rep.mapping = std::move(mapping);
  auto launch = [&](std::shared_ptr<const Stepper> s, const Vec& x0) {
    return std::async(std::launch::async, [s, x0, &input, t_end, h] {
      return integrate(s, x0, input, t_end, h);
    });
  };
  auto fa = launch(sa, xa);
  auto fb = launch(sb, xb);
  Trajectory ta, tb;
  auto collect = [&rep](std::future<Trajectory>& f, Trajectory& out, const char* label) {
    try {
      out = f.get();
    } catch (const IntegrationAborted& e) {
      out = e.partial();
      rep.failed_run = true;
      rep.failure += std::string(label) + ": " + e.what() + "\n";
    }
  };
  collect(fa, ta, "reference");
  collect(fb, tb, "candidate");
  compare_runs(ta, tb, map_b, rep);
  rep.passed = !rep.failed_run && rep.max_state_deviation <= tol;
  return rep;
}

}  // namespace

EquivalenceReport verify_sedg_dgp_equivalence(const SemiExplicitPHDAE& se, const DiscreteGradient& dg1,
                                              const ConsistentApprox& approx, const Vec& x0,
                                              const InputFn& input, double t_end, double h,
                                              const NewtonConfig& cfg, double tol) {
  auto sedg = make_semi_explicit_stepper(se, dg1, approx, cfg);
  const DiscreteGradientPair pair =
      build_pair_semi_explicit(approx.E11_bar, dg1, approx.z2_bar, se.n1, se.n2);
  auto dgp = make_dgp_stepper(embed_semi_explicit(se), pair, approx, cfg);
  return run_pair(sedg, x0, dgp, x0, input, t_end, h, nullptr, tol, "identity");
}

EquivalenceReport verify_transformation_invariance(const PHDAESystem& sys,
                                                   const DiscreteGradientPair& pair,
                                                   const ConsistentApprox& approx,
                                                   const SystemTransformation& T, const Vec& x0,
                                                   const InputFn& input, double t_end, double h,
                                                   const NewtonConfig& cfg, double tol) {
  auto orig = make_dgp_stepper(sys, pair, approx, cfg);
  auto trans = make_dgp_stepper(transform_system(sys, T), transform_pair(pair, T),
                                transform_approx(approx, T), cfg);
  const Vec xt0 = T.phi_inv.value(x0);
  return run_pair(orig, x0, trans, xt0, input, t_end, h, &T.phi, tol,
                  "x = phi(x~), compared in original coordinates");
}

}  // namespace phdae
