// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "phdae/integrators.hpp"

namespace phdae {

/// E_bar = diag(E11_bar, 0), z_bar = (E11_bar^{-T} DG H1(x1, x1'), z2_bar).
DiscreteGradientPair build_pair_semi_explicit(TwoPointMat E11_bar, DiscreteGradient dg1,
                                              TwoPointVec z2_bar, int n1, int n2);

/// E = U diag(Sigma1, 0) V^T with r = #{sigma_i > 1e-10 sigma_1}. Columns of
/// V are sign-normalised so the largest entry is positive.
struct ConstantEDecomposition {
  int r = 0;
  Mat U1, U2, V1, V2;
  Vec sigma1;
};

/// Throws RankAmbiguous if a singular value lies in [1e-12, 1e-8] * sigma_1.
ConstantEDecomposition decompose_constant_E(const Mat& E);

/// H1~(x1~) = H(V1 x1~) on the r reduced coordinates.
ScalarField reduced_hamiltonian(const ScalarField& H, const ConstantEDecomposition& d);

/// z_bar = U1 Sigma1^{-1} dg_spec(V1^T x, V1^T x') + U2 z2_hat(x, x'), E_bar = E.
/// An empty z2_hat is only allowed when E has full rank.
DiscreteGradientPair build_pair_constant_E(const Mat& E, const ScalarField& H,
                                           const DiscreteGradient& dg_spec,
                                           const TwoPointVec& z2_hat);

/// z2_hat(x, x') = U2^T z((x + x') / 2).
TwoPointVec default_z2_hat(const Mat& E, const VecFn& z);

/// E^ = U_bar^T E_bar(phi, phi') Dphi_bar, z^ = U_bar^{-1} z_bar(phi, phi').
DiscreteGradientPair transform_pair(const DiscreteGradientPair& pair, const SystemTransformation& T);

/// J^ = U_bar^T J_bar U_bar, R^ likewise, B^ = U_bar^T B_bar, all at (phi, phi').
ConsistentApprox transform_approx(const ConsistentApprox& a, const SystemTransformation& T);

struct ColspaceCheck {
  bool solvable = false;
  double residual = 0.0;
  Vec f;
};

/// Least-squares solve of E_bar^T f = DG H; solvable iff the residual is at
/// most rel_tol * |DG H|.
ColspaceCheck check_colspace(const Mat& E_bar_T, const Vec& dgH_val, double rel_tol);

struct EquivalenceReport {
  double max_state_deviation = 0.0;
  double max_costate_deviation = 0.0;
  std::vector<double> step_deviations;
  double tol = 0.0;
  bool passed = false;
  bool failed_run = false;
  std::string failure;
  std::string mapping;
};

EquivalenceReport verify_sedg_dgp_equivalence(const SemiExplicitPHDAE& se, const DiscreteGradient& dg1,
                                              const ConsistentApprox& approx, const Vec& x0,
                                              const InputFn& input, double t_end, double h,
                                              const NewtonConfig& cfg, double tol);

/// Integrates sys with (pair, approx) and its transform under T from
/// phi^{-1}(x0), then compares phi(x~^k) with x^k.
EquivalenceReport verify_transformation_invariance(const PHDAESystem& sys,
                                                   const DiscreteGradientPair& pair,
                                                   const ConsistentApprox& approx,
                                                   const SystemTransformation& T, const Vec& x0,
                                                   const InputFn& input, double t_end, double h,
                                                   const NewtonConfig& cfg, double tol);

}  // namespace phdae
