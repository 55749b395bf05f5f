// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "phdae/discrete_calculus.hpp"
#include "phdae/errors.hpp"
#include "phdae/models.hpp"
#include "phdae/numerics.hpp"

namespace phdae {

enum class CoeffMode { midpoint, left, right, custom };

std::string to_string(CoeffMode mode);
CoeffMode coeff_mode_from_string(const std::string& name);

/// Evaluate f at the midpoint, the left or the right end of (x, x').
TwoPointMat sample_two_point(const MatFn& f, CoeffMode mode);
TwoPointVec sample_two_point(const VecFn& f, CoeffMode mode);

/// Two-point evaluators of the coefficients. Unused members may stay empty:
/// E11_bar and z2_bar serve the semi-explicit scheme, E_bar and z_bar the
/// others.
struct ConsistentApprox {
  TwoPointMat E_bar, E11_bar, J_bar, R_bar, B_bar;
  TwoPointVec z_bar, z2_bar;
  CoeffMode E_mode = CoeffMode::midpoint;
  CoeffMode J_mode = CoeffMode::midpoint;
  CoeffMode R_mode = CoeffMode::midpoint;
  CoeffMode B_mode = CoeffMode::midpoint;
  CoeffMode z_mode = CoeffMode::midpoint;
};

struct CoeffModes {
  CoeffMode E = CoeffMode::midpoint;
  CoeffMode J = CoeffMode::midpoint;
  CoeffMode R = CoeffMode::midpoint;
  CoeffMode B = CoeffMode::midpoint;
  CoeffMode z = CoeffMode::midpoint;
};

ConsistentApprox make_approx(const PHDAESystem& sys, const CoeffModes& modes = {});
ConsistentApprox make_approx(const SemiExplicitPHDAE& se, const CoeffModes& modes = {});

/// Max violation of consistency, skew-symmetry of J_bar and semi-definiteness
/// of R_bar over the given point pairs.
double approx_violation(const ConsistentApprox& a, const PHDAESystem& sys,
                        const std::vector<std::pair<Vec, Vec>>& pairs);

struct DiscreteGradientPair {
  TwoPointMat E_bar;
  TwoPointVec z_bar;
};

/// |z_bar^T E_bar (x'-x) - (H(x') - H(x))|.
double directionality_residual(const DiscreteGradientPair& pair, const ScalarField& H, const Vec& x,
                               const Vec& xp);

struct StepLedger {
  double dH = 0.0;
  double dissipated = 0.0;
  double supplied = 0.0;
  double balance_residual = 0.0;
};

struct StepResult {
  Vec x_next;
  Vec costate;
  Vec y;
  Vec u;
  NewtonReport newton;
  StepLedger ledger;
};

enum class Completion {
  known_structure,
  match_costate_next,
  match_costate_prev,
  match_costate_midpoint,
  least_norm,
};

std::string to_string(Completion c);
Completion completion_from_string(const std::string& name);

/// Residual c(x, x', f) that vanishes for the wanted co-state.
using CompletionResidual = std::function<Vec(const Vec&, const Vec&, const Vec&)>;

/// Rule fixing the freedom left by the DDR scheme. The remaining freedom is
/// resolved by minimising |c| over the solution manifold of the scheme.
/// match_costate_prev never enters x'; any undetermined x' components then
/// stay at the Newton guess x^k.
struct DDRCompletion {
  Completion strategy = Completion::least_norm;
  CompletionResidual residual;  // known_structure only
};

StepResult step_dgp(const PHDAESystem& sys, const DiscreteGradientPair& pair,
                    const ConsistentApprox& approx, const Vec& x, const Vec& u, double h,
                    const NewtonConfig& cfg);

StepResult step_semi_explicit(const SemiExplicitPHDAE& se, const DiscreteGradient& dg1,
                              const ConsistentApprox& approx, const Vec& x, const Vec& u, double h,
                              const NewtonConfig& cfg);

StepResult step_ddr(const DDRSystem& ddr, const DiscreteGradient& dg, const ConsistentApprox& approx,
                    const DDRCompletion& completion, const Vec& x, const Vec& u, double h,
                    const NewtonConfig& cfg);

/// Co-state solve of the DDR scheme for a prescribed transition x -> x'.
/// Throws ColspaceUnsolvable when DG H(x, x') is outside colsp(E_bar^T).
StepResult step_ddr_fixed(const DDRSystem& ddr, const DiscreteGradient& dg,
                          const ConsistentApprox& approx, const DDRCompletion& completion,
                          const Vec& x, const Vec& x_next, const Vec& u, double h);

StepResult step_midpoint(const PHDAESystem& sys, const Vec& x, const Vec& u, double h,
                         const NewtonConfig& cfg);

/// A one-step method bound to its model and discretisation data.
class Stepper {
 public:
  virtual ~Stepper() = default;
  virtual std::string scheme() const = 0;
  /// Full-state view of the model (embedded for semi-explicit systems).
  virtual const PHDAESystem& system() const = 0;
  virtual StepResult step(const Vec& x, const Vec& u, double h) const = 0;
  /// Ledger recomputed from a stored transition and co-state.
  virtual StepLedger ledger(const Vec& x, const Vec& x_next, const Vec& costate, const Vec& u,
                            double h) const = 0;
  const NewtonConfig& newton() const { return cfg_; }

 protected:
  explicit Stepper(NewtonConfig cfg) : cfg_(cfg) {}
  NewtonConfig cfg_;
};

std::shared_ptr<Stepper> make_dgp_stepper(PHDAESystem sys, DiscreteGradientPair pair,
                                          ConsistentApprox approx, NewtonConfig cfg);
std::shared_ptr<Stepper> make_semi_explicit_stepper(SemiExplicitPHDAE se, DiscreteGradient dg1,
                                                    ConsistentApprox approx, NewtonConfig cfg);
std::shared_ptr<Stepper> make_ddr_stepper(DDRSystem ddr, DiscreteGradient dg,
                                          ConsistentApprox approx, DDRCompletion completion,
                                          NewtonConfig cfg);
std::shared_ptr<Stepper> make_midpoint_stepper(PHDAESystem sys, NewtonConfig cfg);

/// u(k, t) for step k starting at t.
using InputFn = std::function<Vec(int, double)>;

InputFn zero_input(int m);

enum class InputSampling { midpoint, left };

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<StepResult> steps;
  std::string scheme;
  std::string model;
  double h = 0.0;
  double tol = 0.0;
  std::shared_ptr<const Stepper> stepper;
};

/// Thrown by integrate; carries every step accepted before the failure.
class IntegrationAborted : public Error {
 public:
  IntegrationAborted(const std::string& what, std::string cause, Trajectory partial)
      : Error(what), cause_(std::move(cause)), partial_(std::move(partial)) {}
  /// Name of the error raised by the failing step, e.g. "NonConvergence".
  const std::string& cause() const { return cause_; }
  const Trajectory& partial() const { return partial_; }

 private:
  std::string cause_;
  Trajectory partial_;
};

/// Number of steps for (t_end, h); throws ConfigError if it is zero or h does
/// not divide t_end.
int step_count(double t_end, double h);

Trajectory integrate(std::shared_ptr<const Stepper> stepper, const Vec& x0, const InputFn& input,
                     double t_end, double h, InputSampling sampling = InputSampling::midpoint);

std::vector<StepLedger> power_balance_series(const Trajectory& traj);

}  // namespace phdae
