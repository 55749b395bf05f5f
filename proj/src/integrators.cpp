// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#include "phdae/integrators.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "phdae/structure_tools.hpp"

namespace phdae {

std::string to_string(CoeffMode mode) {
  switch (mode) {
    case CoeffMode::midpoint: return "midpoint";
    case CoeffMode::left: return "left";
    case CoeffMode::right: return "right";
    case CoeffMode::custom: return "custom";
  }
  return "?";
}

CoeffMode coeff_mode_from_string(const std::string& name) {
  if (name == "midpoint") return CoeffMode::midpoint;
  if (name == "left") return CoeffMode::left;
  if (name == "right") return CoeffMode::right;
  if (name == "custom") return CoeffMode::custom;
  throw ConfigError("unknown coefficient mode '" + name + "'");
}

namespace {

template <class F>
auto sampled(F f, CoeffMode mode) {
  return [f = std::move(f), mode](const Vec& x, const Vec& xp) {
    switch (mode) {
      case CoeffMode::left: return f(x);
      case CoeffMode::right: return f(xp);
      case CoeffMode::midpoint: return f(Vec(0.5 * (x + xp)));
      case CoeffMode::custom: break;
    }
    throw ConfigError("custom coefficient mode needs an explicit evaluator");
  };
}

}  // namespace

TwoPointMat sample_two_point(const MatFn& f, CoeffMode mode) { return sampled(f, mode); }
TwoPointVec sample_two_point(const VecFn& f, CoeffMode mode) { return sampled(f, mode); }

ConsistentApprox make_approx(const PHDAESystem& sys, const CoeffModes& modes) {
  ConsistentApprox a;
  a.E_bar = sample_two_point(sys.E, modes.E);
  a.J_bar = sample_two_point(sys.J, modes.J);
  a.R_bar = sample_two_point(sys.R, modes.R);
  a.B_bar = sample_two_point(sys.B, modes.B);
  a.z_bar = sample_two_point(sys.z, modes.z);
  a.E_mode = modes.E;
  a.J_mode = modes.J;
  a.R_mode = modes.R;
  a.B_mode = modes.B;
  a.z_mode = modes.z;
  return a;
}

ConsistentApprox make_approx(const SemiExplicitPHDAE& se, const CoeffModes& modes) {
  ConsistentApprox a = make_approx(embed_semi_explicit(se), modes);
  a.E11_bar = sample_two_point(se.E11, modes.E);
  a.z2_bar = sample_two_point(se.z2, modes.z);
  return a;
}

double approx_violation(const ConsistentApprox& a, const PHDAESystem& sys,
                        const std::vector<std::pair<Vec, Vec>>& pairs) {
  double worst = 0.0;
  auto consider = [&](double v) { worst = std::max(worst, v); };
  for (const auto& [x, xp] : pairs) {
    if (a.E_bar) consider(inf_norm(Mat(a.E_bar(x, x) - sys.E(x))));
    if (a.J_bar) consider(inf_norm(Mat(a.J_bar(x, x) - sys.J(x))));
    if (a.R_bar) consider(inf_norm(Mat(a.R_bar(x, x) - sys.R(x))));
    if (a.B_bar && sys.m > 0) consider(inf_norm(Mat(a.B_bar(x, x) - sys.B(x))));
    if (a.z_bar) consider(inf_norm(Vec(a.z_bar(x, x) - sys.z(x))));
    const StructureReport st = validate_structure(a.J_bar(x, xp), a.R_bar(x, xp), 0.0);
    consider(st.max_violation);
  }
  return worst;
}

double directionality_residual(const DiscreteGradientPair& pair, const ScalarField& H, const Vec& x,
                               const Vec& xp) {
  const double lhs = pair.z_bar(x, xp).dot(pair.E_bar(x, xp) * (xp - x));
  return std::abs(lhs - (H.value(xp) - H.value(x)));
}

std::string to_string(Completion c) {
  switch (c) {
    case Completion::known_structure: return "known-structure";
    case Completion::match_costate_next: return "match-costate-next";
    case Completion::match_costate_prev: return "match-costate-prev";
    case Completion::match_costate_midpoint: return "match-costate-midpoint";
    case Completion::least_norm: return "least-norm";
  }
  return "?";
}

Completion completion_from_string(const std::string& name) {
  for (Completion c : {Completion::known_structure, Completion::match_costate_next,
                       Completion::match_costate_prev, Completion::match_costate_midpoint,
                       Completion::least_norm})
    if (to_string(c) == name) return c;
  throw ConfigError("unknown completion strategy '" + name + "'");
}

namespace {

void check_step_args(const Vec& x, const Vec& u, int n, int m, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("step size must be positive");
  if (x.size() != n) throw DimensionMismatch("state has wrong dimension");
  if (u.size() != m) throw DimensionMismatch("input has wrong dimension");
  require_finite(x, "state");
  require_finite(u, "input");
}

StepLedger make_ledger(double dH, const Vec& costate, const Mat& R_bar, const Vec& y, const Vec& u,
                       double h) {
  StepLedger l;
  l.dH = dH;
  l.dissipated = h * costate.dot(R_bar * costate);
  l.supplied = h * y.dot(u);
  l.balance_residual = l.dH + l.dissipated - l.supplied;
  return l;
}

NewtonReport newton_or_throw(const VecFn& residual, const Vec& guess, const NewtonConfig& cfg,
                             const std::string& what) {
  NewtonReport rep = solve_newton(residual, MatFn{}, guess, cfg);
  if (!rep.converged) {
    std::ostringstream os;
    os << what << ": Newton did not converge after " << rep.iterations
       << " iterations (residual " << rep.residual_norm << ")";
    throw NonConvergence(os.str(), rep.residual_norm, rep.iterations, rep.solution);
  }
  return rep;
}

}  // namespace

StepResult step_dgp(const PHDAESystem& sys, const DiscreteGradientPair& pair,
                    const ConsistentApprox& approx, const Vec& x, const Vec& u, double h,
                    const NewtonConfig& cfg) {
  check_step_args(x, u, sys.n, sys.m, h);
  auto residual = [&](const Vec& xp) -> Vec {
    const Vec zb = pair.z_bar(x, xp);
    Vec r = pair.E_bar(x, xp) * (xp - x) - h * (approx.J_bar(x, xp) - approx.R_bar(x, xp)) * zb;
    if (sys.m > 0) r -= h * approx.B_bar(x, xp) * u;
    return r;
  };
  StepResult res;
  res.newton = newton_or_throw(residual, x, cfg, sys.name + " dgp step");
  res.x_next = res.newton.solution;
  res.costate = pair.z_bar(x, res.x_next);
  res.u = u;
  res.y = sys.m > 0 ? Vec(approx.B_bar(x, res.x_next).transpose() * res.costate) : Vec(0);
  res.ledger = make_ledger(sys.H.value(res.x_next) - sys.H.value(x), res.costate,
                           approx.R_bar(x, res.x_next), res.y, u, h);
  return res;
}

StepResult step_semi_explicit(const SemiExplicitPHDAE& se, const DiscreteGradient& dg1,
                              const ConsistentApprox& approx, const Vec& x, const Vec& u, double h,
                              const NewtonConfig& cfg) {
  const int n1 = se.n1;
  const int n2 = se.n2;
  const int n = se.n();
  check_step_args(x, u, n, se.m, h);

  auto costate = [&](const Vec& xp, const Vec& z1) {
    Vec zb(n);
    zb.head(n1) = z1;
    if (n2 > 0) zb.tail(n2) = approx.z2_bar(x, xp);
    return zb;
  };
  auto residual = [&](const Vec& w) -> Vec {
    const Vec xp = w.head(n);
    const Vec z1 = w.tail(n1);
    const Mat E11 = approx.E11_bar(x, xp);
    const Vec zb = costate(xp, z1);
    Vec r(n + n1);
    r.head(n) = -h * (approx.J_bar(x, xp) - approx.R_bar(x, xp)) * zb;
    if (se.m > 0) r.head(n) -= h * approx.B_bar(x, xp) * u;
    r.head(n1) += E11 * (xp.head(n1) - x.head(n1));
    r.tail(n1) = E11.transpose() * z1 - dg1(x.head(n1), xp.head(n1));
    return r;
  };

  Vec guess(n + n1);
  guess.head(n) = x;
  guess.tail(n1) = se.z1(x);

  const std::string what = se.name + " semi-explicit step";
  NewtonReport rep = solve_newton(residual, MatFn{}, guess, cfg);
  const Vec xp = rep.solution.head(n);
  if (is_numerically_singular(approx.E11_bar(x, xp), 1e-13))
    throw SingularE11(what + ": discrete E11 is singular; try a smaller step");
  if (!rep.converged) {
    std::ostringstream os;
    os << what << ": Newton did not converge after " << rep.iterations << " iterations (residual "
       << rep.residual_norm << ")";
    throw NonConvergence(os.str(), rep.residual_norm, rep.iterations, xp);
  }

  StepResult res;
  res.x_next = xp;
  res.costate = costate(xp, rep.solution.tail(n1));
  res.u = u;
  res.y = se.m > 0 ? Vec(approx.B_bar(x, xp).transpose() * res.costate) : Vec(0);
  res.ledger = make_ledger(se.H1.value(xp.head(n1)) - se.H1.value(x.head(n1)), res.costate,
                           approx.R_bar(x, xp), res.y, u, h);
  res.newton = std::move(rep);
  res.newton.solution = xp;
  return res;
}

namespace {

// c(x, x', f) for the built-in completion rules.
CompletionResidual completion_residual(const DDRSystem& ddr, const ConsistentApprox& approx,
                                       const DDRCompletion& completion) {
  const VecFn& z = ddr.base.z;
  switch (completion.strategy) {
    case Completion::known_structure:
      if (!completion.residual) throw ConfigError("known-structure completion needs a residual");
      return completion.residual;
    case Completion::match_costate_next:
      return [z](const Vec&, const Vec& xp, const Vec& f) -> Vec { return f - z(xp); };
    case Completion::match_costate_prev:
      return [z](const Vec& x, const Vec&, const Vec& f) -> Vec { return f - z(x); };
    case Completion::match_costate_midpoint:
      return [z](const Vec& x, const Vec& xp, const Vec& f) -> Vec {
        return f - z(Vec(0.5 * (x + xp)));
      };
    case Completion::least_norm: {
      TwoPointVec zb = approx.z_bar ? approx.z_bar : sample_two_point(z, CoeffMode::midpoint);
      return [zb](const Vec& x, const Vec& xp, const Vec& f) -> Vec { return f - zb(x, xp); };
    }
  }
  throw ConfigError("unknown completion strategy");
}

// One Gauss-Newton step for min |c(w)| subject to C(w) = 0: the minimum-norm
// correction of the linearised constraint plus the best move in its kernel.
Vec constrained_gauss_newton_step(const VecFn& cons, const VecFn& comp, const Vec& w,
                                  const Vec& C, double fd_step) {
  const Mat A = finite_difference_jacobian(cons, w, fd_step);
  Vec dw = least_squares_min_norm(A, -C).x;
  const Mat N = null_space(A, 1e-10);
  if (N.cols() > 0) {
    const Mat G = finite_difference_jacobian(comp, w, fd_step);
    const Vec r = comp(w) + G * dw;
    dw += N * least_squares_min_norm(G * N, -r).x;
  }
  return dw;
}

}  // namespace

StepResult step_ddr(const DDRSystem& ddr, const DiscreteGradient& dg, const ConsistentApprox& approx,
                    const DDRCompletion& completion, const Vec& x, const Vec& u, double h,
                    const NewtonConfig& cfg) {
  const PHDAESystem& sys = ddr.base;
  const int n = sys.n;
  check_step_args(x, u, n, sys.m, h);
  cfg.validate();
  const CompletionResidual c = completion_residual(ddr, approx, completion);

  auto cons = [&](const Vec& w) -> Vec {
    const Vec xp = w.head(n);
    const Vec f = w.tail(n);
    const Mat Eb = approx.E_bar(x, xp);
    Vec r(2 * n);
    r.head(n) = Eb * (xp - x) - h * (approx.J_bar(x, xp) - approx.R_bar(x, xp)) * f;
    if (sys.m > 0) r.head(n) -= h * approx.B_bar(x, xp) * u;
    r.tail(n) = Eb.transpose() * f - dg(x, xp);
    return r;
  };
  auto comp = [&](const Vec& w) -> Vec { return c(x, w.head(n), w.tail(n)); };

  Vec w(2 * n);
  w.head(n) = x;
  w.tail(n) = sys.z(x);
  NewtonReport rep;
  Vec C = cons(w);
  double cn = inf_norm(C);
  for (int it = 0; it < cfg.max_iter; ++it) {
    const Vec dw = constrained_gauss_newton_step(cons, comp, w, C, cfg.fd_step);
    w += dw;
    ++rep.iterations;
    if (!w.allFinite()) break;
    C = cons(w);
    cn = inf_norm(C);
    if (cn <= cfg.tol && inf_norm(dw) <= 1e-8 * (1.0 + inf_norm(w))) {
      rep.converged = true;
      break;
    }
  }
  if (!rep.converged && std::isfinite(cn) && cn <= cfg.tol) rep.converged = true;
  rep.residual_norm = cn;

  const Vec xp = w.head(n);
  if (!rep.converged) {
    if (xp.allFinite()) {
      const ColspaceCheck cc = check_colspace(approx.E_bar(x, xp).transpose(), dg(x, xp), 1e-8);
      if (!cc.solvable)
        throw ColspaceUnsolvable(sys.name + " ddr step: DG H is not in the column space of E_bar^T",
                                 cc.residual);
    }
    std::ostringstream os;
    os << sys.name << " ddr step: Gauss-Newton did not converge after " << rep.iterations
       << " iterations (residual " << cn << ")";
    throw NonConvergence(os.str(), cn, rep.iterations, xp);
  }

  StepResult res;
  res.x_next = xp;
  res.costate = w.tail(n);
  res.u = u;
  res.y = sys.m > 0 ? Vec(approx.B_bar(x, xp).transpose() * res.costate) : Vec(0);
  res.ledger = make_ledger(sys.H.value(xp) - sys.H.value(x), res.costate, approx.R_bar(x, xp), res.y,
                           u, h);
  rep.solution = xp;
  res.newton = std::move(rep);
  return res;
}

StepResult step_ddr_fixed(const DDRSystem& ddr, const DiscreteGradient& dg,
                          const ConsistentApprox& approx, const DDRCompletion& completion,
                          const Vec& x, const Vec& x_next, const Vec& u, double h) {
  const PHDAESystem& sys = ddr.base;
  const int n = sys.n;
  check_step_args(x, u, n, sys.m, h);
  if (x_next.size() != n) throw DimensionMismatch("target state has wrong dimension");

  const Mat Eb = approx.E_bar(x, x_next);
  const Vec dgv = dg(x, x_next);
  const ColspaceCheck cc = check_colspace(Eb.transpose(), dgv, 1e-8);
  if (!cc.solvable)
    throw ColspaceUnsolvable(sys.name + " ddr step: DG H is not in the column space of E_bar^T",
                             cc.residual);

  // Linear in f: [h (J - R); E^T] f = [E dx - h B u; DG H].
  Mat A(2 * n, n);
  A.topRows(n) = h * (approx.J_bar(x, x_next) - approx.R_bar(x, x_next));
  A.bottomRows(n) = Eb.transpose();
  Vec b(2 * n);
  b.head(n) = Eb * (x_next - x);
  if (sys.m > 0) b.head(n) -= h * approx.B_bar(x, x_next) * u;
  b.tail(n) = dgv;

  const CompletionResidual c = completion_residual(ddr, approx, completion);
  const LeastSquaresResult ls = least_squares_min_norm(A, b);
  Vec f = ls.x;
  const Mat N = null_space(A, 1e-10);
  if (N.cols() > 0) {
    auto comp = [&](const Vec& ff) -> Vec { return c(x, x_next, ff); };
    const Mat G = finite_difference_jacobian(comp, f, 1e-7);
    f += N * least_squares_min_norm(G * N, -comp(f)).x;
  }

  StepResult res;
  res.x_next = x_next;
  res.costate = f;
  res.u = u;
  res.y = sys.m > 0 ? Vec(approx.B_bar(x, x_next).transpose() * f) : Vec(0);
  res.newton.solution = x_next;
  res.newton.residual_norm = inf_norm(Vec(A * f - b));
  res.newton.iterations = 1;
  res.newton.converged = true;
  res.ledger = make_ledger(sys.H.value(x_next) - sys.H.value(x), f, approx.R_bar(x, x_next), res.y,
                           u, h);
  return res;
}

StepResult step_midpoint(const PHDAESystem& sys, const Vec& x, const Vec& u, double h,
                         const NewtonConfig& cfg) {
  check_step_args(x, u, sys.n, sys.m, h);
  auto residual = [&](const Vec& xp) -> Vec {
    const Vec xm = 0.5 * (x + xp);
    Vec r = sys.E(xm) * (xp - x) - h * (sys.J(xm) - sys.R(xm)) * sys.z(xm);
    if (sys.m > 0) r -= h * sys.B(xm) * u;
    return r;
  };
  StepResult res;
  res.newton = newton_or_throw(residual, x, cfg, sys.name + " midpoint step");
  res.x_next = res.newton.solution;
  const Vec xm = 0.5 * (x + res.x_next);
  res.costate = sys.z(xm);
  res.u = u;
  res.y = sys.m > 0 ? Vec(sys.B(xm).transpose() * res.costate) : Vec(0);
  res.ledger = make_ledger(sys.H.value(res.x_next) - sys.H.value(x), res.costate, sys.R(xm), res.y,
                           u, h);
  return res;
}

namespace {

Vec output_of(const TwoPointMat& B_bar, int m, const Vec& x, const Vec& xp, const Vec& costate) {
  return m > 0 ? Vec(B_bar(x, xp).transpose() * costate) : Vec(0);
}

class DgpStepper final : public Stepper {
 public:
  DgpStepper(PHDAESystem sys, DiscreteGradientPair pair, ConsistentApprox approx, NewtonConfig cfg)
      : Stepper(cfg), sys_(std::move(sys)), pair_(std::move(pair)), approx_(std::move(approx)) {}
  std::string scheme() const override { return "dgp"; }
  const PHDAESystem& system() const override { return sys_; }
  StepResult step(const Vec& x, const Vec& u, double h) const override {
    return step_dgp(sys_, pair_, approx_, x, u, h, cfg_);
  }
  StepLedger ledger(const Vec& x, const Vec& xp, const Vec& costate, const Vec& u,
                    double h) const override {
    return make_ledger(sys_.H.value(xp) - sys_.H.value(x), costate, approx_.R_bar(x, xp),
                       output_of(approx_.B_bar, sys_.m, x, xp, costate), u, h);
  }

 private:
  PHDAESystem sys_;
  DiscreteGradientPair pair_;
  ConsistentApprox approx_;
};

class SemiExplicitStepper final : public Stepper {
 public:
  SemiExplicitStepper(SemiExplicitPHDAE se, DiscreteGradient dg1, ConsistentApprox approx,
                      NewtonConfig cfg)
      : Stepper(cfg),
        se_(std::move(se)),
        full_(embed_semi_explicit(se_)),
        dg1_(std::move(dg1)),
        approx_(std::move(approx)) {}
  std::string scheme() const override { return "sedg"; }
  const PHDAESystem& system() const override { return full_; }
  StepResult step(const Vec& x, const Vec& u, double h) const override {
    return step_semi_explicit(se_, dg1_, approx_, x, u, h, cfg_);
  }
  StepLedger ledger(const Vec& x, const Vec& xp, const Vec& costate, const Vec& u,
                    double h) const override {
    const int n1 = se_.n1;
    return make_ledger(se_.H1.value(xp.head(n1)) - se_.H1.value(x.head(n1)), costate,
                       approx_.R_bar(x, xp), output_of(approx_.B_bar, se_.m, x, xp, costate), u, h);
  }

 private:
  SemiExplicitPHDAE se_;
  PHDAESystem full_;
  DiscreteGradient dg1_;
  ConsistentApprox approx_;
};

class DdrStepper final : public Stepper {
 public:
  DdrStepper(DDRSystem ddr, DiscreteGradient dg, ConsistentApprox approx, DDRCompletion completion,
             NewtonConfig cfg)
      : Stepper(cfg),
        ddr_(std::move(ddr)),
        dg_(std::move(dg)),
        approx_(std::move(approx)),
        completion_(std::move(completion)) {}
  std::string scheme() const override { return "ddr"; }
  const PHDAESystem& system() const override { return ddr_.base; }
  StepResult step(const Vec& x, const Vec& u, double h) const override {
    return step_ddr(ddr_, dg_, approx_, completion_, x, u, h, cfg_);
  }
  StepLedger ledger(const Vec& x, const Vec& xp, const Vec& costate, const Vec& u,
                    double h) const override {
    const PHDAESystem& s = ddr_.base;
    return make_ledger(s.H.value(xp) - s.H.value(x), costate, approx_.R_bar(x, xp),
                       output_of(approx_.B_bar, s.m, x, xp, costate), u, h);
  }

 private:
  DDRSystem ddr_;
  DiscreteGradient dg_;
  ConsistentApprox approx_;
  DDRCompletion completion_;
};

class MidpointStepper final : public Stepper {
 public:
  MidpointStepper(PHDAESystem sys, NewtonConfig cfg) : Stepper(cfg), sys_(std::move(sys)) {}
  std::string scheme() const override { return "midpoint"; }
  const PHDAESystem& system() const override { return sys_; }
  StepResult step(const Vec& x, const Vec& u, double h) const override {
    return step_midpoint(sys_, x, u, h, cfg_);
  }
  StepLedger ledger(const Vec& x, const Vec& xp, const Vec& costate, const Vec& u,
                    double h) const override {
    const Vec xm = 0.5 * (x + xp);
    const Vec y = sys_.m > 0 ? Vec(sys_.B(xm).transpose() * costate) : Vec(0);
    return make_ledger(sys_.H.value(xp) - sys_.H.value(x), costate, sys_.R(xm), y, u, h);
  }

 private:
  PHDAESystem sys_;
};

}  // namespace

std::shared_ptr<Stepper> make_dgp_stepper(PHDAESystem sys, DiscreteGradientPair pair,
                                          ConsistentApprox approx, NewtonConfig cfg) {
  cfg.validate();
  return std::make_shared<DgpStepper>(std::move(sys), std::move(pair), std::move(approx), cfg);
}

std::shared_ptr<Stepper> make_semi_explicit_stepper(SemiExplicitPHDAE se, DiscreteGradient dg1,
                                                    ConsistentApprox approx, NewtonConfig cfg) {
  cfg.validate();
  return std::make_shared<SemiExplicitStepper>(std::move(se), std::move(dg1), std::move(approx),
                                               cfg);
}

std::shared_ptr<Stepper> make_ddr_stepper(DDRSystem ddr, DiscreteGradient dg,
                                          ConsistentApprox approx, DDRCompletion completion,
                                          NewtonConfig cfg) {
  cfg.validate();
  return std::make_shared<DdrStepper>(std::move(ddr), std::move(dg), std::move(approx),
                                      std::move(completion), cfg);
}

std::shared_ptr<Stepper> make_midpoint_stepper(PHDAESystem sys, NewtonConfig cfg) {
  cfg.validate();
  return std::make_shared<MidpointStepper>(std::move(sys), cfg);
}

InputFn zero_input(int m) {
  return [m](int, double) { return Vec::Zero(m).eval(); };
}

int step_count(double t_end, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("h must be positive");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ConfigError("t_end must be positive");
  const double ratio = t_end / h;
  const double N = std::round(ratio);
  if (N < 1.0) throw ConfigError("t_end is shorter than one step");
  if (std::abs(ratio - N) > 1e-9 * N) throw ConfigError("h does not divide t_end");
  if (N > static_cast<double>(std::numeric_limits<int>::max())) throw ConfigError("too many steps");
  return static_cast<int>(N);
}

namespace {

std::string error_name(const std::exception& e) {
  if (dynamic_cast<const NonConvergence*>(&e)) return "NonConvergence";
  if (dynamic_cast<const ColspaceUnsolvable*>(&e)) return "ColspaceUnsolvable";
  if (dynamic_cast<const SingularE11*>(&e)) return "SingularE11";
  if (dynamic_cast<const DomainExit*>(&e)) return "DomainExit";
  if (dynamic_cast<const SingularDiscreteJacobian*>(&e)) return "SingularDiscreteJacobian";
  if (dynamic_cast<const DimensionMismatch*>(&e)) return "DimensionMismatch";
  return "Error";
}

}  // namespace

Trajectory integrate(std::shared_ptr<const Stepper> stepper, const Vec& x0, const InputFn& input,
                     double t_end, double h, InputSampling sampling) {
  if (!stepper) throw ConfigError("no stepper");
  const int N = step_count(t_end, h);
  const PHDAESystem& sys = stepper->system();
  if (x0.size() != sys.n) throw DimensionMismatch("initial state has wrong dimension");
  if (!sys.admissible(x0)) throw DomainExit(sys.name + ": initial state outside the domain");

  Trajectory traj;
  traj.scheme = stepper->scheme();
  traj.model = sys.name;
  traj.h = h;
  traj.tol = stepper->newton().tol;
  traj.stepper = stepper;
  traj.times.reserve(N + 1);
  traj.states.reserve(N + 1);
  traj.steps.reserve(N);
  traj.times.push_back(0.0);
  traj.states.push_back(x0);

  Vec x = x0;
  for (int k = 0; k < N; ++k) {
    const double t = k * h;
    try {
      const double ts = sampling == InputSampling::midpoint ? t + 0.5 * h : t;
      const Vec u = input ? input(k, ts) : Vec::Zero(sys.m).eval();
      StepResult r = stepper->step(x, u, h);
      if (!sys.admissible(r.x_next)) {
        std::ostringstream os;
        os << sys.name << ": state left the domain at step " << k + 1;
        throw DomainExit(os.str());
      }
      x = r.x_next;
      traj.steps.push_back(std::move(r));
      traj.times.push_back((k + 1) * h);
      traj.states.push_back(x);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "integration aborted at step " << k + 1 << " (t = " << t << "): " << e.what();
      throw IntegrationAborted(os.str(), error_name(e), std::move(traj));
    }
  }
  return traj;
}

std::vector<StepLedger> power_balance_series(const Trajectory& traj) {
  std::vector<StepLedger> out;
  if (!traj.stepper) return out;
  out.reserve(traj.steps.size());
  for (std::size_t k = 0; k < traj.steps.size(); ++k) {
    const StepResult& s = traj.steps[k];
    out.push_back(traj.stepper->ledger(traj.states[k], traj.states[k + 1], s.costate, s.u, traj.h));
  }
  return out;
}

}  // namespace phdae
