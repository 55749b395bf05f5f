// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#include "phdae/numerics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "phdae/errors.hpp"

namespace phdae {

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw DimensionMismatch(std::string(what) + ": non-finite entry");
}

void require_finite(const Mat& m, const char* what) {
  if (!m.allFinite()) throw DimensionMismatch(std::string(what) + ": non-finite entry");
}

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double inf_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

void NewtonConfig::validate() const {
  if (!(tol > 0.0)) throw ConfigError("newton.tol must be positive");
  if (max_iter < 1) throw ConfigError("newton.max_iter must be >= 1");
  if (!(fd_step > 0.0)) throw ConfigError("newton.fd_step must be positive");
  if (damping && !(*damping > 0.0 && *damping < 1.0))
    throw ConfigError("newton.damping must lie in (0,1)");
}

namespace {

// Solves J dx = rhs. Returns false when the pseudo-inverse had to be used.
bool linear_solve(const Mat& J, const Vec& rhs, Vec& dx) {
  if (J.rows() == J.cols()) {
    Eigen::PartialPivLU<Mat> lu(J);
    if (lu.rcond() > 1e-14) {
      dx = lu.solve(rhs);
      if (dx.allFinite()) return true;
    }
  }
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(J);
  cod.setThreshold(1e-12);
  dx = cod.solve(rhs);
  if (!dx.allFinite()) dx.setZero(J.cols());
  return false;
}

}  // namespace

NewtonReport solve_newton(const VecFn& residual, const MatFn& jacobian, const Vec& guess,
                          const NewtonConfig& cfg) {
  cfg.validate();
  NewtonReport rep;
  rep.solution = guess;

  Vec r = residual(rep.solution);
  if (r.size() != guess.size())
    throw DimensionMismatch("solve_newton: residual has size " + std::to_string(r.size()) +
                            ", guess has size " + std::to_string(guess.size()));

  const bool use_fd = !jacobian || cfg.jacobian_mode == JacobianMode::finite_difference;
  double rnorm = r.allFinite() ? inf_norm(r) : std::numeric_limits<double>::infinity();
  rep.residual_norm = rnorm;

  for (int it = 0; it < cfg.max_iter; ++it) {
    if (rnorm <= cfg.tol) {
      rep.converged = true;
      return rep;
    }
    if (!std::isfinite(rnorm)) return rep;

    Mat J = use_fd ? finite_difference_jacobian(residual, rep.solution, cfg.fd_step)
                   : jacobian(rep.solution);
    if (J.rows() != r.size() || J.cols() != rep.solution.size())
      throw DimensionMismatch("solve_newton: jacobian shape mismatch");
    if (!J.allFinite()) return rep;

    Vec dx;
    if (!linear_solve(J, -r, dx)) rep.used_pseudo_inverse = true;

    double alpha = 1.0;
    Vec x_new = rep.solution + dx;
    Vec r_new = residual(x_new);
    double rnew = r_new.allFinite() ? inf_norm(r_new) : std::numeric_limits<double>::infinity();
    if (cfg.damping) {
      while (rnew > (1.0 - 1e-4 * alpha) * rnorm && alpha > 1e-6) {
        alpha *= *cfg.damping;
        x_new = rep.solution + alpha * dx;
        r_new = residual(x_new);
        rnew = r_new.allFinite() ? inf_norm(r_new) : std::numeric_limits<double>::infinity();
      }
    }
    rep.solution = std::move(x_new);
    r = std::move(r_new);
    rnorm = rnew;
    rep.residual_norm = rnorm;
    rep.iterations = it + 1;
  }
  rep.converged = rnorm <= cfg.tol;
  return rep;
}

SvdResult svd(const Mat& M) {
  require_finite(M, "svd");
  Eigen::JacobiSVD<Mat> dec(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {dec.matrixU(), dec.singularValues(), dec.matrixV()};
}

LeastSquaresResult least_squares_min_norm(const Mat& A, const Vec& b) {
  if (A.rows() != b.size()) throw DimensionMismatch("least_squares_min_norm: rows(A) != len(b)");
  LeastSquaresResult out;
  if (A.cols() == 0) {
    out.x = Vec(0);
    out.residual_norm = b.norm();
    return out;
  }
  Eigen::JacobiSVD<Mat> dec(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = dec.singularValues();
  const double cut = (s.size() > 0 ? s(0) : 0.0) * 1e-13;
  Vec ub = dec.matrixU().transpose() * b;
  for (Eigen::Index i = 0; i < s.size(); ++i) ub(i) = (s(i) > cut && s(i) > 0.0) ? ub(i) / s(i) : 0.0;
  out.x = dec.matrixV() * ub;
  out.residual_norm = (A * out.x - b).norm();
  return out;
}

Mat null_space(const Mat& A, double rel_tol) {
  const Eigen::Index n = A.cols();
  if (A.rows() == 0) return Mat::Identity(n, n);
  Eigen::JacobiSVD<Mat> dec(A, Eigen::ComputeFullV);
  const Vec& s = dec.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * smax && s(i) > 0.0) ++rank;
  return dec.matrixV().rightCols(n - rank);
}

int numerical_rank(const Mat& A, double rel_tol) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> dec(A);
  const Vec& s = dec.singularValues();
  const double smax = s(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * smax && s(i) > 0.0) ++rank;
  return rank;
}

StructureReport validate_structure(const Mat& J, const Mat& R, double tol) {
  if (J.rows() != J.cols() || R.rows() != R.cols())
    throw DimensionMismatch("validate_structure: J and R must be square");
  if (J.rows() != R.rows()) throw DimensionMismatch("validate_structure: J and R differ in size");
  StructureReport rep;
  rep.skew_violation = inf_norm(Mat(J + J.transpose()));
  const double sym_violation = inf_norm(Mat(R - R.transpose()));
  double neg_eig = 0.0;
  if (R.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (R + R.transpose()), Eigen::EigenvaluesOnly);
    neg_eig = std::max(0.0, -es.eigenvalues()(0));
  }
  rep.psd_violation = std::max(sym_violation, neg_eig);
  rep.skew_ok = rep.skew_violation <= tol;
  rep.psd_ok = sym_violation <= tol && neg_eig <= tol;
  rep.max_violation = std::max(rep.skew_violation, rep.psd_violation);
  return rep;
}

Mat finite_difference_jacobian(const VecFn& f, const Vec& x, double eps) {
  if (!(eps > 0.0)) throw ConfigError("finite_difference_jacobian: eps must be positive");
  const Eigen::Index n = x.size();
  Vec xp = x;
  Mat jac;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double xj = x(j);
    xp(j) = xj + eps;
    Vec fp = f(xp);
    xp(j) = xj - eps;
    Vec fm = f(xp);
    xp(j) = xj;
    if (j == 0) jac.resize(fp.size(), n);
    jac.col(j) = (fp - fm) / (2.0 * eps);
  }
  if (n == 0) jac.resize(f(x).size(), 0);
  return jac;
}

bool is_numerically_singular(const Mat& M, double rel_tol) {
  if (M.size() == 0) return false;
  Eigen::JacobiSVD<Mat> dec(M);
  const Vec& s = dec.singularValues();
  return !(s(s.size() - 1) > rel_tol * s(0));
}

}  // namespace phdae
