// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>

namespace phdae {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

using VecFn = std::function<Vec(const Vec&)>;
using MatFn = std::function<Mat(const Vec&)>;
using TwoPointVec = std::function<Vec(const Vec&, const Vec&)>;
using TwoPointMat = std::function<Mat(const Vec&, const Vec&)>;

/// Throws DimensionMismatch unless every entry is finite.
void require_finite(const Vec& v, const char* what);
void require_finite(const Mat& m, const char* what);

double inf_norm(const Vec& v);
double inf_norm(const Mat& m);  // max absolute row sum

enum class JacobianMode { analytic, finite_difference };

struct NewtonConfig {
  double tol = 1e-10;
  int max_iter = 50;
  JacobianMode jacobian_mode = JacobianMode::analytic;
  double fd_step = 1e-7;
  /// Backtracking shrink factor in (0,1); undamped when empty.
  std::optional<double> damping;

  void validate() const;
};

struct NewtonReport {
  Vec solution;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  /// At least one linearization was singular and a pseudo-inverse step was taken.
  bool used_pseudo_inverse = false;
};

/// Newton's method on residual(x) = 0 using the infinity norm for the stopping
/// test. Falls back to central finite differences when `jacobian` is empty or
/// the config asks for them.
NewtonReport solve_newton(const VecFn& residual, const MatFn& jacobian, const Vec& guess,
                          const NewtonConfig& cfg);

struct SvdResult {
  Mat U;
  Vec sigma;  // non-increasing
  Mat V;
};

SvdResult svd(const Mat& M);

struct LeastSquaresResult {
  Vec x;
  double residual_norm = 0.0;
};

/// Minimum-norm least-squares solution of A x ~= b.
LeastSquaresResult least_squares_min_norm(const Mat& A, const Vec& b);

/// Orthonormal basis of ker(A) with singular value cut rel_tol * sigma_max.
Mat null_space(const Mat& A, double rel_tol = 1e-12);

/// Numerical rank with threshold rel_tol * sigma_max.
int numerical_rank(const Mat& A, double rel_tol = 1e-8);

struct StructureReport {
  bool skew_ok = false;
  bool psd_ok = false;
  double max_violation = 0.0;
  double skew_violation = 0.0;
  double psd_violation = 0.0;
};

/// Checks J = -J^T and R = R^T >= 0 up to tol.
StructureReport validate_structure(const Mat& J, const Mat& R, double tol);

/// Central differences, column j = (f(x + eps e_j) - f(x - eps e_j)) / (2 eps).
Mat finite_difference_jacobian(const VecFn& f, const Vec& x, double eps);

/// True when sigma_min <= rel_tol * sigma_max (or M is empty of rank).
bool is_numerically_singular(const Mat& M, double rel_tol = 1e-12);

}  // namespace phdae
