// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Hand-written reference objects shared by the tests. Nothing here calls the
// library code under test except for plain data types.
#pragma once

#include <cmath>
#include <random>

#include "phdae/discrete_calculus.hpp"

namespace oracle {

using phdae::Mat;
using phdae::Vec;

inline Mat rot(double th) {
  Mat R(2, 2);
  R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  return R;
}

inline Mat rot_prime(double th) {
  Mat R(2, 2);
  R << -std::sin(th), -std::cos(th), std::cos(th), -std::sin(th);
  return R;
}

// phi(x) = Rot(x^T x) x, a length-preserving twist of the plane.
inline phdae::VectorField twist() {
  phdae::VectorField f;
  f.in_dim = f.out_dim = 2;
  f.value = [](const Vec& x) -> Vec { return rot(x.squaredNorm()) * x; };
  f.jacobian = [](const Vec& x) -> Mat {
    const double s = x.squaredNorm();
    return rot(s) + rot_prime(s) * x * (2.0 * x.transpose());
  };
  return f;
}

inline phdae::VectorField twist_inverse() {
  phdae::VectorField f;
  f.in_dim = f.out_dim = 2;
  f.value = [](const Vec& y) -> Vec { return rot(-y.squaredNorm()) * y; };
  f.jacobian = [](const Vec& y) -> Mat {
    const double s = y.squaredNorm();
    return rot(-s) - rot_prime(-s) * y * (2.0 * y.transpose());
  };
  return f;
}

// Gonzalez formula written out for a scalar function, used as a reference.
template <class F, class G>
Vec gonzalez(const F& f, const G& grad, const Vec& x, const Vec& xp) {
  const Vec d = xp - x;
  const Vec gm = grad(0.5 * (x + xp));
  const double dd = d.squaredNorm();
  if (dd == 0.0) return gm;
  return gm + ((f(xp) - f(x) - gm.dot(d)) / dd) * d;
}

// A non-quadratic test Hamiltonian on R^3.
inline phdae::ScalarField quartic() {
  phdae::ScalarField H;
  H.dim = 3;
  H.value = [](const Vec& x) {
    return 0.25 * std::pow(x.squaredNorm(), 2) + std::cos(x(0)) * x(1) + x(2) * x(2);
  };
  H.gradient = [](const Vec& x) -> Vec {
    Vec g = x.squaredNorm() * x;
    g(0) += -std::sin(x(0)) * x(1);
    g(1) += std::cos(x(0));
    g(2) += 2.0 * x(2);
    return g;
  };
  return H;
}

inline phdae::ScalarField quadratic(const Mat& Q, const Vec& c) {
  phdae::ScalarField H;
  H.dim = static_cast<int>(c.size());
  H.value = [Q, c](const Vec& x) { return 0.5 * x.dot(Q * x) + c.dot(x); };
  H.gradient = [Q, c](const Vec& x) -> Vec { return Q * x + c; };
  return H;
}

inline Vec random_vec(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

}  // namespace oracle
