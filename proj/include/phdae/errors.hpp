// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <utility>
#include <string>

#include "phdae/numerics.hpp"

namespace phdae {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Invalid parameters, model/scheme combinations or run settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A model evaluator failed or produced inconsistent data.
class ModelDefinitionError : public Error {
 public:
  using Error::Error;
};

class SingularE11 : public Error {
 public:
  using Error::Error;
};

class SingularDiscreteJacobian : public Error {
 public:
  using Error::Error;
};

class SingularTransformation : public Error {
 public:
  using Error::Error;
};

class RankAmbiguous : public Error {
 public:
  using Error::Error;
};

/// The implicit step equations could not be solved to tolerance.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double residual, int iterations, Vec best = {})
      : Error(what), residual_(residual), iterations_(iterations), best_(std::move(best)) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }
  const Vec& best_iterate() const { return best_; }

 private:
  double residual_;
  int iterations_;
  Vec best_;
};

/// An accepted step left the model's state space.
class DomainExit : public Error {
 public:
  using Error::Error;
};

/// The discrete gradient is not in the column space of the transposed
/// discrete descriptor matrix, so no discrete co-state exists.
class ColspaceUnsolvable : public Error {
 public:
  ColspaceUnsolvable(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace phdae
