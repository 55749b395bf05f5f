// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "phdae/integrators.hpp"
#include "phdae/model_library.hpp"
#include "phdae/models.hpp"

namespace phdae {

using json = nlohmann::json;

const char* version();

struct InputSignal {
  std::string kind = "zero";  // zero | constant | sine
  Vec amplitude;              // length m, empty means zero
  double frequency = 1.0;     // sine only, in Hz
};

struct RunConfig {
  std::string model;
  ParamMap params;
  std::string scheme;  // sedg | dgp | ddr | midpoint
  DGKind discrete_gradient = DGKind::gonzalez;
  std::optional<CoeffModes> coefficient_modes;
  Completion completion = Completion::least_norm;
  double h = 0.0;
  double t_end = 0.0;
  NewtonConfig newton;
  InputSignal input;
  InputSampling sampling = InputSampling::midpoint;
  std::optional<Vec> x0;
  std::string out_dir;
};

/// Applies `a.b.c=value` to a JSON document; value is parsed as JSON and
/// taken as a plain string when that fails.
void apply_override(json& doc, const std::string& assignment);

/// Reads and checks a config. Missing h, t_end and scheme fall back to the
/// model defaults. Throws ConfigError.
RunConfig parse_run_config(const json& doc);
json to_json(const RunConfig& cfg);

/// Stepper for the configured model and scheme.
std::shared_ptr<Stepper> build_stepper(const ModelInstance& model, const RunConfig& cfg);

InputFn make_input(const InputSignal& sig, int m);

struct RunSummary {
  std::string status = "ok";  // ok | failed
  std::string failure;
  std::string failure_kind;
  int steps = 0;
  int steps_requested = 0;
  double max_abs_balance_residual = 0.0;
  double max_dH = 0.0;
  double max_positive_dH = 0.0;
  double min_dissipated = 0.0;
  double max_g_pos = 0.0;
  double max_g_vel = 0.0;
  bool has_constraints = false;
  long total_newton_iterations = 0;
  int max_newton_iterations = 0;
  int pseudo_inverse_steps = 0;
  bool energy_consistent = true;
  double H0 = 0.0;
  double H_final = 0.0;
};

struct RunOutcome {
  RunConfig config;
  Trajectory trajectory;  // partial on failure
  RunSummary summary;
};

/// Never throws for integration failures; those end up in summary.status.
/// Configuration problems throw ConfigError.
RunOutcome run(const RunConfig& cfg);

RunSummary summarize(const Trajectory& traj, const PHDAESystem& sys);
json to_json(const RunSummary& s, const RunConfig& cfg, const Vec& x0);

/// Column names of trajectory.csv for the system.
std::vector<std::string> trajectory_columns(const PHDAESystem& sys);
void write_trajectory_csv(const std::string& path, const Trajectory& traj, const PHDAESystem& sys);

/// Writes trajectory.csv, summary.json and config.echo into cfg.out_dir.
void write_run_outputs(const RunOutcome& out);

struct ConvergenceConfig {
  RunConfig base;
  std::vector<double> h_list;
  double reference_h = 1e-4;
  double probe_time = 0.1;
  std::vector<std::string> observables;
  std::string reference = "scheme";  // scheme | exact
};

ConvergenceConfig parse_convergence_config(const json& doc);

struct ConvergenceRow {
  double h = 0.0;
  std::vector<double> errors;  // one per observable
  bool ok = true;
  std::string failure;
};

struct ConvergenceResult {
  std::vector<std::string> observables;
  std::vector<ConvergenceRow> rows;  // sorted by decreasing h
  std::vector<double> slopes;        // NaN when fewer than two usable rows
  bool reference_ok = true;
  std::string reference_failure;
};

ConvergenceResult run_convergence(const ConvergenceConfig& cfg);
json convergence_summary(const ConvergenceResult& res, const ConvergenceConfig& cfg);
void write_convergence_outputs(const ConvergenceResult& res, const ConvergenceConfig& cfg);

/// Least-squares slope of log(e) against log(h) over finite positive errors.
double loglog_slope(const std::vector<double>& h, const std::vector<double>& e);

struct RobustnessEntry {
  std::string scheme;
  double h = 0.0;
  bool converged_all_steps = false;
  int steps_completed = 0;
  int steps_requested = 0;
  double max_dH_positive = 0.0;
  double max_balance_residual = 0.0;
  std::string failure;
};

struct RobustnessConfig {
  RunConfig base;
  std::vector<double> h_list;
  std::vector<std::string> schemes;
};

RobustnessConfig parse_robustness_config(const json& doc);

/// Runs every (scheme, h) pair with zero input; sorted by scheme, then h.
std::vector<RobustnessEntry> run_robustness(const RobustnessConfig& cfg);
json robustness_summary(const std::vector<RobustnessEntry>& rep, const RobustnessConfig& cfg);
void write_robustness_outputs(const std::vector<RobustnessEntry>& rep, const RobustnessConfig& cfg);

struct ModelValidation {
  std::string model;
  ValidationReport report;
  bool rank_check_waived = false;
};

ModelValidation validate_model(const std::string& name, const ParamMap& params, int samples = 20,
                               double tol = 1e-8);
json to_json(const ModelValidation& v);

/// Full-precision number formatting used by every output file.
std::string format_number(double v);

}  // namespace phdae
