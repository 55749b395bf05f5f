// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#include "phdae/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <set>
#include <sstream>

#include "phdae/errors.hpp"
#include "phdae/structure_tools.hpp"

namespace phdae {

const char* version() { return PHDAE_VERSION; }

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Configuration

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    parts.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw ConfigError("override key '" + key + "' crosses a non-object");
    // A bare model name is promoted to {name: ...} so params can be set.
    if (parts[i] == "model" && node->contains("model") && (*node)["model"].is_string())
      (*node)["model"] = json{{"name", (*node)["model"]}};
    node = &(*node)[parts[i]];
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object()) throw ConfigError("override key '" + key + "' crosses a non-object");
  (*node)[parts.back()] = value;
}

namespace {

const std::set<std::string> kTopLevelKeys{
    "model",  "scheme", "discrete_gradient", "coefficient_modes", "completion", "h", "t_end",
    "newton", "input",  "x0",                "output",            "convergence", "robustness"};

const std::set<std::string> kSchemes{"sedg", "dgp", "ddr", "midpoint"};

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

double positive(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(what + " must be a number");
  const double d = v.get<double>();
  if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError(what + " must be positive");
  return d;
}

Vec vector_of(const json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError(what + " must be an array of numbers");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(what + " must be an array of numbers");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

DGKind parse_dg(const std::string& s) {
  if (s == "gonzalez") return DGKind::gonzalez;
  if (s == "left") return DGKind::left;
  if (s == "right") return DGKind::right;
  throw ConfigError("discrete_gradient must be gonzalez, left or right");
}

bool pair_available(const ModelInstance& m) {
  return m.semi_explicit || m.constant_E || m.pointwise_invertible_E;
}

void check_compatible(const ModelInstance& m, const std::string& scheme) {
  if (!kSchemes.count(scheme))
    throw ConfigError("scheme must be one of sedg, dgp, ddr, midpoint (got '" + scheme + "')");
  if (scheme == "sedg" && !m.semi_explicit)
    throw ConfigError("scheme sedg requires a semi-explicit model; " + m.name + " is not");
  if (scheme == "dgp" && !pair_available(m))
    throw ConfigError("no discrete gradient pair construction is available for " + m.name);
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
  try {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(doc, kTopLevelKeys, "config");
    RunConfig c;

    if (!doc.contains("model")) throw ConfigError("config: 'model' is required");
    const json& jm = doc.at("model");
    if (jm.is_string()) {
      c.model = jm.get<std::string>();
    } else if (jm.is_object()) {
      reject_unknown(jm, {"name", "params"}, "model");
      c.model = jm.at("name").get<std::string>();
      if (jm.contains("params")) {
        for (const auto& [k, v] : jm.at("params").items()) {
          if (!v.is_number()) throw ConfigError("model.params." + k + " must be a number");
          c.params[k] = v.get<double>();
        }
      }
    } else {
      throw ConfigError("config: 'model' must be a name or an object");
    }
    const ModelInstance mi = make_model(c.model, c.params);

    c.scheme = doc.value("scheme", mi.default_scheme);
    check_compatible(mi, c.scheme);
    c.discrete_gradient = parse_dg(doc.value("discrete_gradient", std::string("gonzalez")));
    if (doc.contains("coefficient_modes")) {
      const json& jc = doc.at("coefficient_modes");
      reject_unknown(jc, {"E", "J", "R", "B", "z"}, "coefficient_modes");
      CoeffModes modes;
      auto mode = [&](const char* key, CoeffMode& dst) {
        if (!jc.contains(key)) return;
        dst = coeff_mode_from_string(jc.at(key).get<std::string>());
        if (dst == CoeffMode::custom)
          throw ConfigError("coefficient_modes: custom evaluators cannot be set from a config");
      };
      mode("E", modes.E);
      mode("J", modes.J);
      mode("R", modes.R);
      mode("B", modes.B);
      mode("z", modes.z);
      c.coefficient_modes = modes;
    }
    c.completion = completion_from_string(doc.value("completion", std::string("least-norm")));
    if (c.completion == Completion::known_structure)
      throw ConfigError("known-structure completion needs a user residual and is API only");

    c.h = doc.contains("h") ? positive(doc.at("h"), "h") : mi.default_h;
    c.t_end = doc.contains("t_end") ? positive(doc.at("t_end"), "t_end") : mi.default_t_end;
    if (c.h > c.t_end) throw ConfigError("h must not exceed t_end");
    step_count(c.t_end, c.h);

    if (doc.contains("newton")) {
      const json& jn = doc.at("newton");
      reject_unknown(jn, {"tol", "max_iter", "jacobian", "fd_step", "damping"}, "newton");
      if (jn.contains("tol")) c.newton.tol = positive(jn.at("tol"), "newton.tol");
      if (jn.contains("max_iter")) {
        if (!jn.at("max_iter").is_number_integer())
          throw ConfigError("newton.max_iter must be an integer");
        c.newton.max_iter = jn.at("max_iter").get<int>();
      }
      if (jn.contains("jacobian")) {
        const std::string j = jn.at("jacobian").get<std::string>();
        if (j == "analytic")
          c.newton.jacobian_mode = JacobianMode::analytic;
        else if (j == "finite_difference")
          c.newton.jacobian_mode = JacobianMode::finite_difference;
        else
          throw ConfigError("newton.jacobian must be analytic or finite_difference");
      }
      if (jn.contains("fd_step")) c.newton.fd_step = positive(jn.at("fd_step"), "newton.fd_step");
      if (jn.contains("damping") && !jn.at("damping").is_null())
        c.newton.damping = positive(jn.at("damping"), "newton.damping");
      c.newton.validate();
    }

    if (doc.contains("input")) {
      const json& ji = doc.at("input");
      reject_unknown(ji, {"signal", "amplitude", "frequency", "sampling"}, "input");
      c.input.kind = ji.value("signal", std::string("zero"));
      if (c.input.kind != "zero" && c.input.kind != "constant" && c.input.kind != "sine")
        throw ConfigError("input.signal must be zero, constant or sine");
      if (ji.contains("amplitude")) {
        const json& a = ji.at("amplitude");
        if (a.is_number())
          c.input.amplitude = Vec::Constant(mi.system.m, a.get<double>());
        else
          c.input.amplitude = vector_of(a, "input.amplitude");
        // An empty list (as echoed for a zero signal) means no amplitude.
        if (c.input.amplitude.size() != 0 && c.input.amplitude.size() != mi.system.m)
          throw ConfigError("input.amplitude must have one entry per input");
      }
      if (ji.contains("frequency")) c.input.frequency = ji.at("frequency").get<double>();
      const std::string smp = ji.value("sampling", std::string("midpoint"));
      if (smp == "midpoint")
        c.sampling = InputSampling::midpoint;
      else if (smp == "left")
        c.sampling = InputSampling::left;
      else
        throw ConfigError("input.sampling must be midpoint or left");
    }

    if (doc.contains("x0") && !doc.at("x0").is_null()) {
      c.x0 = vector_of(doc.at("x0"), "x0");
      if (c.x0->size() != mi.system.n) throw ConfigError("x0 has the wrong dimension");
    }
    if (doc.contains("output")) {
      const json& jo = doc.at("output");
      reject_unknown(jo, {"dir"}, "output");
      c.out_dir = jo.value("dir", std::string());
    }
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ModelDefinitionError& e) {
    throw ConfigError(e.what());
  }
}

json to_json(const RunConfig& c) {
  json j;
  j["model"] = {{"name", c.model}, {"params", c.params}};
  j["scheme"] = c.scheme;
  j["discrete_gradient"] = to_string(c.discrete_gradient);
  if (c.coefficient_modes) {
    const CoeffModes& m = *c.coefficient_modes;
    j["coefficient_modes"] = {{"E", to_string(m.E)},
                              {"J", to_string(m.J)},
                              {"R", to_string(m.R)},
                              {"B", to_string(m.B)},
                              {"z", to_string(m.z)}};
  }
  j["completion"] = to_string(c.completion);
  j["h"] = c.h;
  j["t_end"] = c.t_end;
  j["newton"] = {{"tol", c.newton.tol},
                 {"max_iter", c.newton.max_iter},
                 {"jacobian", c.newton.jacobian_mode == JacobianMode::analytic ? "analytic"
                                                                                : "finite_difference"},
                 {"fd_step", c.newton.fd_step},
                 {"damping", c.newton.damping ? json(*c.newton.damping) : json(nullptr)}};
  json amp = json::array();
  for (Eigen::Index i = 0; i < c.input.amplitude.size(); ++i) amp.push_back(c.input.amplitude(i));
  j["input"] = {{"signal", c.input.kind},
                {"amplitude", amp},
                {"frequency", c.input.frequency},
                {"sampling", c.sampling == InputSampling::midpoint ? "midpoint" : "left"}};
  if (c.x0) {
    json x = json::array();
    for (Eigen::Index i = 0; i < c.x0->size(); ++i) x.push_back((*c.x0)(i));
    j["x0"] = x;
  }
  j["output"] = {{"dir", c.out_dir}};
  return j;
}

InputFn make_input(const InputSignal& sig, int m) {
  if (sig.kind == "zero" || sig.amplitude.size() == 0) return zero_input(m);
  const Vec a = sig.amplitude;
  if (sig.kind == "constant") return [a](int, double) { return a; };
  const double w = 2.0 * M_PI * sig.frequency;
  return [a, w](int, double t) -> Vec { return a * std::sin(w * t); };
}

std::shared_ptr<Stepper> build_stepper(const ModelInstance& m, const RunConfig& cfg) {
  check_compatible(m, cfg.scheme);
  const CoeffModes modes = cfg.coefficient_modes.value_or(CoeffModes{});
  const DGKind kind = cfg.discrete_gradient;

  if (cfg.scheme == "midpoint") return make_midpoint_stepper(m.system, cfg.newton);

  if (cfg.scheme == "ddr") {
    ConsistentApprox a = make_approx(m.system, modes);
    DDRCompletion comp;
    comp.strategy = cfg.completion;
    // H does not depend on x2 for semi-explicit models; a full-state Gonzalez
    // gradient would put a component on x2 whenever x2 moves.
    DiscreteGradient dg =
        m.semi_explicit
            ? lift_specified_gradient(make_discrete_gradient(m.semi_explicit->H1, kind),
                                      m.semi_explicit->n2)
            : make_discrete_gradient(m.system.H, kind);
    return make_ddr_stepper(to_ddr(m.system), std::move(dg), a, comp, cfg.newton);
  }

  if (m.semi_explicit) {
    const SemiExplicitPHDAE& se = *m.semi_explicit;
    ConsistentApprox a = (!cfg.coefficient_modes && m.scheme_approx) ? *m.scheme_approx
                                                                     : make_approx(se, modes);
    const DiscreteGradient dg1 = make_discrete_gradient(se.H1, kind);
    if (cfg.scheme == "sedg") return make_semi_explicit_stepper(se, dg1, a, cfg.newton);
    DiscreteGradientPair pair = build_pair_semi_explicit(a.E11_bar, dg1, a.z2_bar, se.n1, se.n2);
    return make_dgp_stepper(m.system, pair, a, cfg.newton);
  }

  ConsistentApprox a = make_approx(m.system, modes);
  if (m.constant_E) {
    const Mat& E = *m.constant_E;
    const ConstantEDecomposition d = decompose_constant_E(E);
    const DiscreteGradient dg = make_discrete_gradient(reduced_hamiltonian(m.system.H, d), kind);
    DiscreteGradientPair pair = build_pair_constant_E(E, m.system.H, dg, default_z2_hat(E, m.system.z));
    return make_dgp_stepper(m.system, pair, a, cfg.newton);
  }
  DiscreteGradientPair pair = build_pair_semi_explicit(
      a.E_bar, make_discrete_gradient(m.system.H, kind), {}, m.system.n, 0);
  return make_dgp_stepper(m.system, pair, a, cfg.newton);
}

// ---------------------------------------------------------------------------
// Single runs

RunSummary summarize(const Trajectory& traj, const PHDAESystem& sys) {
  RunSummary s;
  s.steps = static_cast<int>(traj.steps.size());
  s.has_constraints = sys.constraints.has_value();
  s.max_dH = s.steps > 0 ? -std::numeric_limits<double>::infinity() : 0.0;
  s.min_dissipated = s.steps > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  if (!traj.states.empty()) {
    s.H0 = sys.H.value(traj.states.front());
    s.H_final = sys.H.value(traj.states.back());
  }
  for (int k = 0; k < s.steps; ++k) {
    const StepResult& r = traj.steps[k];
    s.max_abs_balance_residual = std::max(s.max_abs_balance_residual, std::abs(r.ledger.balance_residual));
    s.max_dH = std::max(s.max_dH, r.ledger.dH);
    s.min_dissipated = std::min(s.min_dissipated, r.ledger.dissipated);
    s.total_newton_iterations += r.newton.iterations;
    s.max_newton_iterations = std::max(s.max_newton_iterations, r.newton.iterations);
    if (r.newton.used_pseudo_inverse) ++s.pseudo_inverse_steps;
    if (s.has_constraints) {
      const Vec& x = traj.states[k + 1];
      s.max_g_pos = std::max(s.max_g_pos, inf_norm(Vec(sys.constraints->position(x))));
      s.max_g_vel = std::max(s.max_g_vel, inf_norm(Vec(sys.constraints->velocity(x))));
    }
  }
  s.max_positive_dH = std::max(0.0, s.max_dH);
  s.energy_consistent = s.max_abs_balance_residual <= 10.0 * traj.tol;
  return s;
}

RunOutcome run(const RunConfig& cfg) {
  const ModelInstance m = make_model(cfg.model, cfg.params);
  auto stepper = build_stepper(m, cfg);
  const Vec x0 = cfg.x0.value_or(m.x0);
  RunOutcome out;
  out.config = cfg;
  const int N = step_count(cfg.t_end, cfg.h);
  try {
    out.trajectory = integrate(stepper, x0, make_input(cfg.input, m.system.m), cfg.t_end, cfg.h,
                               cfg.sampling);
  } catch (const IntegrationAborted& e) {
    out.trajectory = e.partial();
    out.summary.status = "failed";
    out.summary.failure = e.what();
    out.summary.failure_kind = e.cause();
  } catch (const Error& e) {
    out.trajectory.tol = cfg.newton.tol;
    out.trajectory.h = cfg.h;
    out.summary.status = "failed";
    out.summary.failure = e.what();
    out.summary.failure_kind = "Error";
  }
  RunSummary s = summarize(out.trajectory, stepper->system());
  s.status = out.summary.status;
  s.failure = out.summary.failure;
  s.failure_kind = out.summary.failure_kind;
  s.steps_requested = N;
  out.summary = s;
  return out;
}

json to_json(const RunSummary& s, const RunConfig& cfg, const Vec& x0) {
  json j;
  j["version"] = version();
  j["model"] = cfg.model;
  j["scheme"] = cfg.scheme;
  j["h"] = cfg.h;
  j["t_end"] = cfg.t_end;
  j["newton_tol"] = cfg.newton.tol;
  j["status"] = s.status;
  if (!s.failure.empty()) j["failure"] = {{"kind", s.failure_kind}, {"message", s.failure}};
  j["steps"] = s.steps;
  j["steps_requested"] = s.steps_requested;
  j["max_abs_balance_residual"] = s.max_abs_balance_residual;
  j["max_dH"] = s.max_dH;
  j["max_positive_dH"] = s.max_positive_dH;
  j["min_dissipated"] = s.min_dissipated;
  if (s.has_constraints) {
    j["max_g_pos_norm"] = s.max_g_pos;
    j["max_g_vel_norm"] = s.max_g_vel;
  }
  j["newton"] = {{"total_iterations", s.total_newton_iterations},
                 {"max_iterations", s.max_newton_iterations},
                 {"mean_iterations", s.steps > 0 ? double(s.total_newton_iterations) / s.steps : 0.0},
                 {"pseudo_inverse_steps", s.pseudo_inverse_steps}};
  j["energy_consistent"] = s.energy_consistent;
  j["H0"] = s.H0;
  j["H_final"] = s.H_final;
  json x = json::array();
  for (Eigen::Index i = 0; i < x0.size(); ++i) x.push_back(x0(i));
  j["x0"] = x;
  return j;
}

std::vector<std::string> trajectory_columns(const PHDAESystem& sys) {
  std::vector<std::string> cols{"t"};
  for (int i = 0; i < sys.n; ++i) cols.push_back("x" + std::to_string(i));
  for (const char* c : {"H", "dH", "W_diss", "supplied", "balance_residual"}) cols.emplace_back(c);
  if (sys.constraints) {
    cols.emplace_back("g_pos_norm");
    cols.emplace_back("g_vel_norm");
  }
  cols.emplace_back("newton_iters");
  return cols;
}

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  return f;
}

void write_json(const std::string& path, const json& j) {
  auto f = open_output(path);
  f << j.dump(2) << '\n';
}

std::string join_path(const std::string& dir, const char* file) {
  return (std::filesystem::path(dir) / file).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
}

}  // namespace

void write_trajectory_csv(const std::string& path, const Trajectory& traj, const PHDAESystem& sys) {
  auto f = open_output(path);
  const auto cols = trajectory_columns(sys);
  for (std::size_t i = 0; i < cols.size(); ++i) f << (i ? "," : "") << cols[i];
  f << '\n';
  for (std::size_t k = 0; k < traj.steps.size(); ++k) {
    const StepResult& r = traj.steps[k];
    const Vec& x = traj.states[k + 1];
    f << format_number(traj.times[k + 1]);
    for (Eigen::Index i = 0; i < x.size(); ++i) f << ',' << format_number(x(i));
    f << ',' << format_number(sys.H.value(x)) << ',' << format_number(r.ledger.dH) << ','
      << format_number(r.ledger.dissipated) << ',' << format_number(r.ledger.supplied) << ','
      << format_number(r.ledger.balance_residual);
    if (sys.constraints) {
      f << ',' << format_number(inf_norm(Vec(sys.constraints->position(x)))) << ','
        << format_number(inf_norm(Vec(sys.constraints->velocity(x))));
    }
    f << ',' << r.newton.iterations << '\n';
  }
}

void write_run_outputs(const RunOutcome& out) {
  const RunConfig& c = out.config;
  if (c.out_dir.empty()) return;
  ensure_dir(c.out_dir);
  const ModelInstance m = make_model(c.model, c.params);
  const PHDAESystem& sys =
      out.trajectory.stepper ? out.trajectory.stepper->system() : m.system;
  write_trajectory_csv(join_path(c.out_dir, "trajectory.csv"), out.trajectory, sys);
  write_json(join_path(c.out_dir, "summary.json"), to_json(out.summary, c, c.x0.value_or(m.x0)));
  write_json(join_path(c.out_dir, "config.echo"), to_json(c));
}

// ---------------------------------------------------------------------------
// Convergence study

double loglog_slope(const std::vector<double>& h, const std::vector<double>& e) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < h.size() && i < e.size(); ++i) {
    if (h[i] > 0.0 && e[i] > 0.0 && std::isfinite(e[i])) {
      lx.push_back(std::log(h[i]));
      ly.push_back(std::log(e[i]));
    }
  }
  if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  Mat A(lx.size(), 2);
  Vec b(ly.size());
  for (std::size_t i = 0; i < lx.size(); ++i) {
    A(i, 0) = lx[i];
    A(i, 1) = 1.0;
    b(i) = ly[i];
  }
  return least_squares_min_norm(A, b).x(0);
}

ConvergenceConfig parse_convergence_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  json base = doc;
  json conv = base.contains("convergence") ? base.at("convergence") : json::object();
  base.erase("convergence");
  base.erase("robustness");
  ConvergenceConfig c;
  c.base = parse_run_config(base);
  try {
    reject_unknown(conv, {"h_list", "reference_h", "probe_time", "observables", "reference"},
                   "convergence");
    if (!conv.contains("h_list")) throw ConfigError("convergence.h_list is required");
    const Vec hl = vector_of(conv.at("h_list"), "convergence.h_list");
    if (hl.size() == 0) throw ConfigError("convergence.h_list is empty");
    for (Eigen::Index i = 0; i < hl.size(); ++i) {
      if (!(hl(i) > 0.0)) throw ConfigError("convergence.h_list entries must be positive");
      c.h_list.push_back(hl(i));
    }
    std::sort(c.h_list.begin(), c.h_list.end(), std::greater<>());
    if (conv.contains("reference_h")) c.reference_h = positive(conv.at("reference_h"), "reference_h");
    if (conv.contains("probe_time")) c.probe_time = positive(conv.at("probe_time"), "probe_time");
    c.reference = conv.value("reference", std::string("scheme"));
    if (c.reference != "scheme" && c.reference != "exact")
      throw ConfigError("convergence.reference must be scheme or exact");

    const ModelInstance m = make_model(c.base.model, c.base.params);
    if (c.reference == "exact" && !m.exact)
      throw ConfigError("model " + m.name + " has no closed-form solution");
    if (conv.contains("observables")) {
      for (const auto& o : conv.at("observables")) c.observables.push_back(o.get<std::string>());
    } else {
      for (const auto& o : m.observables) c.observables.push_back(o.name);
    }
    for (const auto& name : c.observables) {
      const bool known = std::any_of(m.observables.begin(), m.observables.end(),
                                     [&](const Observable& o) { return o.name == name; });
      if (!known) throw ConfigError("unknown observable '" + name + "' for " + m.name);
    }
    for (double h : c.h_list) step_count(c.probe_time, h);
    if (c.reference == "scheme") {
      if (!(c.reference_h < c.h_list.back()))
        throw ConfigError("reference_h must be smaller than every h in h_list");
      step_count(c.probe_time, c.reference_h);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("convergence: ") + e.what());
  }
  return c;
}

namespace {

struct SubRun {
  bool ok = false;
  Vec x;
  std::string failure;
};

SubRun final_state(RunConfig cfg, double h, double t_end) {
  cfg.h = h;
  cfg.t_end = t_end;
  cfg.out_dir.clear();
  SubRun s;
  try {
    const RunOutcome out = run(cfg);
    s.ok = out.summary.status == "ok";
    s.failure = out.summary.failure;
    if (s.ok) s.x = out.trajectory.states.back();
  } catch (const std::exception& e) {
    s.failure = e.what();
  }
  return s;
}

}  // namespace

ConvergenceResult run_convergence(const ConvergenceConfig& cfg) {
  const ModelInstance m = make_model(cfg.base.model, cfg.base.params);
  ConvergenceResult res;
  res.observables = cfg.observables;

  std::future<SubRun> ref_future;
  if (cfg.reference == "scheme")
    ref_future = std::async(std::launch::async, final_state, cfg.base, cfg.reference_h, cfg.probe_time);
  std::vector<std::future<SubRun>> runs;
  for (double h : cfg.h_list)
    runs.push_back(std::async(std::launch::async, final_state, cfg.base, h, cfg.probe_time));

  SubRun ref;
  if (cfg.reference == "scheme") {
    ref = ref_future.get();
  } else {
    ref.ok = true;
    ref.x = m.exact(cfg.probe_time, cfg.base.x0.value_or(m.x0));
  }
  res.reference_ok = ref.ok;
  res.reference_failure = ref.failure;

  std::vector<Observable> obs;
  for (const auto& name : cfg.observables)
    for (const auto& o : m.observables)
      if (o.name == name) obs.push_back(o);

  for (std::size_t i = 0; i < runs.size(); ++i) {
    ConvergenceRow row;
    row.h = cfg.h_list[i];
    const SubRun r = runs[i].get();
    row.ok = r.ok && ref.ok;
    row.failure = r.ok ? (ref.ok ? "" : "reference run failed") : r.failure;
    for (const auto& o : obs) {
      double e = std::numeric_limits<double>::quiet_NaN();
      if (row.ok) {
        const Vec xr = ref.x.segment(o.offset, o.size);
        e = (xr - r.x.segment(o.offset, o.size)).norm() / xr.norm();
      }
      row.errors.push_back(e);
    }
    res.rows.push_back(row);
  }
  for (std::size_t j = 0; j < obs.size(); ++j) {
    std::vector<double> hs, es;
    for (const auto& row : res.rows) {
      if (!row.ok) continue;
      hs.push_back(row.h);
      es.push_back(row.errors[j]);
    }
    res.slopes.push_back(loglog_slope(hs, es));
  }
  return res;
}

json convergence_summary(const ConvergenceResult& res, const ConvergenceConfig& cfg) {
  json j;
  j["version"] = version();
  j["model"] = cfg.base.model;
  j["scheme"] = cfg.base.scheme;
  j["probe_time"] = cfg.probe_time;
  j["reference"] = cfg.reference;
  j["reference_h"] = cfg.reference_h;
  j["reference_ok"] = res.reference_ok;
  json slopes = json::object();
  for (std::size_t i = 0; i < res.observables.size(); ++i)
    slopes[res.observables[i]] = std::isfinite(res.slopes[i]) ? json(res.slopes[i]) : json(nullptr);
  j["slopes"] = slopes;
  json rows = json::array();
  for (const auto& row : res.rows) {
    json r{{"h", row.h}, {"ok", row.ok}};
    if (!row.failure.empty()) r["failure"] = row.failure;
    rows.push_back(r);
  }
  j["runs"] = rows;
  j["status"] = std::all_of(res.rows.begin(), res.rows.end(), [](const auto& r) { return r.ok; })
                    ? "ok"
                    : "partial";
  return j;
}

void write_convergence_outputs(const ConvergenceResult& res, const ConvergenceConfig& cfg) {
  const std::string& dir = cfg.base.out_dir;
  if (dir.empty()) return;
  ensure_dir(dir);
  {
    auto f = open_output(join_path(dir, "errors.csv"));
    f << "h";
    for (const auto& o : res.observables) f << ",e_" << o;
    f << ",status\n";
    for (const auto& row : res.rows) {
      f << format_number(row.h);
      for (double e : row.errors) f << ',' << format_number(e);
      f << ',' << (row.ok ? "ok" : "failed") << '\n';
    }
  }
  write_json(join_path(dir, "summary.json"), convergence_summary(res, cfg));
  json echo = to_json(cfg.base);
  echo["convergence"] = {{"h_list", cfg.h_list},
                         {"reference_h", cfg.reference_h},
                         {"probe_time", cfg.probe_time},
                         {"observables", cfg.observables},
                         {"reference", cfg.reference}};
  write_json(join_path(dir, "config.echo"), echo);
}

// ---------------------------------------------------------------------------
// Robustness study

RobustnessConfig parse_robustness_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  json base = doc;
  json rob = base.contains("robustness") ? base.at("robustness") : json::object();
  base.erase("convergence");
  base.erase("robustness");
  RobustnessConfig c;
  c.base = parse_run_config(base);
  try {
    reject_unknown(rob, {"h_list", "schemes"}, "robustness");
    if (!rob.contains("h_list")) throw ConfigError("robustness.h_list is required");
    const Vec hl = vector_of(rob.at("h_list"), "robustness.h_list");
    for (Eigen::Index i = 0; i < hl.size(); ++i) {
      if (!(hl(i) > 0.0)) throw ConfigError("robustness.h_list entries must be positive");
      c.h_list.push_back(hl(i));
    }
    if (c.h_list.empty()) throw ConfigError("robustness.h_list is empty");
    if (rob.contains("schemes")) {
      for (const auto& s : rob.at("schemes")) c.schemes.push_back(s.get<std::string>());
    } else {
      c.schemes = {c.base.scheme, "midpoint"};
    }
    const ModelInstance m = make_model(c.base.model, c.base.params);
    for (const auto& s : c.schemes) check_compatible(m, s);
    std::sort(c.schemes.begin(), c.schemes.end());
    c.schemes.erase(std::unique(c.schemes.begin(), c.schemes.end()), c.schemes.end());
    std::sort(c.h_list.begin(), c.h_list.end());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("robustness: ") + e.what());
  }
  return c;
}

std::vector<RobustnessEntry> run_robustness(const RobustnessConfig& cfg) {
  std::vector<std::future<RobustnessEntry>> jobs;
  for (const auto& scheme : cfg.schemes) {
    for (double h : cfg.h_list) {
      jobs.push_back(std::async(std::launch::async, [&cfg, scheme, h] {
        RobustnessEntry e;
        e.scheme = scheme;
        e.h = h;
        RunConfig c = cfg.base;
        c.scheme = scheme;
        c.h = h;
        c.input = InputSignal{};
        c.out_dir.clear();
        try {
          const RunOutcome out = run(c);
          e.converged_all_steps = out.summary.status == "ok";
          e.steps_completed = out.summary.steps;
          e.steps_requested = out.summary.steps_requested;
          e.max_dH_positive = out.summary.max_positive_dH;
          e.max_balance_residual = out.summary.max_abs_balance_residual;
          e.failure = out.summary.failure;
        } catch (const std::exception& ex) {
          e.failure = ex.what();
        }
        return e;
      }));
    }
  }
  std::vector<RobustnessEntry> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

json robustness_summary(const std::vector<RobustnessEntry>& rep, const RobustnessConfig& cfg) {
  json j;
  j["version"] = version();
  j["model"] = cfg.base.model;
  j["t_end"] = cfg.base.t_end;
  json runs = json::array();
  for (const auto& e : rep) {
    json r{{"scheme", e.scheme},
           {"h", e.h},
           {"converged_all_steps", e.converged_all_steps},
           {"steps_completed", e.steps_completed},
           {"steps_requested", e.steps_requested},
           {"max_dH_positive", e.max_dH_positive},
           {"max_balance_residual", e.max_balance_residual}};
    if (!e.failure.empty()) r["failure"] = e.failure;
    runs.push_back(r);
  }
  j["runs"] = runs;
  return j;
}

void write_robustness_outputs(const std::vector<RobustnessEntry>& rep, const RobustnessConfig& cfg) {
  const std::string& dir = cfg.base.out_dir;
  if (dir.empty()) return;
  ensure_dir(dir);
  {
    auto f = open_output(join_path(dir, "errors.csv"));
    f << "scheme,h,converged_all_steps,steps_completed,steps_requested,max_dH_positive,"
         "max_balance_residual\n";
    for (const auto& e : rep) {
      f << e.scheme << ',' << format_number(e.h) << ',' << (e.converged_all_steps ? 1 : 0) << ','
        << e.steps_completed << ',' << e.steps_requested << ',' << format_number(e.max_dH_positive)
        << ',' << format_number(e.max_balance_residual) << '\n';
    }
  }
  write_json(join_path(dir, "summary.json"), robustness_summary(rep, cfg));
  json echo = to_json(cfg.base);
  echo["robustness"] = {{"h_list", cfg.h_list}, {"schemes", cfg.schemes}};
  write_json(join_path(dir, "config.echo"), echo);
}

// ---------------------------------------------------------------------------
// Model validation

ModelValidation validate_model(const std::string& name, const ParamMap& params, int samples,
                               double tol) {
  const ModelInstance m = make_model(name, params);
  ModelValidation v;
  v.model = name;
  const std::vector<Vec> pts = validation_samples(m, samples);
  ValidationOptions opts;
  opts.check_rank = !m.rank_varies;
  v.report = validate_phdae(m.system, pts, tol, opts);
  if (m.rank_varies) {
    // Rank constancy is only checked away from the special points.
    v.rank_check_waived = true;
    const std::vector<Vec> generic(pts.begin(), pts.begin() + samples);
    ValidationReport r = validate_phdae(m.system, generic, tol);
    ValidationCheck c = *r.find("rank_E");
    c.name = "rank_E_generic";
    v.report.checks.push_back(c);
  }
  return v;
}

json to_json(const ModelValidation& v) {
  json checks = json::array();
  for (const auto& c : v.report.checks)
    checks.push_back({{"name", c.name},
                      {"max_violation", c.max_violation},
                      {"samples", c.samples},
                      {"tol", c.tol},
                      {"passed", c.passed}});
  return {{"model", v.model},
          {"passed", v.report.passed()},
          {"rank_check_waived_at_special_points", v.rank_check_waived},
          {"checks", checks}};
}

}  // namespace phdae
