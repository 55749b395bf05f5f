// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#include "phdae/phdae.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>

#include "phdae/errors.hpp"
#include "phdae/harness.hpp"

struct phdae_config {
  phdae::json doc;
};

struct phdae_result {
  phdae::RunOutcome outcome;
  phdae::Vec x0;
};

namespace {

thread_local std::string g_last_error;

phdae_status fail(phdae_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

// Maps the exception in flight to a status code.
phdae_status translate() {
  try {
    throw;
  } catch (const phdae::ConfigError& e) {
    return fail(PHDAE_ERR_CONFIG, e.what());
  } catch (const phdae::json::exception& e) {
    return fail(PHDAE_ERR_CONFIG, e.what());
  } catch (const phdae::Error& e) {
    return fail(PHDAE_ERR_RUNTIME, e.what());
  } catch (const std::bad_alloc&) {
    return fail(PHDAE_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(PHDAE_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(PHDAE_ERR_RUNTIME, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void emit(char** out, const phdae::json& j) {
  if (out) *out = dup_string(j.dump(2));
}

phdae::json with_out_dir(const phdae::json& doc, const char* out_dir) {
  phdae::json d = doc;
  if (out_dir) d["output"]["dir"] = out_dir;
  return d;
}

}  // namespace

extern "C" {

PHDAE_API const char* phdae_version(void) { return phdae::version(); }

PHDAE_API const char* phdae_last_error(void) { return g_last_error.c_str(); }

PHDAE_API int phdae_model_count(void) { return static_cast<int>(phdae::model_names().size()); }

PHDAE_API const char* phdae_model_name(int index) {
  const auto& names = phdae::model_names();
  if (index < 0 || index >= static_cast<int>(names.size())) return nullptr;
  return names[index].c_str();
}

PHDAE_API void phdae_string_free(char* s) { std::free(s); }

PHDAE_API phdae_status phdae_config_create(const char* model, phdae_config** out) {
  if (!model || !out) return fail(PHDAE_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  try {
    phdae::make_model(model);
    *out = new phdae_config{phdae::json{{"model", {{"name", model}}}}};
    return PHDAE_OK;
  } catch (...) {
    return translate();
  }
}

PHDAE_API phdae_status phdae_config_from_string(const char* json_text, phdae_config** out) {
  if (!json_text || !out) return fail(PHDAE_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  try {
    phdae::json doc = phdae::json::parse(json_text);
    if (!doc.is_object()) return fail(PHDAE_ERR_CONFIG, "config must be a JSON object");
    *out = new phdae_config{std::move(doc)};
    return PHDAE_OK;
  } catch (...) {
    return translate();
  }
}

PHDAE_API phdae_status phdae_config_load_file(const char* path, phdae_config** out) {
  if (!path || !out) return fail(PHDAE_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  std::ifstream f(path);
  if (!f) return fail(PHDAE_ERR_IO, std::string("cannot read '") + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return phdae_config_from_string(ss.str().c_str(), out);
}

PHDAE_API phdae_status phdae_config_set(phdae_config* cfg, const char* assignment) {
  if (!cfg || !assignment) return fail(PHDAE_ERR_INVALID_ARGUMENT, "null argument");
  try {
    phdae::apply_override(cfg->doc, assignment);
    return PHDAE_OK;
  } catch (...) {
    return translate();
  }
}

PHDAE_API phdae_status phdae_config_echo(const phdae_config* cfg, char** json_out) {
  if (!cfg || !json_out) return fail(PHDAE_ERR_INVALID_ARGUMENT, "null argument");
  try {
    emit(json_out, phdae::to_json(phdae::parse_run_config(cfg->doc)));
    return PHDAE_OK;
  } catch (...) {
    return translate();
  }
}

PHDAE_API void phdae_config_destroy(phdae_config* cfg) { delete cfg; }

PHDAE_API phdae_status phdae_simulate(const phdae_config* cfg, phdae_result** out) {
  if (!cfg || !out) return fail(PHDAE_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  try {
    phdae::json doc = cfg->doc;
    doc.erase("convergence");
    doc.erase("robustness");
    const phdae::RunConfig rc = phdae::parse_run_config(doc);
    auto* r = new phdae_result;
    r->outcome = phdae::run(rc);
    r->x0 = r->outcome.trajectory.states.empty() ? phdae::Vec()
                                                 : r->outcome.trajectory.states.front();
    if (r->outcome.summary.status != "ok") g_last_error = r->outcome.summary.failure;
    *out = r;
    return PHDAE_OK;
  } catch (...) {
    return translate();
  }
}

PHDAE_API int phdae_result_ok(const phdae_result* res) {
  return res && res->outcome.summary.status == "ok" ? 1 : 0;
}

PHDAE_API int phdae_result_steps(const phdae_result* res) {
  return res ? static_cast<int>(res->outcome.trajectory.steps.size()) : -1;
}

PHDAE_API int phdae_result_dim(const phdae_result* res) {
  return res ? static_cast<int>(res->x0.size()) : -1;
}

PHDAE_API phdae_status phdae_result_state(const phdae_result* res, int k, double* buf, size_t len) {
  if (!res || !buf) return fail(PHDAE_ERR_INVALID_ARGUMENT, "null argument");
  const auto& states = res->outcome.trajectory.states;
  if (k < 0 || k >= static_cast<int>(states.size()))
    return fail(PHDAE_ERR_INVALID_ARGUMENT, "state index out of range");
  const phdae::Vec& x = states[k];
  if (len < static_cast<size_t>(x.size())) return fail(PHDAE_ERR_INVALID_ARGUMENT, "buffer too small");
  for (Eigen::Index i = 0; i < x.size(); ++i) buf[i] = x(i);
  return PHDAE_OK;
}

PHDAE_API phdae_status phdae_result_time(const phdae_result* res, int k, double* t) {
  if (!res || !t) return fail(PHDAE_ERR_INVALID_ARGUMENT, "null argument");
  const auto& times = res->outcome.trajectory.times;
  if (k < 0 || k >= static_cast<int>(times.size()))
    return fail(PHDAE_ERR_INVALID_ARGUMENT, "time index out of range");
  *t = times[k];
  return PHDAE_OK;
}

PHDAE_API phdae_status phdae_result_ledger(const phdae_result* res, int k, double* dH,
                                           double* dissipated, double* supplied,
                                           double* balance_residual) {
  if (!res) return fail(PHDAE_ERR_INVALID_ARGUMENT, "null argument");
  const auto& steps = res->outcome.trajectory.steps;
  if (k < 1 || k > static_cast<int>(steps.size()))
    return fail(PHDAE_ERR_INVALID_ARGUMENT, "step index out of range");
  const phdae::StepLedger& l = steps[k - 1].ledger;
  if (dH) *dH = l.dH;
  if (dissipated) *dissipated = l.dissipated;
  if (supplied) *supplied = l.supplied;
  if (balance_residual) *balance_residual = l.balance_residual;
  return PHDAE_OK;
}

PHDAE_API phdae_status phdae_result_summary(const phdae_result* res, char** json_out) {
  if (!res || !json_out) return fail(PHDAE_ERR_INVALID_ARGUMENT, "null argument");
  try {
    emit(json_out, phdae::to_json(res->outcome.summary, res->outcome.config, res->x0));
    return PHDAE_OK;
  } catch (...) {
    return translate();
  }
}

PHDAE_API phdae_status phdae_result_write(const phdae_result* res, const char* dir) {
  if (!res || !dir) return fail(PHDAE_ERR_INVALID_ARGUMENT, "null argument");
  try {
    phdae::RunOutcome o = res->outcome;
    o.config.out_dir = dir;
    phdae::write_run_outputs(o);
    return PHDAE_OK;
  } catch (const phdae::ConfigError&) {
    return translate();
  } catch (const phdae::Error& e) {
    return fail(PHDAE_ERR_IO, e.what());
  } catch (...) {
    return translate();
  }
}

PHDAE_API void phdae_result_destroy(phdae_result* res) { delete res; }

PHDAE_API phdae_status phdae_study_convergence(const phdae_config* cfg, const char* out_dir,
                                               char** json_out) {
  if (!cfg) return fail(PHDAE_ERR_INVALID_ARGUMENT, "null argument");
  try {
    const phdae::ConvergenceConfig cc =
        phdae::parse_convergence_config(with_out_dir(cfg->doc, out_dir));
    const phdae::ConvergenceResult res = phdae::run_convergence(cc);
    try {
      phdae::write_convergence_outputs(res, cc);
    } catch (const phdae::Error& e) {
      return fail(PHDAE_ERR_IO, e.what());
    }
    emit(json_out, phdae::convergence_summary(res, cc));
    for (const auto& row : res.rows)
      if (!row.ok) return fail(PHDAE_ERR_RUNTIME, "sub-run at h=" + phdae::format_number(row.h) +
                                                      " failed: " + row.failure);
    return PHDAE_OK;
  } catch (...) {
    return translate();
  }
}

PHDAE_API phdae_status phdae_study_robustness(const phdae_config* cfg, const char* out_dir,
                                              char** json_out) {
  if (!cfg) return fail(PHDAE_ERR_INVALID_ARGUMENT, "null argument");
  try {
    const phdae::RobustnessConfig rc =
        phdae::parse_robustness_config(with_out_dir(cfg->doc, out_dir));
    const auto rep = phdae::run_robustness(rc);
    try {
      phdae::write_robustness_outputs(rep, rc);
    } catch (const phdae::Error& e) {
      return fail(PHDAE_ERR_IO, e.what());
    }
    emit(json_out, phdae::robustness_summary(rep, rc));
    return PHDAE_OK;
  } catch (...) {
    return translate();
  }
}

PHDAE_API phdae_status phdae_validate_model(const phdae_config* cfg, int samples, double tol,
                                            int* passed, char** json_out) {
  if (!cfg) return fail(PHDAE_ERR_INVALID_ARGUMENT, "null argument");
  if (samples < 1 || !(tol > 0.0))
    return fail(PHDAE_ERR_INVALID_ARGUMENT, "samples must be positive and tol > 0");
  try {
    phdae::json doc = cfg->doc;
    doc.erase("convergence");
    doc.erase("robustness");
    const phdae::RunConfig rc = phdae::parse_run_config(doc);
    const phdae::ModelValidation v = phdae::validate_model(rc.model, rc.params, samples, tol);
    if (passed) *passed = v.report.passed() ? 1 : 0;
    emit(json_out, phdae::to_json(v));
    return PHDAE_OK;
  } catch (...) {
    return translate();
  }
}

}  // extern "C"
