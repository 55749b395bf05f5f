// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
//
// phdae_cli: runs simulations and studies through the C API.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "phdae/phdae.h"

namespace {

enum Exit { kOk = 0, kConfig = 2, kRuntime = 3 };

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON experiment file");
  sub->add_option("--set", c.overrides, "Override a dotted key, e.g. newton.tol=1e-12")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  sub->add_option("--out", c.out_dir, "Output directory");
}

int report(phdae_status st) {
  std::fprintf(stderr, "phdae_cli: %s\n", phdae_last_error());
  switch (st) {
    case PHDAE_ERR_CONFIG:
    case PHDAE_ERR_INVALID_ARGUMENT:
      return kConfig;
    default:
      return kRuntime;
  }
}

// Builds the config handle from --config and --set; returns an exit code.
int load(const Common& c, phdae_config** cfg) {
  phdae_status st = c.config_path.empty() ? phdae_config_from_string("{}", cfg)
                                          : phdae_config_load_file(c.config_path.c_str(), cfg);
  if (st == PHDAE_ERR_IO) {
    std::fprintf(stderr, "phdae_cli: %s\n", phdae_last_error());
    return kConfig;
  }
  if (st != PHDAE_OK) return report(st);
  for (const auto& kv : c.overrides) {
    st = phdae_config_set(*cfg, kv.c_str());
    if (st != PHDAE_OK) return report(st);
  }
  if (!c.out_dir.empty()) {
    st = phdae_config_set(*cfg, ("output.dir=\"" + c.out_dir + "\"").c_str());
    if (st != PHDAE_OK) return report(st);
  }
  return kOk;
}

void print_and_free(char* s) {
  if (!s) return;
  std::printf("%s\n", s);
  phdae_string_free(s);
}

int cmd_run(const Common& c) {
  phdae_config* cfg = nullptr;
  if (int rc = load(c, &cfg); rc != kOk) {
    phdae_config_destroy(cfg);
    return rc;
  }
  char* echo = nullptr;
  phdae_status st = phdae_config_echo(cfg, &echo);
  if (st != PHDAE_OK) {
    phdae_config_destroy(cfg);
    return report(st);
  }
  phdae_string_free(echo);

  phdae_result* res = nullptr;
  st = phdae_simulate(cfg, &res);
  phdae_config_destroy(cfg);
  if (st != PHDAE_OK) return report(st);

  int rc = kOk;
  char* summary = nullptr;
  if (phdae_result_summary(res, &summary) == PHDAE_OK) print_and_free(summary);
  if (!c.out_dir.empty()) {
    st = phdae_result_write(res, c.out_dir.c_str());
    if (st != PHDAE_OK) rc = report(st);
  }
  if (rc == kOk && !phdae_result_ok(res)) {
    std::fprintf(stderr, "phdae_cli: integration failed: %s\n", phdae_last_error());
    rc = kRuntime;
  }
  phdae_result_destroy(res);
  return rc;
}

int cmd_study(const Common& c, bool convergence) {
  phdae_config* cfg = nullptr;
  if (int rc = load(c, &cfg); rc != kOk) {
    phdae_config_destroy(cfg);
    return rc;
  }
  char* summary = nullptr;
  const char* dir = c.out_dir.empty() ? nullptr : c.out_dir.c_str();
  const phdae_status st = convergence ? phdae_study_convergence(cfg, dir, &summary)
                                      : phdae_study_robustness(cfg, dir, &summary);
  phdae_config_destroy(cfg);
  print_and_free(summary);
  return st == PHDAE_OK ? kOk : report(st);
}

int cmd_validate(const Common& c, int samples, double tol) {
  phdae_config* cfg = nullptr;
  if (int rc = load(c, &cfg); rc != kOk) {
    phdae_config_destroy(cfg);
    return rc;
  }
  int passed = 0;
  char* out = nullptr;
  const phdae_status st = phdae_validate_model(cfg, samples, tol, &passed, &out);
  phdae_config_destroy(cfg);
  if (st != PHDAE_OK) return report(st);
  if (!c.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(c.out_dir, ec);
    const std::string path = c.out_dir + "/validation.json";
    if (std::FILE* f = std::fopen(path.c_str(), "w")) {
      std::fprintf(f, "%s\n", out);
      std::fclose(f);
    }
  }
  print_and_free(out);
  return passed ? kOk : kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete gradient integrators for port-Hamiltonian DAEs"};
  app.set_version_flag("--version", std::string(phdae_version()));
  app.require_subcommand(1);

  Common run_opts, conv_opts, rob_opts, val_opts;
  auto* run = app.add_subcommand("run", "Integrate one configured model");
  add_common(run, run_opts);
  auto* conv = app.add_subcommand("converge", "Step-size convergence study");
  add_common(conv, conv_opts);
  auto* rob = app.add_subcommand("robust", "Large step robustness study");
  add_common(rob, rob_opts);
  auto* val = app.add_subcommand("validate", "Structural checks of a model");
  add_common(val, val_opts);
  int samples = 20;
  double tol = 1e-8;
  val->add_option("--samples", samples, "Random domain samples")->check(CLI::PositiveNumber);
  val->add_option("--tol", tol, "Violation tolerance")->check(CLI::PositiveNumber);
  auto* list = app.add_subcommand("list-models", "Print the shipped model names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  if (*list) {
    for (int i = 0; i < phdae_model_count(); ++i) std::printf("%s\n", phdae_model_name(i));
    return kOk;
  }
  if (*run) return cmd_run(run_opts);
  if (*conv) return cmd_study(conv_opts, true);
  if (*rob) return cmd_study(rob_opts, false);
  if (*val) return cmd_validate(val_opts, samples, tol);
  return kConfig;
}
