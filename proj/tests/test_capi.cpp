// Copyright 2026 The phdae-dg Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "phdae/phdae.h"

TEST_CASE("library metadata") {
  CHECK(std::strlen(phdae_version()) > 0);
  CHECK(phdae_model_count() == 5);
  CHECK(std::string(phdae_model_name(0)) == "four_particle");
  CHECK(phdae_model_name(-1) == nullptr);
  CHECK(phdae_model_name(5) == nullptr);
}

TEST_CASE("argument checking") {
  phdae_config* cfg = nullptr;
  CHECK(phdae_config_create(nullptr, &cfg) == PHDAE_ERR_INVALID_ARGUMENT);
  CHECK(phdae_config_create("no_such_model", &cfg) == PHDAE_ERR_CONFIG);
  CHECK(cfg == nullptr);
  CHECK(std::string(phdae_last_error()).find("no_such_model") != std::string::npos);
  CHECK(phdae_config_from_string("{not json", &cfg) == PHDAE_ERR_CONFIG);
  CHECK(phdae_config_load_file("/nonexistent/phdae.json", &cfg) == PHDAE_ERR_IO);
  CHECK(phdae_simulate(nullptr, nullptr) == PHDAE_ERR_INVALID_ARGUMENT);
  phdae_config_destroy(nullptr);
  phdae_result_destroy(nullptr);
}

TEST_CASE("linear example through the C API") {
  phdae_config* cfg = nullptr;
  REQUIRE(phdae_config_create("linear_index1", &cfg) == PHDAE_OK);
  REQUIRE(phdae_config_set(cfg, "scheme=ddr") == PHDAE_OK);
  REQUIRE(phdae_config_set(cfg, "h=0.1") == PHDAE_OK);
  REQUIRE(phdae_config_set(cfg, "t_end=0.5") == PHDAE_OK);
  REQUIRE(phdae_config_set(cfg, "newton.tol=1e-13") == PHDAE_OK);

  char* echo = nullptr;
  REQUIRE(phdae_config_echo(cfg, &echo) == PHDAE_OK);
  CHECK(std::string(echo).find("\"ddr\"") != std::string::npos);
  phdae_string_free(echo);

  phdae_result* res = nullptr;
  REQUIRE(phdae_simulate(cfg, &res) == PHDAE_OK);
  CHECK(phdae_result_ok(res) == 1);
  CHECK(phdae_result_steps(res) == 5);
  REQUIRE(phdae_result_dim(res) == 2);

  std::vector<double> x(2);
  const double rho = 19.0 / 21.0;
  for (int k = 0; k <= 5; ++k) {
    REQUIRE(phdae_result_state(res, k, x.data(), x.size()) == PHDAE_OK);
    CHECK(std::abs(x[0] - std::pow(rho, k)) <= 1e-12);
    CHECK(std::abs(x[1] + x[0]) <= 1e-12);
  }
  double t = 0.0;
  CHECK(phdae_result_time(res, 5, &t) == PHDAE_OK);
  CHECK(t == doctest::Approx(0.5));
  CHECK(phdae_result_state(res, 6, x.data(), x.size()) == PHDAE_ERR_INVALID_ARGUMENT);
  CHECK(phdae_result_state(res, 0, x.data(), 1) == PHDAE_ERR_INVALID_ARGUMENT);

  double dH = 0, diss = 0, sup = 1, bal = 1;
  REQUIRE(phdae_result_ledger(res, 1, &dH, &diss, &sup, &bal) == PHDAE_OK);
  CHECK(dH < 0.0);
  CHECK(sup == 0.0);
  CHECK(std::abs(bal) <= 1e-12);
  CHECK(phdae_result_ledger(res, 0, &dH, nullptr, nullptr, nullptr) == PHDAE_ERR_INVALID_ARGUMENT);

  char* summary = nullptr;
  REQUIRE(phdae_result_summary(res, &summary) == PHDAE_OK);
  CHECK(std::string(summary).find("\"status\": \"ok\"") != std::string::npos);
  phdae_string_free(summary);

  phdae_result_destroy(res);
  phdae_config_destroy(cfg);
}

TEST_CASE("config errors map to PHDAE_ERR_CONFIG") {
  phdae_config* cfg = nullptr;
  REQUIRE(phdae_config_create("linear_index1", &cfg) == PHDAE_OK);
  REQUIRE(phdae_config_set(cfg, "scheme=sedg") == PHDAE_OK);
  phdae_result* res = nullptr;
  CHECK(phdae_simulate(cfg, &res) == PHDAE_ERR_CONFIG);
  CHECK(res == nullptr);
  CHECK(phdae_config_set(cfg, "broken") == PHDAE_ERR_CONFIG);
  phdae_config_destroy(cfg);
}

TEST_CASE("failed integrations still return a partial result") {
  phdae_config* cfg = nullptr;
  REQUIRE(phdae_config_from_string(
              R"({"model": "four_particle", "h": 0.5, "t_end": 5, "newton": {"max_iter": 5}})",
              &cfg) == PHDAE_OK);
  phdae_result* res = nullptr;
  REQUIRE(phdae_simulate(cfg, &res) == PHDAE_OK);
  CHECK(phdae_result_ok(res) == 0);
  CHECK(phdae_result_steps(res) < 10);
  CHECK(std::string(phdae_last_error()).find("aborted") != std::string::npos);
  phdae_result_destroy(res);
  phdae_config_destroy(cfg);
}

TEST_CASE("studies and validation") {
  phdae_config* cfg = nullptr;
  REQUIRE(phdae_config_from_string(
              R"({"model": "linear_index1", "scheme": "dgp",
                  "convergence": {"h_list": [0.1, 0.05, 0.025], "probe_time": 1.0,
                                  "reference": "exact"},
                  "robustness": {"h_list": [0.5, 1.0], "schemes": ["dgp", "ddr"]}})",
              &cfg) == PHDAE_OK);
  char* out = nullptr;
  CHECK(phdae_study_convergence(cfg, nullptr, &out) == PHDAE_OK);
  CHECK(std::string(out).find("slopes") != std::string::npos);
  phdae_string_free(out);
  out = nullptr;
  CHECK(phdae_study_robustness(cfg, nullptr, &out) == PHDAE_OK);
  CHECK(std::string(out).find("converged_all_steps") != std::string::npos);
  phdae_string_free(out);

  int passed = 0;
  out = nullptr;
  CHECK(phdae_validate_model(cfg, 20, 1e-8, &passed, &out) == PHDAE_OK);
  CHECK(passed == 1);
  phdae_string_free(out);
  CHECK(phdae_validate_model(cfg, 0, 1e-8, &passed, nullptr) == PHDAE_ERR_INVALID_ARGUMENT);
  phdae_config_destroy(cfg);
}
