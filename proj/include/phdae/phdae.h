/* Copyright 2026 The phdae-dg Authors */
/* SPDX-License-Identifier: Apache-2.0 */
#ifndef PHDAE_PHDAE_H
#define PHDAE_PHDAE_H

#include <stddef.h>

#if defined(_WIN32)
#  ifdef PHDAE_BUILDING_LIBRARY
#    define PHDAE_API __declspec(dllexport)
#  else
#    define PHDAE_API __declspec(dllimport)
#  endif
#else
#  define PHDAE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum phdae_status {
  PHDAE_OK = 0,
  PHDAE_ERR_INVALID_ARGUMENT = 1,
  PHDAE_ERR_CONFIG = 2,
  PHDAE_ERR_RUNTIME = 3,
  PHDAE_ERR_IO = 4
} phdae_status;

typedef struct phdae_config phdae_config;
typedef struct phdae_result phdae_result;

PHDAE_API const char* phdae_version(void);

/* Message of the last failed call on this thread; never NULL. */
PHDAE_API const char* phdae_last_error(void);

PHDAE_API int phdae_model_count(void);
PHDAE_API const char* phdae_model_name(int index);

/* Strings returned through char** out-parameters are released with this. */
PHDAE_API void phdae_string_free(char* s);

/* Configuration documents. Overrides use dotted keys, e.g. "newton.tol=1e-12". */
PHDAE_API phdae_status phdae_config_create(const char* model, phdae_config** out);
PHDAE_API phdae_status phdae_config_from_string(const char* json_text, phdae_config** out);
PHDAE_API phdae_status phdae_config_load_file(const char* path, phdae_config** out);
PHDAE_API phdae_status phdae_config_set(phdae_config* cfg, const char* assignment);
/* Checks the document and returns it with every default filled in. */
PHDAE_API phdae_status phdae_config_echo(const phdae_config* cfg, char** json_out);
PHDAE_API void phdae_config_destroy(phdae_config* cfg);

/* Runs one simulation. Returns PHDAE_OK when the run was attempted, even if
   integration stopped early; query phdae_result_ok for that. */
PHDAE_API phdae_status phdae_simulate(const phdae_config* cfg, phdae_result** out);
PHDAE_API int phdae_result_ok(const phdae_result* res);
PHDAE_API int phdae_result_steps(const phdae_result* res);
PHDAE_API int phdae_result_dim(const phdae_result* res);
/* k runs over 0..steps; buf must hold phdae_result_dim values. */
PHDAE_API phdae_status phdae_result_state(const phdae_result* res, int k, double* buf, size_t len);
PHDAE_API phdae_status phdae_result_time(const phdae_result* res, int k, double* t);
/* Per-step ledger entry for step k in 1..steps. */
PHDAE_API phdae_status phdae_result_ledger(const phdae_result* res, int k, double* dH,
                                           double* dissipated, double* supplied,
                                           double* balance_residual);
PHDAE_API phdae_status phdae_result_summary(const phdae_result* res, char** json_out);
/* Writes trajectory.csv, summary.json and config.echo into dir. */
PHDAE_API phdae_status phdae_result_write(const phdae_result* res, const char* dir);
PHDAE_API void phdae_result_destroy(phdae_result* res);

/* Studies. out_dir may be NULL to use output.dir from the config (or to skip
   writing when that is empty). The summary document is returned in json_out
   when it is not NULL. */
PHDAE_API phdae_status phdae_study_convergence(const phdae_config* cfg, const char* out_dir,
                                               char** json_out);
PHDAE_API phdae_status phdae_study_robustness(const phdae_config* cfg, const char* out_dir,
                                              char** json_out);
/* passed is set to 1 when every structural check holds. */
PHDAE_API phdae_status phdae_validate_model(const phdae_config* cfg, int samples, double tol,
                                            int* passed, char** json_out);

#ifdef __cplusplus
}
#endif

#endif
