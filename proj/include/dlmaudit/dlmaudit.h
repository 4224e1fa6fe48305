/* Copyright 2026 The dlmaudit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef DLMAUDIT_DLMAUDIT_H_
#define DLMAUDIT_DLMAUDIT_H_

/*
 * C interface to the dlmaudit library.
 *
 * Every function returns a dlma_status. On failure a message describing the
 * most recent error of the calling thread is available from dlma_last_error().
 * Strings returned through char** out-parameters are allocated by the library
 * and must be released with dlma_string_free(). Handles are opaque and must be
 * released with their matching destroy function.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DLMA_API __declspec(dllexport)
#else
#define DLMA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dlma_status {
  DLMA_OK = 0,
  DLMA_INVALID_ARGUMENT = 1,
  DLMA_OUT_OF_RANGE = 2,
  DLMA_CONFIG_ERROR = 3,
  DLMA_IO_ERROR = 4,
  DLMA_TRANSPORT_ERROR = 5,
  DLMA_TIMEOUT = 6,
  DLMA_MALFORMED_RESPONSE = 7,
  DLMA_SERVER_ERROR = 8,
  DLMA_HTTP_STATUS = 9,
  DLMA_PARTIAL_FAILURE = 10,
  DLMA_INTERNAL_ERROR = 11
} dlma_status;

typedef enum dlma_role { DLMA_ROLE_TARGET = 0, DLMA_ROLE_REFERENCE = 1 } dlma_role;

typedef struct dlma_world dlma_world;
typedef struct dlma_oracle dlma_oracle;

/** Static name of a status code, e.g. "configuration error". */
DLMA_API const char* dlma_status_string(dlma_status status);
/** Message of the last failed call on this thread; empty when none. */
DLMA_API const char* dlma_last_error(void);
DLMA_API void dlma_string_free(char* s);
DLMA_API const char* dlma_version(void);

/* ---- seeding and schedule ------------------------------------------------ */

/** Seed of one random stream, derived from (global seed, sample, purpose, rep, step). */
DLMA_API dlma_status dlma_derive_seed(uint64_t global_seed, const char* sample_id,
                                      const char* purpose, int64_t rep, int64_t step,
                                      uint64_t* out);
/** Mask density of 1-based step t for a linear schedule over [alpha_min, alpha_max]. */
DLMA_API dlma_status dlma_mask_density(int t, int steps, double alpha_min, double alpha_max,
                                       double* out);
/** Writes the T step weights (1/t)/H_T into out[0..steps-1]. */
DLMA_API dlma_status dlma_inverse_weights(int steps, double* out);

/* ---- synthetic worlds and oracles ----------------------------------------- */

/** Builds a synthetic world from a JSON object of world parameters (NULL or "{}" for defaults). */
DLMA_API dlma_status dlma_world_create(const char* world_json, uint64_t seed, dlma_world** out);
DLMA_API void dlma_world_destroy(dlma_world* world);
DLMA_API dlma_status dlma_world_sample_count(const dlma_world* world, size_t* out);
/** Token ids of sample `index` (sorted by sample_id). Pass tokens == NULL to query the length. */
DLMA_API dlma_status dlma_world_sample(const dlma_world* world, size_t index, int32_t* tokens,
                                       size_t capacity, size_t* length, int* is_member);

DLMA_API dlma_status dlma_oracle_from_world(const dlma_world* world, dlma_role role,
                                            dlma_oracle** out);
/** Oracle backed by a model server; `url` is scheme://host:port[/prefix]. */
DLMA_API dlma_status dlma_oracle_remote(const char* url, dlma_role role, int timeout_ms,
                                        dlma_oracle** out);
DLMA_API void dlma_oracle_destroy(dlma_oracle* oracle);
/** Loss vocabulary size and mask token id of an oracle. */
DLMA_API dlma_status dlma_oracle_info(const dlma_oracle* oracle, size_t* vocab_size,
                                      int32_t* mask_token_id, size_t* max_sequence_length);
/**
 * Per-position losses: masks `masked` positions of `tokens` and writes the loss
 * of each eval position, in order, to losses[0..n_eval-1].
 */
DLMA_API dlma_status dlma_oracle_position_losses(const dlma_oracle* oracle, const int32_t* tokens,
                                                 size_t n_tokens, const int32_t* masked,
                                                 size_t n_masked, const int32_t* eval,
                                                 size_t n_eval, double* losses);

/* ---- scoring and metrics -------------------------------------------------- */

/**
 * SAMA membership score of one token sequence in [0,1]. `config_json` holds the
 * attack parameters ({"schedule": {...}, "mc_repetitions": R}); NULL for defaults.
 */
DLMA_API dlma_status dlma_sama_score(const dlma_oracle* target, const dlma_oracle* reference,
                                     const int32_t* tokens, size_t n_tokens,
                                     const char* sample_id, const char* config_json,
                                     uint64_t seed, double* out);
/** Rank AUC; is_member[i] != 0 marks members. */
DLMA_API dlma_status dlma_auc(const double* scores, const int* is_member, size_t n, double* out);
/** TPR at the smallest threshold whose FPR does not exceed fpr_target. */
DLMA_API dlma_status dlma_tpr_at_fpr(const double* scores, const int* is_member, size_t n,
                                     double fpr_target, double* out);

/* ---- commands ------------------------------------------------------------- */

/**
 * Resolves an experiment configuration: reads `config_path` (NULL for the
 * defaults), keeps only `attacks_csv` when non-NULL, then applies the dotted
 * key=value `overrides` in order. Returns the configuration JSON and its digest.
 */
DLMA_API dlma_status dlma_config_resolve(const char* config_path, const char* attacks_csv,
                                         const char* const* overrides, size_t n_overrides,
                                         char** config_json, char** digest);
/** Listing of every attack with its default parameters. */
DLMA_API dlma_status dlma_attack_help(char** text);

/** Writes samples.ndjson, shots.ndjson, world.json and calibration.json to out_dir. */
DLMA_API dlma_status dlma_synth_world(const char* config_json, const char* out_dir, int workers,
                                      char** report_json);
/**
 * Runs the configured attacks and writes scores.csv, metrics.json, ROC files and
 * summary.json to out_dir. Returns DLMA_PARTIAL_FAILURE when some samples failed;
 * the outputs are still written. `table` receives the metrics table.
 */
DLMA_API dlma_status dlma_run_experiment(const char* config_json, const char* out_dir,
                                         int workers, char** summary_json, char** table);
/** Metrics and ROC files for a scores CSV. */
DLMA_API dlma_status dlma_metrics(const char* config_json, const char* scores_csv,
                                  const char* out_dir, char** metrics_json, char** table);
/** Loss-difference diagnostics; scores_csv may be NULL. */
DLMA_API dlma_status dlma_diagnose(const char* config_json, const char* scores_csv, int workers,
                                   char** report_json);
/** Protocol probe of a model server. Returns DLMA_OK only when every check passes. */
DLMA_API dlma_status dlma_serve_check(const char* url, int timeout_ms, char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* DLMAUDIT_DLMAUDIT_H_ */
