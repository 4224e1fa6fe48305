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

#include "dlmaudit/dlmaudit.h"

#include <cstring>
#include <filesystem>
#include <memory>
#include <string>

#include "dlmaudit/experiment.hpp"

using namespace dlmaudit;

struct dlma_world {
  std::shared_ptr<const SyntheticWorld> world;
};

struct dlma_oracle {
  std::shared_ptr<const Oracle> oracle;
};

namespace {

thread_local std::string g_last_error;

dlma_status fail(dlma_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class Fn>
dlma_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    return fn();
  } catch (const Error& e) {
    return fail(static_cast<dlma_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(DLMA_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(DLMA_INTERNAL_ERROR, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void set_string(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

ModelRole to_role(dlma_role role) {
  if (role == DLMA_ROLE_TARGET) return ModelRole::kTarget;
  if (role == DLMA_ROLE_REFERENCE) return ModelRole::kReference;
  throw Error(ErrorCode::kInvalidArgument, "unknown role");
}

Json parse_json_arg(const char* text, const char* what) {
  if (!text || !*text) return Json::object();
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string(what) + ": invalid JSON: " + e.what());
  }
}

ExperimentConfig config_arg(const char* config_json) {
  require(config_json != nullptr, "config_json is null");
  return ExperimentConfig::from_json(parse_json_arg(config_json, "config"));
}

std::vector<LabeledScore> labeled(const double* scores, const int* is_member, std::size_t n) {
  require(scores && is_member, "null score arrays");
  std::vector<LabeledScore> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = {scores[i], is_member[i] != 0};
  return v;
}

}  // namespace

extern "C" {

const char* dlma_status_string(dlma_status status) {
  if (status == DLMA_OK) return "ok";
  const int code = static_cast<int>(status);
  if (code < 1 || code > 11) return "unknown";
  return error_code_name(static_cast<ErrorCode>(code));
}

const char* dlma_last_error(void) { return g_last_error.c_str(); }

void dlma_string_free(char* s) { std::free(s); }

const char* dlma_version(void) { return "1.0.0"; }

dlma_status dlma_derive_seed(uint64_t global_seed, const char* sample_id, const char* purpose,
                             int64_t rep, int64_t step, uint64_t* out) {
  return guarded([&] {
    require(sample_id && purpose && out, "null argument");
    *out = derive_seed(SeedSpec{global_seed}, sample_id, purpose, rep, step);
    return DLMA_OK;
  });
}

dlma_status dlma_mask_density(int t, int steps, double alpha_min, double alpha_max, double* out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    ScheduleConfig cfg;
    cfg.steps = steps;
    cfg.alpha_min = alpha_min;
    cfg.alpha_max = alpha_max;
    cfg.validate();
    *out = mask_density(t, cfg);
    return DLMA_OK;
  });
}

dlma_status dlma_inverse_weights(int steps, double* out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    const auto w = inverse_weights(steps);
    std::copy(w.begin(), w.end(), out);
    return DLMA_OK;
  });
}

dlma_status dlma_world_create(const char* world_json, uint64_t seed, dlma_world** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    Json cfg = {{"seed", seed},
                {"oracle", {{"backend", "synthetic"},
                            {"synthetic_world", parse_json_arg(world_json, "world")}}},
                {"attacks", {"sama"}}};
    const auto parsed = ExperimentConfig::from_json(cfg);
    *out = new dlma_world{SyntheticWorld::build(parsed.oracle.world, seed)};
    return DLMA_OK;
  });
}

void dlma_world_destroy(dlma_world* world) { delete world; }

dlma_status dlma_world_sample_count(const dlma_world* world, size_t* out) {
  return guarded([&] {
    require(world && out, "null argument");
    *out = world->world->samples().size();
    return DLMA_OK;
  });
}

dlma_status dlma_world_sample(const dlma_world* world, size_t index, int32_t* tokens,
                              size_t capacity, size_t* length, int* is_member) {
  return guarded([&] {
    require(world && length, "null argument");
    const auto& samples = world->world->samples();
    if (index >= samples.size()) throw Error(ErrorCode::kOutOfRange, "sample index out of range");
    const auto& s = samples[index];
    *length = s.sequence.tokens.size();
    if (is_member) *is_member = s.label == Label::kMember;
    if (tokens) {
      require(capacity >= s.sequence.tokens.size(), "token buffer too small");
      std::copy(s.sequence.tokens.begin(), s.sequence.tokens.end(), tokens);
    }
    return DLMA_OK;
  });
}

dlma_status dlma_oracle_from_world(const dlma_world* world, dlma_role role, dlma_oracle** out) {
  return guarded([&] {
    require(world && out, "null argument");
    const auto r = to_role(role);
    *out = new dlma_oracle{r == ModelRole::kTarget ? world->world->target()
                                                   : world->world->reference()};
    return DLMA_OK;
  });
}

dlma_status dlma_oracle_remote(const char* url, dlma_role role, int timeout_ms,
                               dlma_oracle** out) {
  return guarded([&] {
    require(url && out, "null argument");
    RemoteOptions options;
    if (timeout_ms > 0) options.timeout_ms = timeout_ms;
    *out = new dlma_oracle{std::make_shared<RemoteOracle>(url, to_role(role), options)};
    return DLMA_OK;
  });
}

void dlma_oracle_destroy(dlma_oracle* oracle) { delete oracle; }

dlma_status dlma_oracle_info(const dlma_oracle* oracle, size_t* vocab_size,
                             int32_t* mask_token_id, size_t* max_sequence_length) {
  return guarded([&] {
    require(oracle != nullptr, "null argument");
    const auto info = oracle->oracle->info();
    if (vocab_size) *vocab_size = info.vocab_size;
    if (mask_token_id) *mask_token_id = info.mask_token_id;
    if (max_sequence_length) *max_sequence_length = info.max_sequence_length;
    return DLMA_OK;
  });
}

dlma_status dlma_oracle_position_losses(const dlma_oracle* oracle, const int32_t* tokens,
                                        size_t n_tokens, const int32_t* masked, size_t n_masked,
                                        const int32_t* eval, size_t n_eval, double* losses) {
  return guarded([&] {
    require(oracle && tokens, "null argument");
    require(n_masked == 0 || masked, "null masked positions");
    require(n_eval == 0 || (eval && losses), "null eval positions or loss buffer");
    const auto result = query_losses(*oracle->oracle, {tokens, n_tokens}, {masked, n_masked},
                                     {eval, n_eval});
    std::copy(result.values().begin(), result.values().end(), losses);
    return DLMA_OK;
  });
}

dlma_status dlma_sama_score(const dlma_oracle* target, const dlma_oracle* reference,
                            const int32_t* tokens, size_t n_tokens, const char* sample_id,
                            const char* config_json, uint64_t seed, double* out) {
  return guarded([&] {
    require(target && reference && tokens && out, "null argument");
    Json cfg = {{"seed", seed}, {"attacks", {{"sama", parse_json_arg(config_json, "sama config")}}}};
    const auto parsed = ExperimentConfig::from_json(cfg);
    TokenSequence seq;
    seq.tokens.assign(tokens, tokens + n_tokens);
    seq.sample_id = sample_id ? sample_id : "";
    *out = sama_score(seq, *target->oracle, *reference->oracle, parsed.attacks.front().sama).score;
    return DLMA_OK;
  });
}

dlma_status dlma_auc(const double* scores, const int* is_member, size_t n, double* out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    *out = auc(labeled(scores, is_member, n));
    return DLMA_OK;
  });
}

dlma_status dlma_tpr_at_fpr(const double* scores, const int* is_member, size_t n,
                            double fpr_target, double* out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    *out = tpr_at_fpr(labeled(scores, is_member, n), fpr_target).tpr;
    return DLMA_OK;
  });
}

dlma_status dlma_config_resolve(const char* config_path, const char* attacks_csv,
                                const char* const* overrides, size_t n_overrides,
                                char** config_json, char** digest) {
  return guarded([&] {
    require(n_overrides == 0 || overrides, "null overrides");
    std::vector<std::string> attacks;
    if (attacks_csv) {
      std::string item;
      for (const char* p = attacks_csv;; ++p) {
        if (*p == ',' || *p == '\0') {
          if (!item.empty()) attacks.push_back(item);
          item.clear();
          if (*p == '\0') break;
        } else if (*p != ' ') {
          item += *p;
        }
      }
      if (attacks.empty()) throw Error(ErrorCode::kConfig, "empty attack list");
    }
    std::vector<std::string> ov;
    for (size_t i = 0; i < n_overrides; ++i) {
      require(overrides[i] != nullptr, "null override");
      ov.emplace_back(overrides[i]);
    }
    const Json resolved = resolve_config(config_path ? config_path : "", attacks, ov);
    const auto parsed = ExperimentConfig::from_json(resolved);
    set_string(config_json, resolved.dump(2));
    set_string(digest, parsed.digest());
    return DLMA_OK;
  });
}

dlma_status dlma_attack_help(char** text) {
  return guarded([&] {
    require(text != nullptr, "null argument");
    set_string(text, attack_help());
    return DLMA_OK;
  });
}

dlma_status dlma_synth_world(const char* config_json, const char* out_dir, int workers,
                             char** report_json) {
  return guarded([&] {
    require(out_dir != nullptr, "null out_dir");
    const auto cfg = config_arg(config_json);
    const Json report = write_synthetic_world(cfg, out_dir, workers);
    set_string(report_json, report.dump(2));
    return DLMA_OK;
  });
}

dlma_status dlma_run_experiment(const char* config_json, const char* out_dir, int workers,
                                char** summary_json, char** table) {
  return guarded([&] {
    const auto cfg = config_arg(config_json);
    const std::string dir = out_dir ? out_dir : cfg.output_dir;
    const auto inputs = load_inputs(cfg);
    const auto result = run_experiment(cfg, inputs, workers);
    const Json summary = write_experiment_outputs(result, cfg, dir);
    set_string(summary_json, summary.dump(2));
    set_string(table, format_metrics_table(result.reports));
    if (result.partial()) {
      return fail(DLMA_PARTIAL_FAILURE, std::to_string(result.failures.size()) +
                                            " sample/attack pairs failed; first: " +
                                            result.failures.front().message);
    }
    return DLMA_OK;
  });
}

dlma_status dlma_metrics(const char* config_json, const char* scores_csv, const char* out_dir,
                         char** metrics_out, char** table) {
  return guarded([&] {
    require(scores_csv != nullptr, "null scores path");
    const auto cfg = config_arg(config_json);
    const std::string dir =
        out_dir ? out_dir : std::filesystem::path(scores_csv).parent_path().string();
    const auto reports = metrics_from_scores(scores_csv, dir.empty() ? "." : dir, cfg.digest(), cfg.seed);
    set_string(metrics_out, metrics_json(reports).dump(2));
    set_string(table, format_metrics_table(reports));
    return DLMA_OK;
  });
}

dlma_status dlma_diagnose(const char* config_json, const char* scores_csv, int workers,
                          char** report_json) {
  return guarded([&] {
    const auto cfg = config_arg(config_json);
    const auto inputs = load_inputs(cfg);
    const Json report = diagnose(cfg, inputs, scores_csv ? scores_csv : "", workers);
    set_string(report_json, report.dump(2));
    return DLMA_OK;
  });
}

dlma_status dlma_serve_check(const char* url, int timeout_ms, char** report_json) {
  return guarded([&] {
    require(url != nullptr, "null url");
    RemoteOptions options;
    if (timeout_ms > 0) options.timeout_ms = timeout_ms;
    const Json report = serve_check(url, options);
    set_string(report_json, report.dump(2));
    if (!report["ok"].get<bool>()) return fail(DLMA_MALFORMED_RESPONSE, "server failed protocol checks");
    return DLMA_OK;
  });
}

}  // extern "C"
