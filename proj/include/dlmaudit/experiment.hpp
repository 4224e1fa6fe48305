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

#pragma once

// Experiment configuration, the parallel attack runner, and the file formats
// shared with external tools.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dlmaudit/baselines.hpp"
#include "dlmaudit/core.hpp"
#include "dlmaudit/metrics.hpp"
#include "dlmaudit/oracle.hpp"
#include "dlmaudit/remote.hpp"
#include "dlmaudit/sama.hpp"
#include "dlmaudit/synthetic.hpp"

namespace dlmaudit {

using Json = nlohmann::json;

struct AttackInfo {
  std::string name;
  bool needs_reference = false;
  bool needs_text = false;
  bool needs_shots = false;
  bool corpus_level = false;  // scored over the whole corpus, no oracle queries
  std::string summary;
};

/// All attacks in output order.
const std::vector<AttackInfo>& attack_catalog();
const AttackInfo& attack_info(const std::string& name);
/// Comma-separated attack names, for error messages.
std::string attack_names();
/// Multi-line listing of every attack with its default parameters.
std::string attack_help();

struct AttackSettings {
  std::string name;
  SamaConfig sama;          // used by "sama"
  BaselineConfig baseline;  // used by every other attack
};

/// Oracle queries one sample costs under `settings`.
std::uint64_t documented_query_count(const AttackSettings& settings);

struct OracleSettings {
  Backend backend = Backend::kSynthetic;
  std::string url;
  RemoteOptions remote;
  SyntheticWorldConfig world;
  bool null_world = false;
};

struct SampleSettings {
  bool synthetic = true;
  std::string path;
  std::string shots_path;
};

struct ExperimentConfig {
  OracleSettings oracle;
  SampleSettings samples;
  std::vector<AttackSettings> attacks;  // catalog order
  std::uint64_t seed = 42;
  std::string output_dir = "out";
  int workers = 0;  // 0: hardware concurrency

  /// Validates and fills defaults. Throws kConfig.
  static ExperimentConfig from_json(const Json& j);
  /// Fully expanded form. Execution settings (workers, output_dir) are omitted.
  Json canonical() const;
  /// 16 hex digits of FNV-1a over canonical().dump().
  std::string digest() const;
  SeedSpec seed_spec() const { return SeedSpec{seed}; }
  const AttackSettings* find_attack(const std::string& name) const;
};

Json world_config_to_json(const SyntheticWorldConfig& cfg);

/// Reads a JSON config file (or the defaults when `path` is empty), then selects
/// `attacks` (when non-empty) and applies dotted `key=value` overrides in order.
/// Values parse as JSON when possible and as strings otherwise.
Json resolve_config(const std::string& path, const std::vector<std::string>& attacks,
                    const std::vector<std::string>& overrides);
void apply_override(Json& config, const std::string& assignment);

struct ExperimentInputs {
  std::shared_ptr<const SyntheticWorld> world;  // null for remote oracles
  std::shared_ptr<const Oracle> target;
  std::shared_ptr<const Oracle> reference;
  std::vector<LabeledSample> samples;  // sorted by sample_id
  std::vector<Shot> shots;
};

ExperimentInputs load_inputs(const ExperimentConfig& cfg);

struct SampleFailure {
  std::string sample_id;
  std::string attack;
  ErrorCode code = ErrorCode::kInternal;
  std::string message;
};

struct ExperimentResult {
  std::string config_digest;
  std::uint64_t seed = 0;
  std::vector<MembershipScore> scores;  // by sample_id, then attack order
  std::vector<SampleFailure> failures;
  std::vector<MetricsReport> reports;
  std::uint64_t target_queries = 0;
  std::uint64_t reference_queries = 0;
  std::size_t samples = 0;

  bool partial() const { return !failures.empty(); }
};

/// Runs every configured attack over every sample with `workers` threads. The
/// result does not depend on the worker count.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const ExperimentInputs& inputs,
                                int workers);
/// Writes scores.csv, metrics.json, roc_<attack>.csv and summary.json.
Json write_experiment_outputs(const ExperimentResult& result, const ExperimentConfig& cfg,
                              const std::string& dir);
Json summary_json(const ExperimentResult& result, const ExperimentConfig& cfg);

// File formats.
void write_scores_csv(const std::string& path, const std::vector<MembershipScore>& scores);
std::vector<MembershipScore> read_scores_csv(const std::string& path);
Json metrics_json(const std::vector<MetricsReport>& reports);
void write_roc_csv(const std::string& path, const std::vector<RocPoint>& roc);
std::string format_metrics_table(const std::vector<MetricsReport>& reports);

std::vector<LabeledSample> read_samples(const std::string& path, const Oracle* tokenizer);
void write_samples(const std::string& path, const std::vector<LabeledSample>& samples);
std::vector<Shot> read_shots(const std::string& path);
void write_shots(const std::string& path, const std::vector<Shot>& shots);

/// Per-attack reports from a scores file, plus ROC files in `out_dir`.
std::vector<MetricsReport> metrics_from_scores(const std::string& scores_csv,
                                               const std::string& out_dir,
                                               const std::string& config_digest,
                                               std::uint64_t seed);

/// Token-level loss differences gathered from one SAMA evidence pass per sample.
struct DifferencePools {
  std::vector<TokenComparison> member;
  std::vector<TokenComparison> nonmember;
};
DifferencePools collect_difference_pools(const ExperimentInputs& inputs, const SamaConfig& sama,
                                         int workers);

/// Moment targets against achieved moments of the member and non-member pools.
Json calibration_report(const DifferencePools& pools, const CalibrationTargets& targets);

/// Pool moments, CCDF samples, token signal table and an optional summary of a scores file.
Json diagnose(const ExperimentConfig& cfg, const ExperimentInputs& inputs,
              const std::string& scores_csv, int workers);

/// Materialises a synthetic world: samples.ndjson, shots.ndjson, world.json and
/// calibration.json.
Json write_synthetic_world(const ExperimentConfig& cfg, const std::string& dir, int workers);

/// Probes a model server for protocol conformance.
Json serve_check(const std::string& url, const RemoteOptions& options);

}  // namespace dlmaudit
