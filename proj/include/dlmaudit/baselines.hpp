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

// Reference membership attacks. Every score is oriented so that a higher value
// means "more likely a training member".

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dlmaudit/bows.hpp"
#include "dlmaudit/core.hpp"
#include "dlmaudit/oracle.hpp"

namespace dlmaudit {

struct NeighborConfig {
  int num_neighbors = 8;
  double perturb_fraction = 0.10;  // 0 yields neighbours equal to the sample
};

struct BaselineConfig {
  int mc_samples = 16;
  double mask_fraction = 0.15;
  double min_k_fraction = 0.20;
  int zlib_level = 6;
  int recall_shots = 7;
  std::vector<double> secmi_ratios = {0.10, 0.275, 0.45, 0.625, 0.80};
  double pia_mask_fraction = 0.30;
  BowsConfig bows;
  NeighborConfig neighbor;

  /// Throws kConfig.
  void validate() const;
};

/// Shot texts tokenized once with the target tokenizer, each pool sorted by sample_id.
struct ShotPools {
  struct Entry {
    std::string sample_id;
    std::vector<TokenId> tokens;
  };
  std::vector<Entry> member;
  std::vector<Entry> nonmember;

  static ShotPools prepare(std::span<const Shot> shots, const Oracle& tokenizer);
};

// Per-sample attacks. Samples are truncated to kMaxAuditLength before scoring.
double loss_attack(const TokenSequence& sample, const Oracle& target, const BaselineConfig& cfg,
                   const SeedSpec& seed);
double zlib_attack(const TokenSequence& sample, const Oracle& target, const BaselineConfig& cfg,
                   const SeedSpec& seed);
double lowercase_attack(const TokenSequence& sample, const Oracle& target,
                        const BaselineConfig& cfg, const SeedSpec& seed);
double neighbor_attack(const TokenSequence& sample, const Oracle& target,
                       const BaselineConfig& cfg, const SeedSpec& seed);
double min_k_attack(const TokenSequence& sample, const Oracle& target, const BaselineConfig& cfg,
                    const SeedSpec& seed);
double min_k_pp_attack(const TokenSequence& sample, const Oracle& target,
                       const BaselineConfig& cfg, const SeedSpec& seed);
double recall_attack(const TokenSequence& sample, const Oracle& target, const ShotPools& shots,
                     const BaselineConfig& cfg, const SeedSpec& seed);
double con_recall_attack(const TokenSequence& sample, const Oracle& target,
                         const ShotPools& shots, const BaselineConfig& cfg, const SeedSpec& seed);
double ratio_attack(const TokenSequence& sample, const Oracle& target, const Oracle& reference,
                    const BaselineConfig& cfg, const SeedSpec& seed);
/// Masks depend only on the token content, not on the global seed.
double secmi_attack(const TokenSequence& sample, const Oracle& target, const BaselineConfig& cfg);
/// The mask depends only on the text (or the tokens when there is no text).
double pia_attack(const TokenSequence& sample, const Oracle& target, const BaselineConfig& cfg);

// Scoring arithmetic, exposed for checking against hand computations.

/// DEFLATE (zlib container) size of `bytes` at `level`.
std::size_t zlib_compressed_size(std::string_view bytes, int level);
/// Sum of the ceil(fraction * n) smallest values (at least one).
double min_k_sum(std::span<const double> values, double fraction);
/// Per-token probability averaged over the iterations each token was masked in;
/// tokens never masked are dropped. Exposed so the Min-K% family shares one pipeline.
std::vector<double> averaged_token_probabilities(std::span<const LossVector> draws,
                                                 std::size_t length);
/// -(sum_s l_s / (s+1)) / (sum_s 1 / (s+1)).
double secmi_combine(std::span<const double> step_losses);
/// -(mean(masked) - mean(unmasked)).
double pia_combine(std::span<const double> masked, std::span<const double> unmasked);

/// Shot indices used for the prefix attacks: `k` of `pool_size`, deterministic in the seed.
std::vector<std::int32_t> select_shots(std::size_t pool_size, std::size_t k, const SeedSpec& seed);

inline constexpr double kLogEpsilon = 1e-12;

}  // namespace dlmaudit
