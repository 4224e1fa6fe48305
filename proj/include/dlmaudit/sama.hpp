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

// Subset-sign membership attack for masked-diffusion models: progressive
// masking, per-step sign voting over small position subsets, and harmonic
// step weighting, averaged over Monte Carlo repetitions.

#include <span>
#include <vector>

#include "dlmaudit/core.hpp"
#include "dlmaudit/oracle.hpp"
#include "dlmaudit/schedule.hpp"

namespace dlmaudit {

struct SamaConfig {
  ScheduleConfig schedule;
  int mc_repetitions = 4;
  SeedSpec seed_spec;

  void validate() const;
};

/// One per-token loss comparison observed while collecting evidence.
struct TokenComparison {
  TokenId token = 0;
  double delta = 0.0;  // reference loss - target loss
};

/// Mean of (reference - target) over `subset`. Throws when a position is missing.
double subset_difference(const LossVector& reference, const LossVector& target,
                         std::span<const std::int32_t> subset);

/// Evidence for one repetition: per step one mask, one query per model over the
/// mask, and N subset differences. Issues exactly 2*T oracle queries. When
/// `comparisons` is non-null every masked token's difference is appended to it.
EvidenceCollection collect_evidence(const TokenSequence& sample, const Oracle& target,
                                    const Oracle& reference, const SamaConfig& cfg, int rep,
                                    std::vector<TokenComparison>* comparisons = nullptr);

/// Fraction of strictly positive differences.
double sign_fraction(std::span<const double> deltas);

/// w_t = (1/t) / H_T for t = 1..T.
std::vector<double> inverse_weights(int steps);

std::vector<double> step_sign_fractions(const EvidenceCollection& evidence);

/// sum_t w_t * beta_t, accumulated in ascending step order.
double aggregate_evidence(const EvidenceCollection& evidence);

/// Average of aggregate_evidence over the configured repetitions.
MembershipScore sama_score(const TokenSequence& sample, const Oracle& target,
                           const Oracle& reference, const SamaConfig& cfg);

}  // namespace dlmaudit
