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

#include "dlmaudit/sama.hpp"

#include <algorithm>
#include <string>

namespace dlmaudit {

void SamaConfig::validate() const {
  schedule.validate();
  if (mc_repetitions < 1) throw Error(ErrorCode::kConfig, "sama.mc_repetitions must be >= 1");
}

double subset_difference(const LossVector& reference, const LossVector& target,
                         std::span<const std::int32_t> subset) {
  if (subset.empty()) throw Error(ErrorCode::kInvalidArgument, "empty subset");
  double sum = 0.0;
  for (auto p : subset) sum += reference.at(p) - target.at(p);
  return sum / static_cast<double>(subset.size());
}

EvidenceCollection collect_evidence(const TokenSequence& sample, const Oracle& target,
                                    const Oracle& reference, const SamaConfig& cfg, int rep,
                                    std::vector<TokenComparison>* comparisons) {
  cfg.validate();
  const TokenSequence seq = sample.truncated();
  const std::size_t length = seq.size();
  if (length < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "sample '" + seq.sample_id + "' needs at least 2 tokens for masked probing");
  }
  const auto& sched = cfg.schedule;
  const auto steps = static_cast<std::size_t>(sched.steps);

  // All masks are derived up front so the per-step queries can be batched.
  std::vector<MaskConfiguration> masks;
  masks.reserve(steps);
  for (int t = 1; t <= sched.steps; ++t) {
    const auto k = mask_count(length, mask_density(t, sched));
    const auto seed = derive_seed(cfg.seed_spec, seq.sample_id, "sama.mask", rep, t);
    if (sched.accumulate && t > 1) {
      masks.push_back(extend_mask(masks.back(), k, seed));
    } else {
      masks.push_back(sample_mask(length, k, seed));
    }
  }
  std::vector<LossQuery> queries;
  queries.reserve(steps);
  for (const auto& m : masks) queries.push_back({seq.tokens, m.positions(), m.positions()});

  std::vector<LossVector> target_losses;
  std::vector<LossVector> reference_losses;
  try {
    target_losses = target.position_losses_batch(queries);
    reference_losses = reference.position_losses_batch(queries);
  } catch (const Error& e) {
    throw Error(e.code(), "sample '" + seq.sample_id + "', repetition " + std::to_string(rep) +
                              ": " + e.what());
  }

  EvidenceCollection evidence;
  evidence.sample_id = seq.sample_id;
  evidence.steps.reserve(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    const int t = static_cast<int>(s) + 1;
    StepEvidence step;
    step.step = t;
    step.density = mask_density(t, sched);
    step.mask_count = masks[s].size();
    try {
      const auto subsets = sample_subsets(
          masks[s], static_cast<std::size_t>(sched.subset_size),
          static_cast<std::size_t>(sched.num_subsets),
          derive_seed(cfg.seed_spec, seq.sample_id, "sama.subset", rep, t));
      step.deltas.reserve(subsets.size());
      for (const auto& u : subsets) {
        step.deltas.push_back(subset_difference(reference_losses[s], target_losses[s], u));
      }
    } catch (const Error& e) {
      throw Error(e.code(), "sample '" + seq.sample_id + "', step " + std::to_string(t) + ": " +
                                e.what());
    }
    if (comparisons) {
      for (auto p : masks[s].positions()) {
        comparisons->push_back({seq.tokens[static_cast<std::size_t>(p)],
                                reference_losses[s].at(p) - target_losses[s].at(p)});
      }
    }
    evidence.steps.push_back(std::move(step));
  }
  return evidence;
}

double sign_fraction(std::span<const double> deltas) {
  if (deltas.empty()) throw Error(ErrorCode::kInvalidArgument, "sign_fraction of empty list");
  std::size_t positive = 0;
  for (double d : deltas) positive += d > 0.0 ? 1 : 0;
  return static_cast<double>(positive) / static_cast<double>(deltas.size());
}

std::vector<double> inverse_weights(int steps) {
  if (steps < 1) throw Error(ErrorCode::kInvalidArgument, "inverse_weights needs T >= 1");
  double harmonic = 0.0;
  for (int i = 1; i <= steps; ++i) harmonic += 1.0 / i;
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(steps));
  for (int t = 1; t <= steps; ++t) w.push_back((1.0 / t) / harmonic);
  return w;
}

std::vector<double> step_sign_fractions(const EvidenceCollection& evidence) {
  std::vector<double> beta;
  beta.reserve(evidence.steps.size());
  for (std::size_t i = 0; i < evidence.steps.size(); ++i) {
    if (evidence.steps[i].step != static_cast<int>(i) + 1) {
      throw Error(ErrorCode::kInvalidArgument, "evidence steps must be exactly 1..T");
    }
    beta.push_back(sign_fraction(evidence.steps[i].deltas));
  }
  return beta;
}

double aggregate_evidence(const EvidenceCollection& evidence) {
  const auto beta = step_sign_fractions(evidence);
  const auto w = inverse_weights(static_cast<int>(beta.size()));
  double phi = 0.0;
  for (std::size_t t = 0; t < beta.size(); ++t) phi += w[t] * beta[t];
  // Rounding in the weight sum can leave phi a few ulps outside [0,1].
  return std::clamp(phi, 0.0, 1.0);
}

MembershipScore sama_score(const TokenSequence& sample, const Oracle& target,
                           const Oracle& reference, const SamaConfig& cfg) {
  cfg.validate();
  double total = 0.0;
  for (int rep = 0; rep < cfg.mc_repetitions; ++rep) {
    total += aggregate_evidence(collect_evidence(sample, target, reference, cfg, rep));
  }
  MembershipScore out;
  out.sample_id = sample.sample_id;
  out.attack_name = "sama";
  out.score = total / cfg.mc_repetitions;
  return out;
}

}  // namespace dlmaudit
