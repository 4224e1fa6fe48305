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

// Threshold-free and low-FPR evaluation of membership scores.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dlmaudit/core.hpp"

namespace dlmaudit {

struct LabeledScore {
  double score = 0.0;
  bool member = false;
};

std::vector<LabeledScore> labeled_scores(std::span<const double> members,
                                         std::span<const double> nonmembers);

/// Mann-Whitney AUC with mid-ranks; ties count one half. Throws on single-class input.
double auc(std::span<const LabeledScore> scores);

/// Fewer admissible false positives than this makes a TPR@FPR value rest on a
/// handful of non-member scores; reports flag it.
inline constexpr double kSmallSampleFalsePositives = 10.0;

struct TprAtFpr {
  double tpr = 0.0;
  double threshold = 0.0;      // +inf when no finite threshold satisfies the target
  double achieved_fpr = 0.0;
  bool small_sample = false;   // target * n_nonmembers < kSmallSampleFalsePositives
};

/// Step rule without interpolation: the smallest threshold t among the observed
/// scores (and +inf) with FPR(score >= t) <= target.
TprAtFpr tpr_at_fpr(std::span<const LabeledScore> scores, double fpr_target);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

/// Points for thresholds +inf and every unique score in descending order,
/// so the curve runs from (0,0) to (1,1).
std::vector<RocPoint> roc_curve(std::span<const LabeledScore> scores);
double trapezoid_area(std::span<const RocPoint> roc);

inline constexpr double kReportedFprs[] = {0.10, 0.01, 0.001};

struct MetricsReport {
  std::string attack_name;
  double auc = 0.0;
  std::map<double, double> tpr_at;
  std::vector<double> small_sample_fprs;
  std::size_t n_members = 0;
  std::size_t n_nonmembers = 0;
  std::string config_digest;
  std::uint64_t seed = 0;
};

MetricsReport compute_report(const std::string& attack, std::span<const LabeledScore> scores,
                             const std::string& config_digest, std::uint64_t seed);

}  // namespace dlmaudit
