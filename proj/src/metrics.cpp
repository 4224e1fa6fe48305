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

#include "dlmaudit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dlmaudit {
namespace {

void require_both_classes(std::span<const LabeledScore> scores, std::size_t& pos,
                          std::size_t& neg) {
  pos = 0;
  neg = 0;
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) throw Error(ErrorCode::kInvalidArgument, "non-finite score");
    (s.member ? pos : neg)++;
  }
  if (pos == 0 || neg == 0) {
    throw Error(ErrorCode::kInvalidArgument, "metrics need at least one member and one non-member");
  }
}

std::vector<LabeledScore> descending(std::span<const LabeledScore> scores) {
  std::vector<LabeledScore> v(scores.begin(), scores.end());
  std::sort(v.begin(), v.end(),
            [](const LabeledScore& a, const LabeledScore& b) { return a.score > b.score; });
  return v;
}

}  // namespace

std::vector<LabeledScore> labeled_scores(std::span<const double> members,
                                         std::span<const double> nonmembers) {
  std::vector<LabeledScore> out;
  out.reserve(members.size() + nonmembers.size());
  for (double s : members) out.push_back({s, true});
  for (double s : nonmembers) out.push_back({s, false});
  return out;
}

double auc(std::span<const LabeledScore> scores) {
  std::size_t pos = 0;
  std::size_t neg = 0;
  require_both_classes(scores, pos, neg);
  std::vector<LabeledScore> v(scores.begin(), scores.end());
  std::sort(v.begin(), v.end(),
            [](const LabeledScore& a, const LabeledScore& b) { return a.score < b.score; });
  // Ranks are 1-based; a tie block spanning ranks i+1..j gets (i+1+j)/2.
  double member_rank_sum = 0.0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    std::size_t block_members = 0;
    while (j < v.size() && v[j].score == v[i].score) block_members += v[j++].member ? 1 : 0;
    member_rank_sum += static_cast<double>(block_members) * static_cast<double>(i + 1 + j) / 2.0;
    i = j;
  }
  const double p = static_cast<double>(pos);
  const double u = member_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(neg));
}

std::vector<RocPoint> roc_curve(std::span<const LabeledScore> scores) {
  std::size_t pos = 0;
  std::size_t neg = 0;
  require_both_classes(scores, pos, neg);
  const auto v = descending(scores);
  std::vector<RocPoint> roc;
  roc.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < v.size();) {
    const double t = v[i].score;
    while (i < v.size() && v[i].score == t) (v[i++].member ? tp : fp)++;
    roc.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                   static_cast<double>(tp) / static_cast<double>(pos), t});
  }
  return roc;
}

double trapezoid_area(std::span<const RocPoint> roc) {
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2.0;
  }
  return area;
}

TprAtFpr tpr_at_fpr(std::span<const LabeledScore> scores, double fpr_target) {
  if (!(fpr_target > 0.0 && fpr_target < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "fpr_target must lie in (0,1)");
  }
  std::size_t pos = 0;
  std::size_t neg = 0;
  require_both_classes(scores, pos, neg);
  TprAtFpr out;
  out.threshold = std::numeric_limits<double>::infinity();
  out.small_sample = fpr_target * static_cast<double>(neg) < kSmallSampleFalsePositives;
  // Walking thresholds downward only ever raises FPR, so the last admissible
  // point is the smallest admissible threshold.
  const auto v = descending(scores);
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < v.size();) {
    const double t = v[i].score;
    std::size_t tp_next = tp;
    std::size_t fp_next = fp;
    std::size_t j = i;
    while (j < v.size() && v[j].score == t) (v[j++].member ? tp_next : fp_next)++;
    const double fpr = static_cast<double>(fp_next) / static_cast<double>(neg);
    if (fpr > fpr_target) break;
    tp = tp_next;
    fp = fp_next;
    out.threshold = t;
    i = j;
  }
  out.tpr = static_cast<double>(tp) / static_cast<double>(pos);
  out.achieved_fpr = static_cast<double>(fp) / static_cast<double>(neg);
  return out;
}

MetricsReport compute_report(const std::string& attack, std::span<const LabeledScore> scores,
                             const std::string& config_digest, std::uint64_t seed) {
  MetricsReport r;
  r.attack_name = attack;
  r.auc = auc(scores);
  for (double f : kReportedFprs) {
    const auto t = tpr_at_fpr(scores, f);
    r.tpr_at[f] = t.tpr;
    if (t.small_sample) r.small_sample_fprs.push_back(f);
  }
  for (const auto& s : scores) (s.member ? r.n_members : r.n_nonmembers)++;
  r.config_digest = config_digest;
  r.seed = seed;
  return r;
}

}  // namespace dlmaudit
