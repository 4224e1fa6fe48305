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

#include "dlmaudit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "dlmaudit/schedule.hpp"

namespace dlmaudit {

DistributionStats distribution_stats(std::span<const double> values, std::size_t ccdf_points) {
  DistributionStats out;
  out.count = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  out.mean = sum / n;
  if (values.size() >= 2) {
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
    for (double v : values) {
      const double d = v - out.mean;
      const double d2 = d * d;
      m2 += d2;
      m3 += d2 * d;
      m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    out.sd = std::sqrt(m2);
    if (m2 > 0.0) {
      if (values.size() >= 3) out.skewness = m3 / std::pow(m2, 1.5);
      if (values.size() >= 4) out.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
  }
  if (ccdf_points > 0) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < ccdf_points; ++i) {
      const double q = ccdf_points == 1 ? 0.5 : static_cast<double>(i) / (ccdf_points - 1);
      const auto idx = static_cast<std::size_t>(std::llround(q * (n - 1.0)));
      const double v = sorted[idx];
      const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), v);
      out.ccdf.push_back({v, static_cast<double>(above) / n});
    }
  }
  return out;
}

std::vector<TokenSignal> signal_strength(std::span<const TokenComparison> member,
                                         std::span<const TokenComparison> nonmember) {
  struct Acc {
    double msum = 0.0, nsum = 0.0;
    std::size_t mcount = 0, ncount = 0;
  };
  std::map<TokenId, Acc> acc;
  for (const auto& c : member) {
    auto& a = acc[c.token];
    a.msum += c.delta;
    ++a.mcount;
  }
  for (const auto& c : nonmember) {
    auto& a = acc[c.token];
    a.nsum += c.delta;
    ++a.ncount;
  }
  std::vector<TokenSignal> out;
  for (const auto& [token, a] : acc) {
    if (a.mcount == 0 || a.ncount == 0) continue;
    TokenSignal s;
    s.token = token;
    s.member_count = a.mcount;
    s.nonmember_count = a.ncount;
    s.member_mean = a.msum / static_cast<double>(a.mcount);
    s.nonmember_mean = a.nsum / static_cast<double>(a.ncount);
    if (std::fabs(s.nonmember_mean) >= kSignalFloor) s.ratio = s.member_mean / s.nonmember_mean;
    out.push_back(s);
  }
  return out;
}

double expected_loss_difference(const TokenSequence& sample, const Oracle& target,
                                const Oracle& reference, int draws, double density,
                                const SeedSpec& seed) {
  if (draws < 1) throw Error(ErrorCode::kInvalidArgument, "draws must be >= 1");
  if (!(density > 0.0 && density <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "density must lie in (0,1]");
  }
  const auto seq = sample.truncated();
  if (seq.size() < 1) throw Error(ErrorCode::kInvalidArgument, "empty sample");
  const auto k = mask_count(seq.size(), density);
  std::vector<MaskConfiguration> masks;
  std::vector<LossQuery> queries;
  masks.reserve(static_cast<std::size_t>(draws));
  for (int d = 0; d < draws; ++d) {
    masks.push_back(sample_mask(seq.size(), k, derive_seed(seed, seq.sample_id, "expected_delta", d, 0)));
  }
  for (const auto& m : masks) queries.push_back({seq.tokens, m.positions(), m.positions()});
  const auto t = target.position_losses_batch(queries);
  const auto r = reference.position_losses_batch(queries);
  double total = 0.0;
  for (std::size_t d = 0; d < masks.size(); ++d) total += r[d].mean() - t[d].mean();
  return total / static_cast<double>(draws);
}

}  // namespace dlmaudit
