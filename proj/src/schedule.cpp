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

#include "dlmaudit/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dlmaudit {

void ScheduleConfig::validate() const {
  if (steps < 1) throw Error(ErrorCode::kConfig, "schedule.steps must be >= 1");
  if (!(alpha_min > 0.0 && alpha_min < 1.0)) {
    throw Error(ErrorCode::kConfig, "schedule.alpha_min must lie in (0,1)");
  }
  if (!(alpha_max > 0.0 && alpha_max <= 1.0)) {
    throw Error(ErrorCode::kConfig, "schedule.alpha_max must lie in (0,1]");
  }
  if (alpha_min > alpha_max) throw Error(ErrorCode::kConfig, "schedule.alpha_min > alpha_max");
  if (subset_size < 1) throw Error(ErrorCode::kConfig, "schedule.subset_size must be >= 1");
  if (num_subsets < 1) throw Error(ErrorCode::kConfig, "schedule.num_subsets must be >= 1");
}

double mask_density(int t, const ScheduleConfig& cfg) {
  if (t < 1 || t > cfg.steps) {
    throw Error(ErrorCode::kOutOfRange,
                "step " + std::to_string(t) + " outside 1.." + std::to_string(cfg.steps));
  }
  if (cfg.steps == 1) return cfg.alpha_min;
  const double frac = static_cast<double>(t - 1) / static_cast<double>(cfg.steps - 1);
  return cfg.alpha_min + frac * (cfg.alpha_max - cfg.alpha_min);
}

std::size_t mask_count(std::size_t length, double alpha) {
  if (length == 0) throw Error(ErrorCode::kInvalidArgument, "mask_count on empty sequence");
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "mask density must lie in (0,1]");
  }
  // The product is nudged down by a few ulps so that exact integers such as
  // 512 * 0.5 are not pushed over by representation error in alpha.
  const double raw = static_cast<double>(length) * alpha;
  const double k = std::ceil(raw - raw * 1e-12);
  return std::clamp<std::size_t>(static_cast<std::size_t>(k), 1, length);
}

MaskConfiguration sample_mask(std::size_t length, std::size_t k, std::uint64_t seed) {
  if (k < 1 || k > length) {
    throw Error(ErrorCode::kInvalidArgument, "mask size " + std::to_string(k) +
                                                 " invalid for length " + std::to_string(length));
  }
  Rng rng(seed);
  return MaskConfiguration(rng.sample_without_replacement(length, k), length);
}

MaskConfiguration extend_mask(const MaskConfiguration& previous, std::size_t k,
                              std::uint64_t seed) {
  const std::size_t length = previous.sequence_length();
  if (k > length) throw Error(ErrorCode::kInvalidArgument, "mask size exceeds sequence length");
  if (previous.size() >= k) return previous;
  std::vector<std::int32_t> free_positions;
  free_positions.reserve(length - previous.size());
  for (std::size_t i = 0; i < length; ++i) {
    if (!previous.contains(static_cast<std::int32_t>(i))) {
      free_positions.push_back(static_cast<std::int32_t>(i));
    }
  }
  Rng rng(seed);
  auto added = rng.sample_from(free_positions, k - previous.size());
  std::vector<std::int32_t> merged = previous.positions();
  merged.insert(merged.end(), added.begin(), added.end());
  return MaskConfiguration(std::move(merged), length);
}

std::vector<std::vector<std::int32_t>> sample_subsets(const MaskConfiguration& mask,
                                                      std::size_t m, std::size_t n,
                                                      std::uint64_t seed) {
  if (mask.size() == 0) throw Error(ErrorCode::kInvalidArgument, "cannot subsample an empty mask");
  const std::size_t size = std::min(m, mask.size());
  Rng rng(seed);
  std::vector<std::vector<std::int32_t>> subsets;
  subsets.reserve(n);
  for (std::size_t i = 0; i < n; ++i) subsets.push_back(rng.sample_from(mask.positions(), size));
  return subsets;
}

}  // namespace dlmaudit
