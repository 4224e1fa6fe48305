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

// Distributional diagnostics of per-token loss differences.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dlmaudit/core.hpp"
#include "dlmaudit/oracle.hpp"
#include "dlmaudit/sama.hpp"

namespace dlmaudit {

struct CcdfPoint {
  double value = 0.0;
  double fraction_above = 0.0;  // P(X > value)
};

struct DistributionStats {
  std::size_t count = 0;
  double mean = 0.0;
  std::optional<double> sd;               // count >= 2 (population convention)
  std::optional<double> skewness;         // g1; count >= 3 and sd > 0
  std::optional<double> excess_kurtosis;  // g2 = m4 / m2^2 - 3; count >= 4 and sd > 0
  std::vector<CcdfPoint> ccdf;
};

/// Moments plus `ccdf_points` complementary-CDF samples at evenly spaced quantiles.
DistributionStats distribution_stats(std::span<const double> values, std::size_t ccdf_points = 32);

struct TokenSignal {
  TokenId token = 0;
  double member_mean = 0.0;
  double nonmember_mean = 0.0;
  std::size_t member_count = 0;
  std::size_t nonmember_count = 0;
  std::optional<double> ratio;  // unset when |nonmember_mean| < kSignalFloor
};

inline constexpr double kSignalFloor = 1e-6;

/// Per-token member/non-member mean difference ratio for tokens present in both
/// pools, sorted by token id.
std::vector<TokenSignal> signal_strength(std::span<const TokenComparison> member,
                                         std::span<const TokenComparison> nonmember);

/// Mean over `draws` uniform masks at `density` of the mean (reference - target)
/// masked loss.
double expected_loss_difference(const TokenSequence& sample, const Oracle& target,
                                const Oracle& reference, int draws, double density,
                                const SeedSpec& seed);

}  // namespace dlmaudit
