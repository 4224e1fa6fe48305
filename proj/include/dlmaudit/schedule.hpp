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

// Progressive masking schedule and the probe sampling used by the
// evidence-collection phase.

#include <cstdint>
#include <vector>

#include "dlmaudit/core.hpp"

namespace dlmaudit {

struct ScheduleConfig {
  int steps = 16;
  double alpha_min = 0.05;
  double alpha_max = 0.50;
  int subset_size = 10;
  int num_subsets = 128;
  /// Grow S_t from S_{t-1} instead of drawing each step's mask afresh.
  bool accumulate = false;

  /// Throws kConfig on any violated invariant.
  void validate() const;
};

/// alpha_t for 1-based step t. Linear from alpha_min to alpha_max; alpha_min when T == 1.
double mask_density(int t, const ScheduleConfig& cfg);

/// ceil(L * alpha), clamped to [1, L].
std::size_t mask_count(std::size_t length, double alpha);

/// Uniform k-subset of {0..L-1}, deterministic in `seed`.
MaskConfiguration sample_mask(std::size_t length, std::size_t k, std::uint64_t seed);

/// Extends `previous` with uniformly drawn unmasked positions until it holds k positions.
MaskConfiguration extend_mask(const MaskConfiguration& previous, std::size_t k, std::uint64_t seed);

/// N independent subsets of size min(m, |mask|) drawn without replacement from
/// the mask's positions.
std::vector<std::vector<std::int32_t>> sample_subsets(const MaskConfiguration& mask,
                                                      std::size_t m, std::size_t n,
                                                      std::uint64_t seed);

}  // namespace dlmaudit
