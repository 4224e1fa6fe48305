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

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dlmaudit/experiment.hpp"
#include "dlmaudit/stats.hpp"
#include "stub_oracle.hpp"

using namespace dlmaudit;
using namespace dlmaudit::testing;

TEST_SUITE("stats") {

TEST_CASE("standard normal moments") {
  Rng rng(101);
  std::vector<double> v(1000000);
  for (auto& x : v) x = rng.normal();
  const auto s = distribution_stats(v);
  CHECK(std::abs(s.mean) < 0.005);
  CHECK(*s.sd == doctest::Approx(1.0).epsilon(0.005));
  CHECK(std::abs(*s.skewness) < 0.01);
  CHECK(std::abs(*s.excess_kurtosis) < 0.05);
}

TEST_CASE("hand-computed moments") {
  const std::vector<double> v{1, 2, 3, 4, 10};
  const auto s = distribution_stats(v);
  // mean 4; central moments m2 = 10, m3 = 36, m4 = 278.8 (population).
  CHECK(s.mean == 4.0);
  CHECK(*s.sd == doctest::Approx(std::sqrt(10.0)).epsilon(1e-14));
  CHECK(*s.skewness == doctest::Approx(36.0 / std::pow(10.0, 1.5)).epsilon(1e-14));
  CHECK(*s.excess_kurtosis == doctest::Approx(278.8 / 100.0 - 3.0).epsilon(1e-14));
}

TEST_CASE("degenerate inputs leave higher moments undefined") {
  const std::vector<double> constant(10, 2.5);
  const auto s = distribution_stats(constant);
  CHECK(*s.sd == 0.0);
  CHECK_FALSE(s.skewness.has_value());
  CHECK_FALSE(s.excess_kurtosis.has_value());
  const auto one = distribution_stats(std::vector<double>{1.0});
  CHECK_FALSE(one.sd.has_value());
  CHECK(distribution_stats(std::vector<double>{}).count == 0);
}

TEST_CASE("CCDF is non-increasing and spans the range") {
  Rng rng(3);
  std::vector<double> v(1000);
  for (auto& x : v) x = rng.uniform();
  const auto s = distribution_stats(v, 11);
  REQUIRE(s.ccdf.size() == 11);
  CHECK(s.ccdf.front().value == *std::min_element(v.begin(), v.end()));
  CHECK(s.ccdf.back().fraction_above == 0.0);
  for (std::size_t i = 1; i < s.ccdf.size(); ++i) {
    CHECK(s.ccdf[i].fraction_above <= s.ccdf[i - 1].fraction_above);
  }
}

TEST_CASE("signal strength ratios") {
  const std::vector<TokenComparison> a{{1, 0.5}, {1, 0.7}, {2, 0.064}};
  const auto same = signal_strength(a, a);
  REQUIRE(same.size() == 2);
  for (const auto& s : same) CHECK(*s.ratio == 1.0);
  const std::vector<TokenComparison> m{{2, 0.064}}, n{{2, 0.032}, {3, 1.0}};
  const auto r = signal_strength(m, n);
  REQUIRE(r.size() == 1);
  CHECK(*r[0].ratio == doctest::Approx(2.0).epsilon(1e-15));
  const std::vector<TokenComparison> tiny{{2, 1e-9}};
  CHECK_FALSE(signal_strength(m, tiny)[0].ratio.has_value());
}

TEST_CASE("expected loss difference") {
  const auto s = token_sample("x", 100);
  auto oracle = constant_oracle(1.0);
  CHECK(expected_loss_difference(s, *oracle, *oracle, 10, 0.3, {1}) == 0.0);
  auto better = constant_oracle(0.75);
  CHECK(expected_loss_difference(s, *better, *oracle, 10, 0.3, {1}) == 0.25);
  CHECK_THROWS_AS(expected_loss_difference(s, *oracle, *oracle, 0, 0.3, {1}), Error);
  CHECK_THROWS_AS(expected_loss_difference(s, *oracle, *oracle, 1, 0.0, {1}), Error);
}

TEST_CASE("calibrated world: member mean difference") {
  SyntheticWorldConfig cfg;
  cfg.num_members = 20;
  cfg.num_nonmembers = 0;
  const auto world = SyntheticWorld::build(cfg, 42);
  double total = 0.0;
  double weight = 0.0;
  for (const auto& s : world->samples()) {
    const double w = static_cast<double>(s.sequence.size());
    total += w * expected_loss_difference(s.sequence, *world->target(), *world->reference(), 1000,
                                          0.275, {42});
    weight += w;
  }
  MESSAGE("member expected difference " << total / weight);
  CHECK(std::abs(total / weight - 0.032) < 0.01);
}

TEST_CASE("calibrated world: domain tokens carry no membership signal") {
  ExperimentConfig cfg;
  cfg.oracle.world.num_members = 60;
  cfg.oracle.world.num_nonmembers = 60;
  const auto inputs = load_inputs(cfg);
  SamaConfig sama;
  const auto pools = collect_difference_pools(inputs, sama, 1);
  std::vector<double> ratios;
  for (const auto& s : signal_strength(pools.member, pools.nonmember)) {
    if (!inputs.world->is_domain_token(s.token) || !s.ratio) continue;
    ratios.push_back(*s.ratio);
  }
  REQUIRE(ratios.size() >= 20);
  std::sort(ratios.begin(), ratios.end());
  const double median = ratios[ratios.size() / 2];
  MESSAGE("domain tokens " << ratios.size() << " median ratio " << median);
  CHECK(median > 0.8);
  CHECK(median < 1.25);
}

}
