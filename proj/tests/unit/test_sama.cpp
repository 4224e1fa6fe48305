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

#include <cmath>

#include "dlmaudit/sama.hpp"
#include "dlmaudit/synthetic.hpp"
#include "stub_oracle.hpp"

using namespace dlmaudit;
using namespace dlmaudit::testing;

namespace {

EvidenceCollection evidence_of(const std::vector<std::vector<double>>& steps) {
  EvidenceCollection e;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    StepEvidence s;
    s.step = static_cast<int>(i) + 1;
    s.deltas = steps[i];
    e.steps.push_back(s);
  }
  return e;
}

SamaConfig small_config() {
  SamaConfig cfg;
  cfg.schedule.steps = 4;
  cfg.schedule.num_subsets = 16;
  cfg.mc_repetitions = 2;
  return cfg;
}

}  // namespace

TEST_SUITE("sama") {

TEST_CASE("subset difference averages reference minus target") {
  CHECK(subset_difference(LossVector({0, 1}, {1.0, 2.0}), LossVector({0, 1}, {0.5, 1.5}),
                          std::vector<std::int32_t>{0, 1}) == 0.5);
  const LossVector same({0, 1, 2}, {1.0, 2.0, 3.0});
  CHECK(subset_difference(same, same, std::vector<std::int32_t>{0, 2}) == 0.0);
  const LossVector ref({0, 1, 2}, {3.0, 1.0, 1.0});
  const LossVector tgt({0, 1, 2}, {0.0, 1.1, 1.1});
  CHECK(subset_difference(ref, tgt, std::vector<std::int32_t>{1, 2}) ==
        doctest::Approx(-0.1).epsilon(1e-12));
  CHECK_THROWS_AS(subset_difference(ref, tgt, std::vector<std::int32_t>{}), Error);
  CHECK_THROWS_AS(subset_difference(ref, LossVector({0}, {1.0}), std::vector<std::int32_t>{1}),
                  Error);
}

TEST_CASE("sign fraction uses a strict inequality") {
  CHECK(sign_fraction(std::vector<double>{0.1, -0.2, 0.3, 0.0}) == 0.5);
  CHECK(sign_fraction(std::vector<double>{1, 2, 3}) == 1.0);
  CHECK(sign_fraction(std::vector<double>{0, 0, 0}) == 0.0);
  CHECK_THROWS_AS(sign_fraction(std::vector<double>{}), Error);
}

TEST_CASE("inverse-step weights") {
  CHECK(inverse_weights(1) == std::vector<double>{1.0});
  const auto w2 = inverse_weights(2);
  CHECK(w2[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(w2[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const auto w3 = inverse_weights(3);
  CHECK(w3[0] == doctest::Approx(6.0 / 11.0).epsilon(1e-15));
  CHECK(w3[1] == doctest::Approx(3.0 / 11.0).epsilon(1e-15));
  CHECK(w3[2] == doctest::Approx(2.0 / 11.0).epsilon(1e-15));
  for (int t = 2; t <= 64; ++t) {
    const auto w = inverse_weights(t);
    for (std::size_t i = 1; i < w.size(); ++i) CHECK(w[i] < w[i - 1]);
  }
  CHECK_THROWS_AS(inverse_weights(0), Error);
}

TEST_CASE("aggregation of step sign fractions") {
  CHECK(aggregate_evidence(evidence_of({{1}, {1}, {1}})) == 1.0);
  CHECK(aggregate_evidence(evidence_of({{1, -1}, {1, -1}, {-1, 1}})) ==
        doctest::Approx(0.5).epsilon(1e-15));
  CHECK(aggregate_evidence(evidence_of({{1.0}, {-1.0}})) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(aggregate_evidence(evidence_of({{0.0}, {0.0}})) == 0.0);
  auto bad = evidence_of({{1}, {1}});
  bad.steps[1].step = 3;
  CHECK_THROWS_AS(aggregate_evidence(bad), Error);
}

TEST_CASE("aggregation ignores the magnitude of differences") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> steps(8);
    for (auto& s : steps) {
      for (int i = 0; i < 16; ++i) s.push_back(rng.normal() * std::exp(5 * rng.normal()));
    }
    auto scaled = steps;
    for (auto& s : scaled) {
      for (auto& d : s) d *= 1e6;
    }
    CHECK(aggregate_evidence(evidence_of(steps)) == aggregate_evidence(evidence_of(scaled)));
  }
}

TEST_CASE("identical models give a zero score and the tie rule") {
  auto oracle = constant_oracle(1.0);
  const auto s = token_sample("x", 40);
  CHECK(sama_score(s, *oracle, *oracle, small_config()).score == 0.0);
}

TEST_CASE("a uniformly better target gives a score of one") {
  auto target = constant_oracle(1.0);
  auto reference = constant_oracle(2.0);
  const auto s = token_sample("x", 40);
  const auto score = sama_score(s, *target, *reference, small_config());
  CHECK(score.score == 1.0);
  CHECK(score.attack_name == "sama");
  CHECK(score.sample_id == "x");
}

TEST_CASE("evidence has T steps with increasing mask sizes and N differences") {
  auto target = constant_oracle(1.0);
  auto reference = constant_oracle(2.0);
  SamaConfig cfg;
  const auto s = token_sample("x", 512);
  const auto e = collect_evidence(s, *target, *reference, cfg, 0);
  REQUIRE(e.steps.size() == 16);
  CHECK(e.steps.front().mask_count == 26);
  CHECK(e.steps.back().mask_count == 256);
  for (const auto& st : e.steps) CHECK(st.deltas.size() == 128);
}

TEST_CASE("each repetition queries each model once per step") {
  auto target = std::make_shared<CountingOracle>(constant_oracle(1.0));
  auto reference = std::make_shared<CountingOracle>(constant_oracle(1.5));
  const auto cfg = small_config();
  sama_score(token_sample("x", 100), *target, *reference, cfg);
  CHECK(target->queries() == 8);
  CHECK(reference->queries() == 8);
}

TEST_CASE("samples beyond the audit length are truncated") {
  std::size_t max_seen = 0;
  auto oracle = std::make_shared<FunctionOracle>(
      [&](std::span<const TokenId> tokens, std::span<const std::int32_t>, std::int32_t) {
        max_seen = std::max(max_seen, tokens.size());
        return 1.0;
      });
  sama_score(token_sample("x", 900), *oracle, *oracle, small_config());
  CHECK(max_seen == kMaxAuditLength);
}

TEST_CASE("short samples are rejected") {
  auto oracle = constant_oracle(1.0);
  CHECK_THROWS_AS(sama_score(token_sample("x", 1), *oracle, *oracle, small_config()), Error);
}

TEST_CASE("accumulating masks grow monotonically") {
  std::vector<std::vector<std::int32_t>> seen;
  auto oracle = std::make_shared<FunctionOracle>(
      [&](std::span<const TokenId>, std::span<const std::int32_t> masked, std::int32_t p) {
        if (p == masked.front()) seen.emplace_back(masked.begin(), masked.end());
        return 1.0;
      });
  auto cfg = small_config();
  cfg.schedule.accumulate = true;
  const auto reference = constant_oracle(1.0);
  collect_evidence(token_sample("x", 60), *oracle, *reference, cfg, 0);
  REQUIRE(seen.size() == 4);
  for (std::size_t i = 1; i < seen.size(); ++i) {
    CHECK(std::includes(seen[i].begin(), seen[i].end(), seen[i - 1].begin(), seen[i - 1].end()));
  }
}

TEST_CASE("scores are deterministic and comparisons cover every masked position") {
  SyntheticWorldConfig wc;
  wc.num_members = 2;
  wc.num_nonmembers = 2;
  const auto world = SyntheticWorld::build(wc, 7);
  const auto& s = world->samples()[0].sequence;
  auto cfg = small_config();
  const auto a = sama_score(s, *world->target(), *world->reference(), cfg).score;
  CHECK(a == sama_score(s, *world->target(), *world->reference(), cfg).score);
  cfg.seed_spec.global_seed = 43;
  std::vector<TokenComparison> comps;
  collect_evidence(s, *world->target(), *world->reference(), cfg, 0, &comps);
  std::size_t masked = 0;
  const auto e = collect_evidence(s, *world->target(), *world->reference(), cfg, 0);
  for (const auto& st : e.steps) masked += st.mask_count;
  CHECK(comps.size() == masked);
}

TEST_CASE("configuration validation") {
  SamaConfig cfg;
  cfg.mc_repetitions = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

}
