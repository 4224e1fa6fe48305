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

#include "dlmaudit/metrics.hpp"

using namespace dlmaudit;

namespace {

std::vector<LabeledScore> ls(std::vector<double> m, std::vector<double> n) {
  return labeled_scores(m, n);
}

double brute_auc(const std::vector<LabeledScore>& s) {
  double wins = 0.0, pairs = 0.0;
  for (const auto& a : s) {
    if (!a.member) continue;
    for (const auto& b : s) {
      if (b.member) continue;
      pairs += 1.0;
      wins += a.score > b.score ? 1.0 : (a.score == b.score ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

std::vector<LabeledScore> random_set(Rng& rng, std::size_t max_n, int levels) {
  std::vector<LabeledScore> s;
  const std::size_t n = 2 + rng.below(max_n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    s.push_back({static_cast<double>(rng.below(static_cast<std::uint64_t>(levels))), rng.uniform() < 0.5});
  }
  s[0].member = true;
  s[1].member = false;
  return s;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("AUC examples") {
  CHECK(auc(ls({0.9, 0.8}, {0.1, 0.2})) == 1.0);
  CHECK(auc(ls({0.5, 0.5}, {0.5, 0.5})) == 0.5);
  CHECK(auc(ls({0.9, 0.3}, {0.5, 0.1})) == 0.75);
  CHECK(auc(ls({0.1}, {0.9})) == 0.0);
  CHECK_THROWS_AS(auc(ls({1.0}, {})), Error);
  CHECK_THROWS_AS(auc(ls({NAN}, {1.0})), Error);
}

TEST_CASE("TPR at FPR uses the step rule") {
  const auto perfect = ls({0.9, 0.8}, {0.1, 0.2});
  for (double f : {0.1, 0.01, 0.001}) CHECK(tpr_at_fpr(perfect, f).tpr == 1.0);

  const auto r = tpr_at_fpr(ls({3, 2}, {1, 0}), 0.5);
  CHECK(r.tpr == 1.0);
  CHECK(r.threshold == 1.0);
  CHECK(r.achieved_fpr == 0.5);

  // A tie block crossing the target is excluded whole.
  const auto tied = tpr_at_fpr(ls({1, 1}, {1, 1, 0, 0}), 0.25);
  CHECK(tied.tpr == 0.0);
  CHECK(std::isinf(tied.threshold));
  CHECK_THROWS_AS(tpr_at_fpr(perfect, 0.0), Error);
  CHECK_THROWS_AS(tpr_at_fpr(perfect, 1.0), Error);
}

TEST_CASE("small samples are flagged") {
  std::vector<double> non(1000, 0.0), mem(10, 1.0);
  CHECK(tpr_at_fpr(ls(mem, non), 0.001).small_sample);
  CHECK_FALSE(tpr_at_fpr(ls(mem, non), 0.01).small_sample);
  const auto report = compute_report("x", ls(mem, non), "d", 1);
  CHECK(report.small_sample_fprs == std::vector<double>{0.001});
  CHECK(report.n_members == 10);
  CHECK(report.n_nonmembers == 1000);
  CHECK(report.tpr_at.size() == 3);
}

TEST_CASE("null scores give TPR near the FPR target") {
  Rng rng(17);
  std::vector<double> m, n;
  for (int i = 0; i < 10000; ++i) {
    m.push_back(rng.uniform());
    n.push_back(rng.uniform());
  }
  const auto s = ls(m, n);
  for (double f : {0.1, 0.01}) {
    const double se = std::sqrt(f * (1 - f) / 10000);
    CHECK(std::abs(tpr_at_fpr(s, f).tpr - f) < 3 * se);
  }
}

TEST_CASE("ROC endpoints and toy case") {
  const auto roc = roc_curve(ls({0.9, 0.3}, {0.5, 0.1}));
  REQUIRE(roc.size() == 5);
  CHECK(roc.front().fpr == 0.0);
  CHECK(roc.front().tpr == 0.0);
  CHECK(std::isinf(roc.front().threshold));
  CHECK(roc[1].tpr == 0.5);
  CHECK(roc[1].fpr == 0.0);
  CHECK(roc[2].fpr == 0.5);
  CHECK(roc[3].tpr == 1.0);
  CHECK(roc.back().fpr == 1.0);
  CHECK(roc.back().tpr == 1.0);
  const auto tied = roc_curve(ls({1.0}, {1.0}));
  REQUIRE(tied.size() == 2);
  CHECK(trapezoid_area(tied) == 0.5);
}

TEST_CASE("AUC equals pairwise enumeration and the trapezoid area") {
  Rng rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    const auto s = random_set(rng, 20, trial % 2 ? 5 : 1000);
    const double a = auc(s);
    CHECK(a == brute_auc(s));
    CHECK(std::abs(a - trapezoid_area(roc_curve(s))) < 1e-12);
  }
}

TEST_CASE("AUC is invariant under strictly increasing transforms") {
  Rng rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = random_set(rng, 50, 20);
    const double a = auc(s);
    for (auto& x : s) x.score = std::exp(0.3 * x.score) - 7.0;
    CHECK(auc(s) == a);
  }
}

TEST_CASE("negating scores and swapping labels preserves AUC") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = random_set(rng, 50, 10);
    const double a = auc(s);
    for (auto& x : s) {
      x.score = -x.score;
      x.member = !x.member;
    }
    CHECK(auc(s) == a);
  }
}

TEST_CASE("TPR is non-decreasing in the FPR target") {
  Rng rng(37);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_set(rng, 200, 30);
    double prev = 0.0;
    for (double f = 0.01; f < 1.0; f += 0.01) {
      const double t = tpr_at_fpr(s, f).tpr;
      CHECK(t >= prev);
      prev = t;
    }
  }
}

}
