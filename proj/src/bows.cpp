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

#include "dlmaudit/bows.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

namespace dlmaudit {
namespace {

struct Group {
  double value;
  int count;
  int positive;
};

double gini_sum(int n, int pos) {
  if (n == 0) return 0.0;
  const double p = static_cast<double>(pos) / n;
  return n * 2.0 * p * (1.0 - p);
}

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const int> y, const BowsConfig& cfg, Rng& rng)
      : x_(x), y_(y), cfg_(cfg), rng_(rng) {
    mtry_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(x.cols))));
    mtry_ = std::min(mtry_, x.cols);
  }

  template <typename Node>
  int build(std::vector<Node>& nodes, const std::vector<int>& rows, int depth) {
    const int index = static_cast<int>(nodes.size());
    nodes.emplace_back();
    const int n = static_cast<int>(rows.size());
    int pos = 0;
    for (int r : rows) pos += y_[static_cast<std::size_t>(r)];
    nodes[static_cast<std::size_t>(index)].value = n ? static_cast<double>(pos) / n : 0.0;
    if (depth >= cfg_.max_depth || n < 2 * cfg_.min_leaf || pos == 0 || pos == n || x_.cols == 0) {
      return index;
    }

    const double parent = gini_sum(n, pos);
    double best = parent - 1e-12 * n;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, int>> nonzero;
    std::vector<Group> groups;
    for (auto f : rng_.sample_without_replacement(x_.cols, mtry_)) {
      nonzero.clear();
      int zero_n = 0;
      int zero_pos = 0;
      for (int r : rows) {
        const double v = x_.at(static_cast<std::size_t>(r), static_cast<std::size_t>(f));
        const int label = y_[static_cast<std::size_t>(r)];
        if (v == 0.0) {
          ++zero_n;
          zero_pos += label;
        } else {
          nonzero.emplace_back(v, label);
        }
      }
      std::sort(nonzero.begin(), nonzero.end());
      groups.clear();
      bool zero_placed = zero_n == 0;
      for (const auto& [v, label] : nonzero) {
        if (!zero_placed && v > 0.0) {
          groups.push_back({0.0, zero_n, zero_pos});
          zero_placed = true;
        }
        if (groups.empty() || groups.back().value != v) groups.push_back({v, 0, 0});
        ++groups.back().count;
        groups.back().positive += label;
      }
      if (!zero_placed) groups.push_back({0.0, zero_n, zero_pos});

      int left_n = 0;
      int left_pos = 0;
      for (std::size_t g = 0; g + 1 < groups.size(); ++g) {
        left_n += groups[g].count;
        left_pos += groups[g].positive;
        const int right_n = n - left_n;
        if (left_n < cfg_.min_leaf) continue;
        if (right_n < cfg_.min_leaf) break;
        const double impurity = gini_sum(left_n, left_pos) + gini_sum(right_n, pos - left_pos);
        if (impurity < best) {
          best = impurity;
          best_feature = f;
          best_threshold = 0.5 * (groups[g].value + groups[g + 1].value);
        }
      }
    }
    if (best_feature < 0) return index;

    std::vector<int> left;
    std::vector<int> right;
    for (int r : rows) {
      const double v = x_.at(static_cast<std::size_t>(r), static_cast<std::size_t>(best_feature));
      (v <= best_threshold ? left : right).push_back(r);
    }
    const int l = build(nodes, left, depth + 1);
    const int rt = build(nodes, right, depth + 1);
    auto& node = nodes[static_cast<std::size_t>(index)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = rt;
    return index;
  }

 private:
  const FeatureMatrix& x_;
  std::span<const int> y_;
  const BowsConfig& cfg_;
  Rng& rng_;
  std::size_t mtry_;
};

FeatureMatrix to_matrix(const TfidfModel& model,
                        std::span<const std::vector<std::string>> docs) {
  FeatureMatrix m;
  m.rows = docs.size();
  m.cols = model.vocabulary().size();
  m.data.assign(m.rows * m.cols, 0.0);
  for (std::size_t r = 0; r < docs.size(); ++r) {
    const auto row = model.transform(docs[r]);
    for (std::size_t c = 0; c < m.cols; ++c) m.data[c * m.rows + r] = row[c];
  }
  return m;
}

}  // namespace

void BowsConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw Error(ErrorCode::kConfig, msg);
  };
  require(max_features >= 1, "bows.max_features must be >= 1");
  require(min_df >= 0.0 && min_df < 1.0, "bows.min_df must lie in [0,1)");
  require(trees >= 1, "bows.trees must be >= 1");
  require(max_depth >= 1, "bows.max_depth must be >= 1");
  require(min_leaf >= 1, "bows.min_leaf must be >= 1");
  require(folds >= 2, "bows.folds must be >= 2");
}

std::vector<std::string> bows_terms(std::string_view text) {
  std::vector<std::string> terms;
  std::istringstream in{std::string(text)};
  std::string word;
  while (in >> word) {
    for (auto& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    terms.push_back(std::move(word));
  }
  return terms;
}

TfidfModel TfidfModel::fit(std::span<const std::vector<std::string>> documents, int max_features,
                           double min_df) {
  std::map<std::string, int> df;
  for (const auto& doc : documents) {
    std::vector<std::string> unique(doc.begin(), doc.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (auto& t : unique) ++df[t];
  }
  const double total = static_cast<double>(documents.size());
  std::vector<std::pair<std::string, int>> kept;
  for (const auto& [term, count] : df) {
    if (count >= min_df * total) kept.emplace_back(term, count);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (kept.size() > static_cast<std::size_t>(max_features)) {
    kept.resize(static_cast<std::size_t>(max_features));
  }
  std::sort(kept.begin(), kept.end());

  TfidfModel model;
  for (const auto& [term, count] : kept) {
    model.column_.emplace(term, model.vocabulary_.size());
    model.vocabulary_.push_back(term);
    model.idf_.push_back(std::log((1.0 + total) / (1.0 + count)) + 1.0);
  }
  return model;
}

std::vector<double> TfidfModel::transform(std::span<const std::string> document) const {
  std::vector<double> row(vocabulary_.size(), 0.0);
  for (const auto& t : document) {
    auto it = column_.find(t);
    if (it != column_.end()) row[it->second] += 1.0;
  }
  double norm = 0.0;
  for (std::size_t c = 0; c < row.size(); ++c) {
    row[c] *= idf_[c];
    norm += row[c] * row[c];
  }
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (auto& v : row) v /= norm;
  }
  return row;
}

RandomForest RandomForest::fit(const FeatureMatrix& x, std::span<const int> y,
                               const BowsConfig& cfg, std::uint64_t seed) {
  if (x.rows == 0 || y.size() != x.rows) {
    throw Error(ErrorCode::kInvalidArgument, "forest needs one label per non-empty row");
  }
  RandomForest forest;
  for (int t = 0; t < cfg.trees; ++t) {
    Rng rng(hash_combine(seed, static_cast<std::uint64_t>(t)));
    std::vector<int> rows(x.rows);
    for (auto& r : rows) r = static_cast<int>(rng.below(x.rows));
    std::vector<Node> nodes;
    TreeBuilder(x, y, cfg, rng).build(nodes, rows, 0);
    forest.trees_.push_back(std::move(nodes));
  }
  return forest;
}

double RandomForest::predict(std::span<const double> row) const {
  double total = 0.0;
  for (const auto& nodes : trees_) {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
      const auto f = static_cast<std::size_t>(nodes[i].feature);
      i = static_cast<std::size_t>(row[f] <= nodes[i].threshold ? nodes[i].left : nodes[i].right);
    }
    total += nodes[i].value;
  }
  return total / static_cast<double>(trees_.size());
}

std::vector<double> bows_attack(std::span<const BowsDocument> corpus, const BowsConfig& cfg,
                                const SeedSpec& seed) {
  cfg.validate();
  if (corpus.size() < static_cast<std::size_t>(cfg.folds)) {
    throw Error(ErrorCode::kInvalidArgument,
                "BoWs corpus of " + std::to_string(corpus.size()) + " documents is smaller than " +
                    std::to_string(cfg.folds) + " folds");
  }
  std::vector<std::vector<std::string>> terms;
  terms.reserve(corpus.size());
  for (const auto& d : corpus) terms.push_back(bows_terms(d.text));

  // Stratified fold assignment: each class is shuffled and dealt round-robin.
  std::vector<int> fold(corpus.size(), 0);
  Rng rng(derive_seed(seed, "", "bows.folds", 0, 0));
  std::size_t dealt = 0;
  for (Label cls : {Label::kMember, Label::kNonMember}) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (corpus[i].label == cls) idx.push_back(static_cast<int>(i));
    }
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    for (int i : idx) fold[static_cast<std::size_t>(i)] = static_cast<int>(dealt++ % cfg.folds);
  }

  std::vector<double> scores(corpus.size(), 0.0);
  for (int f = 0; f < cfg.folds; ++f) {
    std::vector<std::vector<std::string>> train_docs;
    std::vector<int> train_y;
    std::vector<std::size_t> test_idx;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (fold[i] == f) {
        test_idx.push_back(i);
      } else {
        train_docs.push_back(terms[i]);
        train_y.push_back(corpus[i].label == Label::kMember ? 1 : 0);
      }
    }
    if (test_idx.empty()) continue;
    const auto model = TfidfModel::fit(train_docs, cfg.max_features, cfg.min_df);
    const auto forest = RandomForest::fit(to_matrix(model, train_docs), train_y, cfg,
                                          derive_seed(seed, "", "bows.forest", f, 0));
    for (auto i : test_idx) scores[i] = forest.predict(model.transform(terms[i]));
  }
  return scores;
}

}  // namespace dlmaudit
