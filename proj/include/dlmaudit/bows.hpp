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

// Query-free bag-of-words classifier: TF-IDF features and a shallow random
// forest scored by cross-validation.

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dlmaudit/core.hpp"

namespace dlmaudit {

struct BowsConfig {
  int max_features = 5000;
  double min_df = 0.05;
  int trees = 100;
  int max_depth = 2;
  int min_leaf = 5;
  int folds = 5;

  void validate() const;
};

/// Lower-cased whitespace terms.
std::vector<std::string> bows_terms(std::string_view text);

/// tf = raw count, idf = ln((1 + D) / (1 + df)) + 1, rows L2-normalised.
class TfidfModel {
 public:
  /// Keeps terms in at least min_df * D documents, then the max_features most
  /// frequent by document frequency (ties by term). Columns are in term order.
  static TfidfModel fit(std::span<const std::vector<std::string>> documents, int max_features,
                        double min_df);

  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const std::vector<double>& idf() const { return idf_; }
  std::vector<double> transform(std::span<const std::string> document) const;

 private:
  std::vector<std::string> vocabulary_;
  std::unordered_map<std::string, std::size_t> column_;
  std::vector<double> idf_;
};

/// Dense feature matrix stored column by column.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // data[col * rows + row]

  double at(std::size_t row, std::size_t col) const { return data[col * rows + row]; }
};

/// Gini forest: bootstrap per tree, floor(sqrt(F)) candidate features per split.
class RandomForest {
 public:
  static RandomForest fit(const FeatureMatrix& x, std::span<const int> y, const BowsConfig& cfg,
                          std::uint64_t seed);
  /// Mean over trees of the leaf's positive-class fraction.
  double predict(std::span<const double> row) const;

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  std::vector<std::vector<Node>> trees_;
};

struct BowsDocument {
  std::string sample_id;
  std::string text;
  Label label = Label::kNonMember;
};

/// Out-of-fold member probability for every document, in input order. Folds are
/// stratified by label and assigned from the seed.
std::vector<double> bows_attack(std::span<const BowsDocument> corpus, const BowsConfig& cfg,
                                const SeedSpec& seed);

}  // namespace dlmaudit
