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

// Closed-form stochastic surrogate of a (fine-tuned target, pre-trained
// reference) masked-diffusion model pair.
//
// Generative law, per masked position i of a query under configuration S:
//
//   reference = d(x_i) * (1 + penalty * ctx_i) + c_R(S) + n_R(S, i)
//   target    = d(x_i) * (1 + penalty * ctx_i) - D(x_i) - M(S, i) + c_T(S) + n_T(S, i)
//
// d is a per-token-id difficulty (topic scale times word scale, log-normal),
// ctx_i the masked fraction of the +-2 neighbourhood, D a fixed log-normal
// domain-adaptation effect carried by domain token ids (members and
// non-members alike), M the memorization effect: present only when the
// window of tokens around i belongs to a training member and a seeded hash of
// (S, i) falls under the activation probability. c is noise shared by every
// position of one configuration, n is per-position noise; both symmetric and
// independent per model. Unmasked positions score visible_loss_fraction * d
// plus noise. Every draw is a hash of (world seed, query fingerprint,
// configuration fingerprint, position), so identical queries give identical
// losses.

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "dlmaudit/core.hpp"
#include "dlmaudit/oracle.hpp"

namespace dlmaudit {

/// Moment targets the default world is tuned against.
struct CalibrationTargets {
  double member_mean = 0.032;
  double member_sd = 0.034;
  double nonmember_mean = 0.007;
  double nonmember_sd = 0.029;
  double member_excess_kurtosis = 82.9;
  double nonmember_excess_kurtosis = 89.1;
  double member_skewness = 7.5;
  double nonmember_skewness = 7.6;
};

struct SyntheticWorldConfig {
  int num_members = 500;
  int num_nonmembers = 500;
  int min_length = 128;
  int max_length = 512;
  // Shot pools for prefix-based attacks. Member shots are trained on but never evaluated.
  int num_member_shots = 16;
  int num_nonmember_shots = 16;

  int vocab_size = 4096;
  int mask_token_id = 0;
  int max_sequence_length = 1024;
  int lexicon_size = 8000;
  int num_topics = 64;
  double capitalization_rate = 0.04;

  double base_loss_mean = 2.5;
  double base_loss_sd = 1.4;  // log-scale spread across topics
  double word_loss_sd = 0.5;  // log-scale spread across words
  double min_loss = 0.1;
  double context_penalty = 0.6;
  double visible_loss_fraction = 0.05;

  double domain_vocab_fraction = 0.10;
  double domain_token_fraction = 0.0055;
  double domain_richness_shape = 4.0;
  double domain_mu = -1.55;
  double domain_sigma = 0.6;
  double domain_shift = 0.005;  // uniform gain on every masked target token

  double member_signal_delta = 0.025;
  double activation_probability = 0.8;
  double member_strength_shape = 8.0;
  int memorization_window = 2;

  double noise_sd = 0.007;
  double config_noise_sd = 0.0106;

  CalibrationTargets calibration_targets;

  void validate() const;
  /// No membership signal and no domain effect; everything else unchanged.
  static SyntheticWorldConfig null_world();
};

struct LabeledSample {
  TokenSequence sequence;
  Label label = Label::kNonMember;
};

/// Whitespace tokenizer, case-sensitive, hashing each word to [1, vocab_size).
/// Id 0 is left for the mask token.
std::vector<TokenId> whitespace_tokenize(std::string_view text, std::size_t vocab_size);

class SyntheticWorld : public std::enable_shared_from_this<SyntheticWorld> {
 public:
  static std::shared_ptr<const SyntheticWorld> build(const SyntheticWorldConfig& cfg,
                                                     std::uint64_t seed);

  const SyntheticWorldConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  /// Evaluation samples, sorted by sample_id.
  const std::vector<LabeledSample>& samples() const { return samples_; }
  const std::vector<Shot>& shots() const { return shots_; }

  std::shared_ptr<const Oracle> target() const;
  std::shared_ptr<const Oracle> reference() const;

  bool is_domain_token(TokenId id) const;
  double domain_effect(TokenId id) const;
  double difficulty(TokenId id) const;
  std::size_t memorized_windows() const { return memorized_.size(); }

  OracleInfo info(ModelRole role) const;
  LossVector losses(const LossQuery& query, ModelRole role) const;

 private:
  SyntheticWorld(const SyntheticWorldConfig& cfg, std::uint64_t seed);
  void generate();
  std::string generate_text(Rng& rng, double domain_rate) const;
  void memorize(const std::vector<TokenId>& tokens, double strength);
  std::uint64_t window_hash(std::span<const TokenId> tokens, std::size_t i) const;

  SyntheticWorldConfig cfg_;
  std::uint64_t seed_;
  std::vector<std::string> lexicon_;
  std::vector<std::vector<std::uint32_t>> topic_words_;
  std::vector<std::uint32_t> domain_words_;
  std::vector<double> difficulty_;
  std::vector<double> domain_effect_;
  std::unordered_map<std::uint64_t, double> memorized_;
  std::vector<LabeledSample> samples_;
  std::vector<Shot> shots_;
};

class SyntheticOracle final : public Oracle {
 public:
  SyntheticOracle(std::shared_ptr<const SyntheticWorld> world, ModelRole role)
      : world_(std::move(world)), role_(role) {}

  OracleInfo info() const override { return world_->info(role_); }
  TokenSequence tokenize(const std::string& text) const override;
  LossVector position_losses(const LossQuery& query) const override;

 private:
  std::shared_ptr<const SyntheticWorld> world_;
  ModelRole role_;
};

struct SyntheticBundle {
  std::shared_ptr<const SyntheticWorld> world;
  std::shared_ptr<const Oracle> target;
  std::shared_ptr<const Oracle> reference;
  std::vector<LabeledSample> samples;
};

SyntheticBundle build_synthetic_world(const SyntheticWorldConfig& cfg, std::uint64_t seed);

}  // namespace dlmaudit
