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

#include "dlmaudit/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace dlmaudit {

namespace {

// Stream tags for hash-derived draws.
constexpr std::uint64_t kTagDomain = 0x646f6d61696e0001ULL;
constexpr std::uint64_t kTagEffect = 0x6566666563740002ULL;
constexpr std::uint64_t kTagTopic = 0x746f706963000003ULL;
constexpr std::uint64_t kTagTopicScale = 0x7363616c65000004ULL;
constexpr std::uint64_t kTagWordScale = 0x776f726400000005ULL;
constexpr std::uint64_t kTagConfigNoise = 0x636f6e6600000006ULL;
constexpr std::uint64_t kTagTokenNoise = 0x746f6b6e00000007ULL;
constexpr std::uint64_t kTagActivation = 0x6163740000000008ULL;
constexpr std::uint64_t kTagMask = 0x6d61736b00000009ULL;

std::uint64_t tagged(std::uint64_t seed, std::uint64_t tag, std::uint64_t a) {
  return hash_combine(hash_combine(seed, tag), a);
}

std::uint64_t role_tag(ModelRole role) { return role == ModelRole::kTarget ? 0x7467ULL : 0x7266ULL; }

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

constexpr const char* kOnsets[] = {"b", "c", "d", "f", "g", "h", "k", "l", "m", "n", "p",
                                   "r", "s", "t", "v", "z", "br", "st", "tr", "pl", "gr", "sh"};
constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ea", "ou"};
constexpr const char* kCodas[] = {"", "", "", "n", "r", "s", "l", "m", "x", "th"};

}  // namespace

std::vector<TokenId> whitespace_tokenize(std::string_view text, std::size_t vocab_size) {
  if (vocab_size < 2) throw Error(ErrorCode::kInvalidArgument, "vocabulary too small");
  std::vector<TokenId> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) {
      const auto h = fnv1a64(text.substr(i, j - i));
      out.push_back(static_cast<TokenId>(1 + h % (vocab_size - 1)));
    }
    i = j;
  }
  return out;
}

void SyntheticWorldConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kConfig, std::string("synthetic world: ") + what);
  };
  require(num_members >= 0 && num_nonmembers >= 0, "sample counts must be non-negative");
  require(num_member_shots >= 0 && num_nonmember_shots >= 0, "shot counts must be non-negative");
  require(min_length >= 2 && max_length >= min_length, "need 2 <= min_length <= max_length");
  require(vocab_size >= 16, "vocab_size must be >= 16");
  require(mask_token_id >= 0 && mask_token_id < vocab_size, "mask_token_id must be < vocab_size");
  require(mask_token_id == 0, "the whitespace tokenizer reserves id 0 for the mask token");
  require(max_sequence_length >= max_length, "max_sequence_length below max_length");
  require(lexicon_size >= 64, "lexicon_size must be >= 64");
  require(num_topics >= 1, "num_topics must be >= 1");
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  require(prob(capitalization_rate), "capitalization_rate must lie in [0,1]");
  require(prob(domain_vocab_fraction), "domain_vocab_fraction must lie in [0,1]");
  require(prob(domain_token_fraction), "domain_token_fraction must lie in [0,1]");
  require(prob(activation_probability), "activation_probability must lie in [0,1]");
  require(prob(visible_loss_fraction), "visible_loss_fraction must lie in [0,1]");
  require(base_loss_mean > 0.0 && min_loss > 0.0, "loss levels must be positive");
  require(domain_shift >= 0.0, "domain_shift must be >= 0");
  require(base_loss_sd >= 0.0 && word_loss_sd >= 0.0 && domain_sigma >= 0.0 && noise_sd >= 0.0 &&
              config_noise_sd >= 0.0,
          "standard deviations must be non-negative");
  require(context_penalty >= 0.0, "context_penalty must be non-negative");
  require(member_signal_delta >= 0.0, "member_signal_delta must be non-negative");
  require(domain_richness_shape > 0.0 && member_strength_shape > 0.0, "gamma shapes must be positive");
  require(memorization_window >= 0, "memorization_window must be non-negative");
  require(member_signal_delta == 0.0 || activation_probability > 0.0,
          "member signal needs a positive activation probability");
}

SyntheticWorldConfig SyntheticWorldConfig::null_world() {
  SyntheticWorldConfig cfg;
  cfg.member_signal_delta = 0.0;
  cfg.domain_token_fraction = 0.0;
  cfg.domain_shift = 0.0;
  cfg.domain_vocab_fraction = 0.0;
  return cfg;
}

SyntheticWorld::SyntheticWorld(const SyntheticWorldConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), seed_(seed) {}

std::shared_ptr<const SyntheticWorld> SyntheticWorld::build(const SyntheticWorldConfig& cfg,
                                                            std::uint64_t seed) {
  cfg.validate();
  std::shared_ptr<SyntheticWorld> world(new SyntheticWorld(cfg, seed));
  world->generate();
  return world;
}

void SyntheticWorld::generate() {
  const SeedSpec spec{seed_};
  const auto vocab = static_cast<std::size_t>(cfg_.vocab_size);

  // Per-id tables.
  difficulty_.assign(vocab, 0.0);
  domain_effect_.assign(vocab, 0.0);
  std::vector<std::uint32_t> topic_of(vocab, 0);
  std::vector<double> topic_scale(static_cast<std::size_t>(cfg_.num_topics));
  for (std::size_t g = 0; g < topic_scale.size(); ++g) {
    topic_scale[g] = std::exp(cfg_.base_loss_sd * hash_to_normal(tagged(seed_, kTagTopicScale, g)));
  }
  for (std::size_t id = 1; id < vocab; ++id) {
    topic_of[id] = static_cast<std::uint32_t>(tagged(seed_, kTagTopic, id) %
                                              static_cast<std::uint64_t>(cfg_.num_topics));
    const double word = std::exp(cfg_.word_loss_sd * hash_to_normal(tagged(seed_, kTagWordScale, id)));
    difficulty_[id] = std::max(cfg_.min_loss, cfg_.base_loss_mean * topic_scale[topic_of[id]] * word);
    if (hash_to_unit(tagged(seed_, kTagDomain, id)) < cfg_.domain_vocab_fraction) {
      domain_effect_[id] =
          std::exp(cfg_.domain_mu + cfg_.domain_sigma * hash_to_normal(tagged(seed_, kTagEffect, id)));
    }
  }

  // Lexicon of pronounceable lowercase words.
  {
    Rng rng(derive_seed(spec, "", "world.lexicon", 0, 0));
    std::set<std::string> seen;
    lexicon_.reserve(static_cast<std::size_t>(cfg_.lexicon_size));
    while (lexicon_.size() < static_cast<std::size_t>(cfg_.lexicon_size)) {
      const auto syllables = 1 + rng.below(3);
      std::string w;
      for (std::uint64_t s = 0; s < syllables; ++s) {
        w += kOnsets[rng.below(std::size(kOnsets))];
        w += kVowels[rng.below(std::size(kVowels))];
      }
      w += kCodas[rng.below(std::size(kCodas))];
      if (seen.insert(w).second) lexicon_.push_back(w);
    }
  }
  topic_words_.assign(static_cast<std::size_t>(cfg_.num_topics), {});
  domain_words_.clear();
  for (std::uint32_t w = 0; w < lexicon_.size(); ++w) {
    const auto id = whitespace_tokenize(lexicon_[w], vocab).front();
    if (domain_effect_[static_cast<std::size_t>(id)] > 0.0) {
      domain_words_.push_back(w);
    } else {
      topic_words_[topic_of[static_cast<std::size_t>(id)]].push_back(w);
    }
  }
  std::erase_if(topic_words_, [](const auto& v) { return v.empty(); });
  if (topic_words_.empty()) throw Error(ErrorCode::kConfig, "lexicon produced no topic words");
  if (domain_words_.empty() && cfg_.domain_token_fraction > 0.0) {
    throw Error(ErrorCode::kConfig, "lexicon produced no domain words");
  }

  // Texts. Labels are shuffled over the id range so sorted order carries no label.
  const int n_eval = cfg_.num_members + cfg_.num_nonmembers;
  std::vector<Label> labels;
  labels.insert(labels.end(), static_cast<std::size_t>(cfg_.num_members), Label::kMember);
  labels.insert(labels.end(), static_cast<std::size_t>(cfg_.num_nonmembers), Label::kNonMember);
  {
    Rng rng(derive_seed(spec, "", "world.labels", 0, 0));
    for (std::size_t i = labels.size(); i > 1; --i) {
      std::swap(labels[i - 1], labels[static_cast<std::size_t>(rng.below(i))]);
    }
  }

  auto make_sequence = [&](const std::string& sample_id, bool member) {
    Rng rng(derive_seed(spec, sample_id, "world.text", 0, 0));
    const double richness = rng.gamma(cfg_.domain_richness_shape, 1.0 / cfg_.domain_richness_shape);
    const double rate = std::min(1.0, cfg_.domain_token_fraction * richness);
    TokenSequence seq;
    seq.sample_id = sample_id;
    seq.text = generate_text(rng, rate);
    seq.tokens = whitespace_tokenize(*seq.text, vocab);
    if (member) {
      Rng srng(derive_seed(spec, sample_id, "world.strength", 0, 0));
      memorize(seq.tokens, srng.gamma(cfg_.member_strength_shape, 1.0 / cfg_.member_strength_shape));
    }
    return seq;
  };

  samples_.clear();
  samples_.reserve(static_cast<std::size_t>(n_eval));
  for (int i = 0; i < n_eval; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "s%05d", i);
    const bool member = labels[static_cast<std::size_t>(i)] == Label::kMember;
    samples_.push_back({make_sequence(id, member), labels[static_cast<std::size_t>(i)]});
  }
  shots_.clear();
  for (int i = 0; i < cfg_.num_member_shots; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "shot-m%03d", i);
    shots_.push_back({id, *make_sequence(id, true).text, ShotRole::kMemberShot});
  }
  for (int i = 0; i < cfg_.num_nonmember_shots; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "shot-n%03d", i);
    shots_.push_back({id, *make_sequence(id, false).text, ShotRole::kNonMemberShot});
  }
}

std::string SyntheticWorld::generate_text(Rng& rng, double domain_rate) const {
  const auto length = static_cast<std::size_t>(cfg_.min_length) +
                      static_cast<std::size_t>(rng.below(
                          static_cast<std::uint64_t>(cfg_.max_length - cfg_.min_length + 1)));
  const auto& topic = topic_words_[static_cast<std::size_t>(rng.below(topic_words_.size()))];
  std::string text;
  for (std::size_t i = 0; i < length; ++i) {
    if (i > 0) text += ' ';
    if (!domain_words_.empty() && rng.uniform() < domain_rate) {
      text += lexicon_[domain_words_[static_cast<std::size_t>(rng.below(domain_words_.size()))]];
    } else {
      std::string w = lexicon_[topic[static_cast<std::size_t>(rng.below(topic.size()))]];
      if (rng.uniform() < cfg_.capitalization_rate) {
        w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
      }
      text += w;
    }
  }
  return text;
}

std::uint64_t SyntheticWorld::window_hash(std::span<const TokenId> tokens, std::size_t i) const {
  const auto w = static_cast<std::ptrdiff_t>(cfg_.memorization_window);
  std::uint64_t h = 0x6d656d6f72697a65ULL;
  for (std::ptrdiff_t off = -w; off <= w; ++off) {
    const auto j = static_cast<std::ptrdiff_t>(i) + off;
    const std::uint64_t v = (j < 0 || j >= static_cast<std::ptrdiff_t>(tokens.size()))
                                ? 0xffffffffULL
                                : static_cast<std::uint32_t>(tokens[static_cast<std::size_t>(j)]);
    h = hash_combine(h, v);
  }
  return h;
}

void SyntheticWorld::memorize(const std::vector<TokenId>& tokens, double strength) {
  if (cfg_.member_signal_delta <= 0.0) return;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto [it, inserted] = memorized_.emplace(window_hash(tokens, i), strength);
    if (!inserted) it->second = std::max(it->second, strength);
  }
}

std::shared_ptr<const Oracle> SyntheticWorld::target() const {
  return std::make_shared<SyntheticOracle>(shared_from_this(), ModelRole::kTarget);
}

std::shared_ptr<const Oracle> SyntheticWorld::reference() const {
  return std::make_shared<SyntheticOracle>(shared_from_this(), ModelRole::kReference);
}

bool SyntheticWorld::is_domain_token(TokenId id) const {
  return id > 0 && static_cast<std::size_t>(id) < domain_effect_.size() &&
         domain_effect_[static_cast<std::size_t>(id)] > 0.0;
}

double SyntheticWorld::domain_effect(TokenId id) const {
  return domain_effect_.at(static_cast<std::size_t>(id));
}

double SyntheticWorld::difficulty(TokenId id) const {
  return difficulty_.at(static_cast<std::size_t>(id));
}

OracleInfo SyntheticWorld::info(ModelRole role) const {
  OracleInfo info;
  info.vocab_size = static_cast<std::size_t>(cfg_.vocab_size);
  info.mask_token_id = cfg_.mask_token_id;
  info.max_sequence_length = static_cast<std::size_t>(cfg_.max_sequence_length);
  info.model_role = role;
  info.backend = Backend::kSynthetic;
  return info;
}

LossVector SyntheticWorld::losses(const LossQuery& query, ModelRole role) const {
  validate_query(query, info(role));
  const std::size_t length = query.tokens.size();
  std::vector<char> masked(length, 0);
  std::uint64_t mask_fp = kTagMask;
  for (auto p : query.masked_positions) {
    masked[static_cast<std::size_t>(p)] = 1;
    mask_fp = hash_combine(mask_fp, static_cast<std::uint64_t>(p));
  }
  const std::uint64_t config_hash = hash_combine(fingerprint(query.tokens), mask_fp);
  const std::uint64_t rtag = role_tag(role);
  const double shared_noise =
      cfg_.config_noise_sd * hash_to_normal(tagged(seed_ ^ rtag, kTagConfigNoise, config_hash));
  const bool use_memory = role == ModelRole::kTarget && !memorized_.empty();
  const double activated_effect =
      cfg_.activation_probability > 0.0 ? cfg_.member_signal_delta / cfg_.activation_probability : 0.0;

  std::vector<std::int32_t> positions(query.eval_positions.begin(), query.eval_positions.end());
  std::vector<double> values;
  values.reserve(positions.size());
  for (auto p : positions) {
    const auto i = static_cast<std::size_t>(p);
    const auto id = static_cast<std::size_t>(query.tokens[i]);
    const double noise = cfg_.noise_sd * hash_to_normal(tagged(seed_ ^ rtag, kTagTokenNoise,
                                                               hash_combine(config_hash, i)));
    double loss;
    if (masked[i]) {
      std::size_t neighbours = 0;
      std::size_t hidden = 0;
      for (std::ptrdiff_t off = -2; off <= 2; ++off) {
        const auto j = static_cast<std::ptrdiff_t>(i) + off;
        if (off == 0 || j < 0 || j >= static_cast<std::ptrdiff_t>(length)) continue;
        ++neighbours;
        hidden += masked[static_cast<std::size_t>(j)] ? 1 : 0;
      }
      const double ctx = neighbours ? static_cast<double>(hidden) / static_cast<double>(neighbours) : 0.0;
      loss = difficulty_[id] * (1.0 + cfg_.context_penalty * ctx);
      if (role == ModelRole::kTarget) {
        loss -= domain_effect_[id] + cfg_.domain_shift;
        if (use_memory) {
          auto it = memorized_.find(window_hash(query.tokens, i));
          if (it != memorized_.end() &&
              hash_to_unit(tagged(seed_, kTagActivation, hash_combine(config_hash, i))) <
                  cfg_.activation_probability) {
            loss -= activated_effect * it->second;
          }
        }
      }
      loss += shared_noise + noise;
    } else {
      loss = cfg_.visible_loss_fraction * difficulty_[id] + noise;
    }
    values.push_back(std::max(0.0, loss));
  }
  return LossVector(std::move(positions), std::move(values));
}

TokenSequence SyntheticOracle::tokenize(const std::string& text) const {
  TokenSequence seq;
  seq.text = text;
  seq.tokens = whitespace_tokenize(text, world_->info(role_).vocab_size);
  if (seq.tokens.empty()) throw Error(ErrorCode::kInvalidArgument, "text tokenizes to zero tokens");
  return seq;
}

LossVector SyntheticOracle::position_losses(const LossQuery& query) const {
  return world_->losses(query, role_);
}

SyntheticBundle build_synthetic_world(const SyntheticWorldConfig& cfg, std::uint64_t seed) {
  auto world = SyntheticWorld::build(cfg, seed);
  return {world, world->target(), world->reference(), world->samples()};
}

}  // namespace dlmaudit
