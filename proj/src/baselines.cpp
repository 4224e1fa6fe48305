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

#include "dlmaudit/baselines.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "dlmaudit/schedule.hpp"

namespace dlmaudit {
namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::kConfig, message);
}

bool open_fraction(double f) { return f > 0.0 && f < 1.0; }

TokenSequence prepared(const TokenSequence& sample) {
  TokenSequence seq = sample.truncated();
  if (seq.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "sample '" + seq.sample_id + "' needs at least 2 tokens for masked probing");
  }
  return seq;
}

const std::string& require_text(const TokenSequence& sample) {
  if (!sample.text || sample.text->empty()) {
    throw Error(ErrorCode::kInvalidArgument, "sample '" + sample.sample_id + "' has no text");
  }
  return *sample.text;
}

std::vector<MaskConfiguration> draw_masks(std::size_t length, double fraction, int draws,
                                          const SeedSpec& seed, std::string_view sample_id,
                                          std::string_view purpose) {
  std::vector<MaskConfiguration> masks;
  masks.reserve(static_cast<std::size_t>(draws));
  const auto k = mask_count(length, fraction);
  for (int d = 0; d < draws; ++d) {
    masks.push_back(sample_mask(length, k, derive_seed(seed, sample_id, purpose, d, 0)));
  }
  return masks;
}

/// One batched call: loss vectors at each mask, the mask itself being evaluated.
std::vector<LossVector> masked_losses(const Oracle& oracle, std::span<const TokenId> tokens,
                                      std::span<const MaskConfiguration> masks) {
  std::vector<LossQuery> queries;
  queries.reserve(masks.size());
  for (const auto& m : masks) queries.push_back({tokens, m.positions(), m.positions()});
  return oracle.position_losses_batch(queries);
}

double mean_of_means(std::span<const LossVector> losses) {
  double total = 0.0;
  for (const auto& l : losses) total += l.mean();
  return total / static_cast<double>(losses.size());
}

double mean(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::kInvalidArgument, "mean of empty list");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<MaskConfiguration> shift_masks(std::span<const MaskConfiguration> masks,
                                           std::size_t offset, std::size_t length) {
  std::vector<MaskConfiguration> out;
  out.reserve(masks.size());
  for (const auto& m : masks) {
    std::vector<std::int32_t> pos = m.positions();
    for (auto& p : pos) p += static_cast<std::int32_t>(offset);
    out.emplace_back(std::move(pos), length);
  }
  return out;
}

/// Concatenates the chosen shots in front of the sample, dropping prefix
/// tokens from the left when the combined sequence exceeds the model limit.
std::vector<TokenId> with_prefix(std::span<const ShotPools::Entry> pool,
                                 std::span<const std::int32_t> chosen,
                                 std::span<const TokenId> sample, std::size_t max_length) {
  std::vector<TokenId> prefix;
  for (auto i : chosen) {
    const auto& t = pool[static_cast<std::size_t>(i)].tokens;
    prefix.insert(prefix.end(), t.begin(), t.end());
  }
  const std::size_t room = max_length > sample.size() ? max_length - sample.size() : 0;
  if (prefix.size() > room) {
    prefix.erase(prefix.begin(), prefix.begin() + static_cast<std::ptrdiff_t>(prefix.size() - room));
  }
  prefix.insert(prefix.end(), sample.begin(), sample.end());
  return prefix;
}

/// Mean over draws of the masked loss of the sample's positions when preceded by the prefix.
double prefixed_loss(const Oracle& target, std::span<const ShotPools::Entry> pool,
                     std::span<const std::int32_t> chosen, const TokenSequence& seq,
                     std::span<const MaskConfiguration> masks) {
  const auto combined = with_prefix(pool, chosen, seq.tokens, target.info().max_sequence_length);
  const auto shifted = shift_masks(masks, combined.size() - seq.size(), combined.size());
  return mean_of_means(masked_losses(target, combined, shifted));
}

double average_length(std::span<const ShotPools::Entry> pool,
                      std::span<const std::int32_t> chosen) {
  double total = 0.0;
  for (auto i : chosen) total += static_cast<double>(pool[static_cast<std::size_t>(i)].tokens.size());
  return total / static_cast<double>(chosen.size());
}

bool lengths_match(double a, double b) {
  const double hi = std::max(a, b);
  return hi == 0.0 || std::fabs(a - b) / hi <= 0.10;
}

std::vector<double> token_probabilities(const Oracle& target, const TokenSequence& seq,
                                        const BaselineConfig& cfg, const SeedSpec& seed,
                                        std::string_view purpose) {
  const auto masks =
      draw_masks(seq.size(), cfg.mask_fraction, cfg.mc_samples, seed, seq.sample_id, purpose);
  const auto losses = masked_losses(target, seq.tokens, masks);
  return averaged_token_probabilities(losses, seq.size());
}

}  // namespace

void BaselineConfig::validate() const {
  require(mc_samples >= 1, "mc_samples must be >= 1");
  require(open_fraction(mask_fraction), "mask_fraction must lie in (0,1)");
  require(open_fraction(min_k_fraction), "min_k_fraction must lie in (0,1)");
  require(zlib_level >= 0 && zlib_level <= 9, "zlib_level must lie in [0,9]");
  require(recall_shots >= 1, "recall_shots must be >= 1");
  require(!secmi_ratios.empty(), "secmi_ratios must not be empty");
  for (double r : secmi_ratios) require(open_fraction(r), "secmi_ratios must lie in (0,1)");
  require(open_fraction(pia_mask_fraction), "pia_mask_fraction must lie in (0,1)");
  require(neighbor.num_neighbors >= 1, "neighbor.num_neighbors must be >= 1");
  require(neighbor.perturb_fraction >= 0.0 && neighbor.perturb_fraction < 1.0,
          "neighbor.perturb_fraction must lie in [0,1)");
  bows.validate();
}

ShotPools ShotPools::prepare(std::span<const Shot> shots, const Oracle& tokenizer) {
  ShotPools pools;
  for (const auto& s : shots) {
    Entry e{s.sample_id, tokenizer.tokenize(s.text).tokens};
    (s.role == ShotRole::kMemberShot ? pools.member : pools.nonmember).push_back(std::move(e));
  }
  auto by_id = [](const Entry& a, const Entry& b) { return a.sample_id < b.sample_id; };
  std::sort(pools.member.begin(), pools.member.end(), by_id);
  std::sort(pools.nonmember.begin(), pools.nonmember.end(), by_id);
  return pools;
}

double loss_attack(const TokenSequence& sample, const Oracle& target, const BaselineConfig& cfg,
                   const SeedSpec& seed) {
  const auto seq = prepared(sample);
  const auto masks =
      draw_masks(seq.size(), cfg.mask_fraction, cfg.mc_samples, seed, seq.sample_id, "loss");
  return -mean_of_means(masked_losses(target, seq.tokens, masks));
}

std::size_t zlib_compressed_size(std::string_view bytes, int level) {
  uLongf size = compressBound(static_cast<uLong>(bytes.size()));
  std::vector<Bytef> buffer(size);
  const int rc = compress2(buffer.data(), &size, reinterpret_cast<const Bytef*>(bytes.data()),
                           static_cast<uLong>(bytes.size()), level);
  if (rc != Z_OK) throw Error(ErrorCode::kInternal, "zlib compress2 failed: " + std::to_string(rc));
  return static_cast<std::size_t>(size);
}

double zlib_attack(const TokenSequence& sample, const Oracle& target, const BaselineConfig& cfg,
                   const SeedSpec& seed) {
  const auto& text = require_text(sample);
  const auto seq = prepared(sample);
  const auto masks =
      draw_masks(seq.size(), cfg.mask_fraction, cfg.mc_samples, seed, seq.sample_id, "zlib");
  const double loss = mean_of_means(masked_losses(target, seq.tokens, masks));
  return -(loss / static_cast<double>(zlib_compressed_size(text, cfg.zlib_level)));
}

double lowercase_attack(const TokenSequence& sample, const Oracle& target,
                        const BaselineConfig& cfg, const SeedSpec& seed) {
  std::string lowered = require_text(sample);
  for (auto& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const auto seq = prepared(sample);
  TokenSequence low = target.tokenize(lowered);
  low.sample_id = seq.sample_id;
  low = prepared(low);

  // Both variants use the same seed per draw, so equal lengths give equal masks.
  const auto orig_masks =
      draw_masks(seq.size(), cfg.mask_fraction, cfg.mc_samples, seed, seq.sample_id, "lowercase");
  const auto low_masks =
      draw_masks(low.size(), cfg.mask_fraction, cfg.mc_samples, seed, seq.sample_id, "lowercase");
  const double original = mean_of_means(masked_losses(target, seq.tokens, orig_masks));
  const double lowercased = mean_of_means(masked_losses(target, low.tokens, low_masks));
  return lowercased - original;
}

double neighbor_attack(const TokenSequence& sample, const Oracle& target,
                       const BaselineConfig& cfg, const SeedSpec& seed) {
  const auto seq = prepared(sample);
  const auto info = target.info();
  const std::size_t length = seq.size();
  const auto& nc = cfg.neighbor;

  std::size_t replaced = 0;
  if (nc.perturb_fraction > 0.0) replaced = mask_count(length, nc.perturb_fraction);
  std::vector<std::vector<TokenId>> neighbours;
  for (int j = 0; j < nc.num_neighbors; ++j) {
    auto tokens = seq.tokens;
    Rng rng(derive_seed(seed, seq.sample_id, "neighbor.perturb", 0, j));
    for (auto p : rng.sample_without_replacement(length, replaced)) {
      auto id = static_cast<TokenId>(rng.below(info.vocab_size - 1));
      if (id >= info.mask_token_id) ++id;
      tokens[static_cast<std::size_t>(p)] = id;
    }
    neighbours.push_back(std::move(tokens));
  }

  const auto masks =
      draw_masks(length, cfg.mask_fraction, cfg.mc_samples, seed, seq.sample_id, "neighbor");
  std::vector<LossQuery> queries;
  for (const auto& m : masks) {
    queries.push_back({seq.tokens, m.positions(), m.positions()});
    for (const auto& n : neighbours) queries.push_back({n, m.positions(), m.positions()});
  }
  const auto losses = target.position_losses_batch(queries);
  const std::size_t stride = neighbours.size() + 1;
  double total = 0.0;
  for (std::size_t d = 0; d < masks.size(); ++d) {
    const double own = losses[d * stride].mean();
    double around = 0.0;
    for (std::size_t j = 1; j < stride; ++j) around += losses[d * stride + j].mean();
    total += around / static_cast<double>(neighbours.size()) - own;
  }
  return total / static_cast<double>(masks.size());
}

std::vector<double> averaged_token_probabilities(std::span<const LossVector> draws,
                                                 std::size_t length) {
  std::vector<double> sum(length, 0.0);
  std::vector<int> seen(length, 0);
  for (const auto& lv : draws) {
    for (std::size_t i = 0; i < lv.size(); ++i) {
      const auto p = static_cast<std::size_t>(lv.positions()[i]);
      if (p >= length) throw Error(ErrorCode::kOutOfRange, "loss position beyond sequence");
      sum[p] += std::exp(-lv.values()[i]);
      ++seen[p];
    }
  }
  std::vector<double> out;
  for (std::size_t p = 0; p < length; ++p) {
    if (seen[p] > 0) out.push_back(sum[p] / seen[p]);
  }
  return out;
}

double min_k_sum(std::span<const double> values, double fraction) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "min-k over empty list");
  std::vector<double> v(values.begin(), values.end());
  const auto k = mask_count(v.size(), fraction);
  std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return std::accumulate(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
}

double min_k_attack(const TokenSequence& sample, const Oracle& target, const BaselineConfig& cfg,
                    const SeedSpec& seed) {
  const auto seq = prepared(sample);
  return min_k_sum(token_probabilities(target, seq, cfg, seed, "min_k"), cfg.min_k_fraction);
}

double min_k_pp_attack(const TokenSequence& sample, const Oracle& target,
                       const BaselineConfig& cfg, const SeedSpec& seed) {
  const auto seq = prepared(sample);
  auto values = token_probabilities(target, seq, cfg, seed, "min_k_pp");
  for (auto& v : values) v = std::log(v + kLogEpsilon);
  return min_k_sum(values, cfg.min_k_fraction);
}

std::vector<std::int32_t> select_shots(std::size_t pool_size, std::size_t k,
                                       const SeedSpec& seed) {
  if (pool_size < k) {
    throw Error(ErrorCode::kConfig, "shot pool holds " + std::to_string(pool_size) +
                                        " texts, need " + std::to_string(k));
  }
  Rng rng(derive_seed(seed, "", "recall.shots", 0, 0));
  return rng.sample_without_replacement(pool_size, k);
}

double recall_attack(const TokenSequence& sample, const Oracle& target, const ShotPools& shots,
                     const BaselineConfig& cfg, const SeedSpec& seed) {
  const auto seq = prepared(sample);
  const auto chosen =
      select_shots(shots.nonmember.size(), static_cast<std::size_t>(cfg.recall_shots), seed);
  const auto masks =
      draw_masks(seq.size(), cfg.mask_fraction, cfg.mc_samples, seed, seq.sample_id, "recall");
  const double base = mean_of_means(masked_losses(target, seq.tokens, masks));
  const double with = prefixed_loss(target, shots.nonmember, chosen, seq, masks);
  if (!(with > 0.0)) throw Error(ErrorCode::kInvalidArgument, "prefixed loss is zero");
  return base / with;
}

double con_recall_attack(const TokenSequence& sample, const Oracle& target,
                         const ShotPools& shots, const BaselineConfig& cfg, const SeedSpec& seed) {
  const auto seq = prepared(sample);
  const auto k = static_cast<std::size_t>(cfg.recall_shots);
  const auto non_chosen = select_shots(shots.nonmember.size(), k, seed);
  auto mem_chosen = select_shots(shots.member.size(), k, seed);
  const double target_len = average_length(shots.nonmember, non_chosen);
  if (!lengths_match(average_length(shots.member, mem_chosen), target_len)) {
    // Fall back to the member shots closest in length to the non-member prefix.
    std::vector<std::int32_t> order(shots.member.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
      const auto la = static_cast<double>(shots.member[static_cast<std::size_t>(a)].tokens.size());
      const auto lb = static_cast<double>(shots.member[static_cast<std::size_t>(b)].tokens.size());
      return std::fabs(la - target_len) < std::fabs(lb - target_len);
    });
    mem_chosen.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(mem_chosen.begin(), mem_chosen.end());
    if (!lengths_match(average_length(shots.member, mem_chosen), target_len)) {
      throw Error(ErrorCode::kConfig,
                  "member and non-member shot pools differ by more than 10% in average length");
    }
  }
  const auto masks = draw_masks(seq.size(), cfg.mask_fraction, cfg.mc_samples, seed,
                                seq.sample_id, "con_recall");
  const double base = mean_of_means(masked_losses(target, seq.tokens, masks));
  if (!(base > 0.0)) throw Error(ErrorCode::kInvalidArgument, "baseline loss is zero");
  const double non = prefixed_loss(target, shots.nonmember, non_chosen, seq, masks);
  const double mem = prefixed_loss(target, shots.member, mem_chosen, seq, masks);
  return (non - mem) / base;
}

double ratio_attack(const TokenSequence& sample, const Oracle& target, const Oracle& reference,
                    const BaselineConfig& cfg, const SeedSpec& seed) {
  const auto seq = prepared(sample);
  const auto masks =
      draw_masks(seq.size(), cfg.mask_fraction, cfg.mc_samples, seed, seq.sample_id, "ratio");
  const auto t = masked_losses(target, seq.tokens, masks);
  const auto r = masked_losses(reference, seq.tokens, masks);
  double total = 0.0;
  for (std::size_t d = 0; d < masks.size(); ++d) {
    const double lt = t[d].mean();
    if (!(lt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "target loss is zero");
    total += r[d].mean() / lt;
  }
  return total / static_cast<double>(masks.size());
}

double secmi_combine(std::span<const double> step_losses) {
  if (step_losses.empty()) throw Error(ErrorCode::kInvalidArgument, "no SecMI steps");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t s = 0; s < step_losses.size(); ++s) {
    const double w = 1.0 / static_cast<double>(s + 1);
    num += w * step_losses[s];
    den += w;
  }
  return -num / den;
}

double secmi_attack(const TokenSequence& sample, const Oracle& target,
                    const BaselineConfig& cfg) {
  const auto seq = prepared(sample);
  const auto content = hash_combine(fnv1a64("secmi"), fingerprint(seq.tokens));
  std::vector<MaskConfiguration> masks;
  for (std::size_t s = 0; s < cfg.secmi_ratios.size(); ++s) {
    masks.push_back(sample_mask(seq.size(), mask_count(seq.size(), cfg.secmi_ratios[s]),
                                hash_combine(content, s)));
  }
  const auto losses = masked_losses(target, seq.tokens, masks);
  std::vector<double> means;
  for (const auto& l : losses) means.push_back(l.mean());
  return secmi_combine(means);
}

double pia_combine(std::span<const double> masked, std::span<const double> unmasked) {
  return -(mean(masked) - mean(unmasked));
}

double pia_attack(const TokenSequence& sample, const Oracle& target, const BaselineConfig& cfg) {
  const auto seq = prepared(sample);
  const std::uint64_t content =
      sample.text ? fnv1a64(*sample.text) : fingerprint(seq.tokens);
  const auto mask = sample_mask(seq.size(), mask_count(seq.size(), cfg.pia_mask_fraction),
                                hash_combine(fnv1a64("pia"), content));
  const std::vector<LossQuery> queries = {
      {seq.tokens, mask.positions(), mask.positions()},
      {seq.tokens, {}, mask.positions()},
  };
  const auto losses = target.position_losses_batch(queries);
  return pia_combine(losses[0].values(), losses[1].values());
}

}  // namespace dlmaudit
