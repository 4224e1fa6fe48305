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

#include "dlmaudit/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace dlmaudit {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kOutOfRange: return "out of range";
    case ErrorCode::kConfig: return "configuration error";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kTransport: return "transport error";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kMalformedResponse: return "malformed response";
    case ErrorCode::kServerError: return "server error";
    case ErrorCode::kHttpStatus: return "http error status";
    case ErrorCode::kPartialFailure: return "partial failure";
    case ErrorCode::kInternal: return "internal error";
  }
  return "unknown error";
}

TokenSequence TokenSequence::truncated(std::size_t limit) const {
  TokenSequence out = *this;
  if (out.tokens.size() > limit) out.tokens.resize(limit);
  return out;
}

void validate_sequence(const TokenSequence& seq, std::size_t vocab_size) {
  if (seq.tokens.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "sequence '" + seq.sample_id + "' is empty");
  }
  for (TokenId id : seq.tokens) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
      throw Error(ErrorCode::kOutOfRange, "token id " + std::to_string(id) +
                                              " outside vocabulary of size " +
                                              std::to_string(vocab_size));
    }
  }
}

MaskConfiguration::MaskConfiguration(std::vector<std::int32_t> positions,
                                     std::size_t sequence_length)
    : positions_(std::move(positions)), length_(sequence_length) {
  std::sort(positions_.begin(), positions_.end());
  if (std::adjacent_find(positions_.begin(), positions_.end()) != positions_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate masked position");
  }
  for (auto p : positions_) {
    if (p < 0 || static_cast<std::size_t>(p) >= length_) {
      throw Error(ErrorCode::kOutOfRange, "masked position " + std::to_string(p) +
                                              " outside sequence of length " +
                                              std::to_string(length_));
    }
  }
}

bool MaskConfiguration::contains(std::int32_t pos) const {
  return std::binary_search(positions_.begin(), positions_.end(), pos);
}

LossVector::LossVector(std::vector<std::int32_t> positions, std::vector<double> values)
    : positions_(std::move(positions)), values_(std::move(values)) {
  if (positions_.size() != values_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "loss vector size mismatch");
  }
  for (std::size_t i = 1; i < positions_.size(); ++i) {
    if (positions_[i] <= positions_[i - 1]) {
      throw Error(ErrorCode::kInvalidArgument, "loss vector positions must be sorted and unique");
    }
  }
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "loss values must be finite and non-negative");
    }
  }
}

double LossVector::at(std::int32_t pos) const {
  auto it = std::lower_bound(positions_.begin(), positions_.end(), pos);
  if (it == positions_.end() || *it != pos) {
    throw Error(ErrorCode::kInvalidArgument,
                "position " + std::to_string(pos) + " missing from loss vector");
  }
  return values_[static_cast<std::size_t>(it - positions_.begin())];
}

double LossVector::mean() const {
  if (values_.empty()) throw Error(ErrorCode::kInvalidArgument, "mean of empty loss vector");
  double sum = 0.0;
  for (double v : values_) sum += v;
  return sum / static_cast<double>(values_.size());
}

const char* label_name(Label label) {
  return label == Label::kMember ? "member" : "non-member";
}

std::optional<Label> parse_label(std::string_view text) {
  if (text == "member" || text == "1" || text == "true") return Label::kMember;
  if (text == "non-member" || text == "nonmember" || text == "0" || text == "false") {
    return Label::kNonMember;
  }
  return std::nullopt;
}

const char* shot_role_name(ShotRole role) {
  return role == ShotRole::kMemberShot ? "member_shot" : "nonmember_shot";
}

std::optional<ShotRole> parse_shot_role(std::string_view text) {
  if (text == "member_shot") return ShotRole::kMemberShot;
  if (text == "nonmember_shot") return ShotRole::kNonMemberShot;
  return std::nullopt;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (mix64(b) + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

std::uint64_t derive_seed(const SeedSpec& spec, std::string_view sample_id,
                          std::string_view purpose, std::int64_t rep, std::int64_t step) {
  std::string key = std::to_string(spec.global_seed);
  key += '|';
  key += sample_id;
  key += '|';
  key += purpose;
  key += '|';
  key += std::to_string(rep);
  key += '|';
  key += std::to_string(step);
  return mix64(fnv1a64(key));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::kInvalidArgument, "Rng::below with zero bound");
  // Rejection on the top of the range keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double Rng::normal() {
  if (spare_normal_) {
    double v = *spare_normal_;
    spare_normal_.reset();
    return v;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  return r * std::cos(theta);
}

double Rng::lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

double Rng::gamma(double shape, double scale) {
  if (shape <= 0.0 || scale <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "gamma parameters must be positive");
  }
  if (shape < 1.0) {
    // Boost to shape + 1 and correct with U^(1/shape).
    const double u = uniform();
    return gamma(shape + 1.0, scale) * std::pow(u > 0.0 ? u : 0x1.0p-53, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
  }
}

std::vector<std::int32_t> Rng::sample_without_replacement(std::size_t n, std::size_t k) {
  if (k > n) throw Error(ErrorCode::kInvalidArgument, "cannot sample more items than available");
  std::vector<std::int32_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  // Partial Fisher-Yates: the first k slots end up holding the sample.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<std::int32_t> Rng::sample_from(std::span<const std::int32_t> pool, std::size_t k) {
  auto idx = sample_without_replacement(pool.size(), k);
  for (auto& i : idx) i = pool[static_cast<std::size_t>(i)];
  std::sort(idx.begin(), idx.end());
  return idx;
}

double hash_to_unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

double hash_to_normal(std::uint64_t h) {
  const double u1 = (static_cast<double>(mix64(h) >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = hash_to_unit(mix64(h ^ 0xa5a5a5a5a5a5a5a5ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t fingerprint(std::span<const TokenId> tokens) {
  std::uint64_t h = 0x243f6a8885a308d3ULL ^ tokens.size();
  for (TokenId t : tokens) h = hash_combine(h, static_cast<std::uint64_t>(static_cast<std::uint32_t>(t)));
  return h;
}

}  // namespace dlmaudit
