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

// Shared domain types, error taxonomy and the deterministic seeding contract.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dlmaudit {

/// Error categories. The numeric values are mirrored by the C API status codes.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kOutOfRange = 2,
  kConfig = 3,
  kIo = 4,
  kTransport = 5,
  kTimeout = 6,
  kMalformedResponse = 7,
  kServerError = 8,
  kHttpStatus = 9,
  kPartialFailure = 10,
  kInternal = 11,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Hard truncation limit applied by every attack before scoring.
inline constexpr std::size_t kMaxAuditLength = 512;

using TokenId = std::int32_t;

struct TokenSequence {
  std::vector<TokenId> tokens;
  std::optional<std::string> text;
  std::string sample_id;

  std::size_t size() const { return tokens.size(); }
  /// Copy holding at most `limit` leading tokens. Never pads.
  TokenSequence truncated(std::size_t limit = kMaxAuditLength) const;
};

/// Checks L >= 1 and every id < vocab_size.
void validate_sequence(const TokenSequence& seq, std::size_t vocab_size);

/// Sorted, duplicate-free set of 0-based positions inside a sequence of
/// length `sequence_length`.
class MaskConfiguration {
 public:
  MaskConfiguration() = default;
  /// Sorts and validates. Throws kOutOfRange / kInvalidArgument.
  MaskConfiguration(std::vector<std::int32_t> positions, std::size_t sequence_length);

  const std::vector<std::int32_t>& positions() const { return positions_; }
  std::size_t sequence_length() const { return length_; }
  std::size_t size() const { return positions_.size(); }
  bool contains(std::int32_t pos) const;

 private:
  std::vector<std::int32_t> positions_;
  std::size_t length_ = 0;
};

/// Per-position negative log-likelihoods in nats, keyed by position.
class LossVector {
 public:
  LossVector() = default;
  /// `positions` must be sorted and unique; values finite and >= 0.
  LossVector(std::vector<std::int32_t> positions, std::vector<double> values);

  const std::vector<std::int32_t>& positions() const { return positions_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return positions_.size(); }
  bool empty() const { return positions_.empty(); }
  /// Throws kInvalidArgument when `pos` is not a key.
  double at(std::int32_t pos) const;
  double mean() const;

 private:
  std::vector<std::int32_t> positions_;
  std::vector<double> values_;
};

struct StepEvidence {
  int step = 0;
  double density = 0.0;
  std::size_t mask_count = 0;
  std::vector<double> deltas;
};

struct EvidenceCollection {
  std::string sample_id;
  std::vector<StepEvidence> steps;
};

enum class Label { kMember, kNonMember };

const char* label_name(Label label);
std::optional<Label> parse_label(std::string_view text);

enum class ShotRole { kMemberShot, kNonMemberShot };

struct Shot {
  std::string sample_id;
  std::string text;
  ShotRole role = ShotRole::kNonMemberShot;
};

/// Prefix text for the shot-based attacks.
const char* shot_role_name(ShotRole role);
std::optional<ShotRole> parse_shot_role(std::string_view text);

struct MembershipScore {
  std::string sample_id;
  std::string attack_name;
  double score = 0.0;
  std::optional<Label> label;
};

struct SeedSpec {
  std::uint64_t global_seed = 42;
};

/// FNV-1a over bytes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);
/// Order-sensitive combination of two 64-bit values.
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

/// Seed for one random stream. The tuple is rendered as the UTF-8 string
/// "<global_seed>|<sample_id>|<purpose>|<rep>|<step>", hashed with FNV-1a 64
/// and passed through the SplitMix64 finalizer.
std::uint64_t derive_seed(const SeedSpec& spec, std::string_view sample_id,
                          std::string_view purpose, std::int64_t rep, std::int64_t step);

/// Portable random stream. The engine is std::mt19937_64, whose output sequence
/// is fixed by the standard; the distributions are implemented here because the
/// standard library ones are not bit-reproducible across implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, bound) without modulo bias. bound > 0.
  std::uint64_t below(std::uint64_t bound);
  double normal();
  double lognormal(double mu, double sigma);
  /// Marsaglia-Tsang; shape > 0, scale > 0.
  double gamma(double shape, double scale);
  /// k distinct values from [0, n), sorted ascending. k <= n.
  std::vector<std::int32_t> sample_without_replacement(std::size_t n, std::size_t k);
  /// k distinct elements of `pool`, sorted ascending. k <= pool.size().
  std::vector<std::int32_t> sample_from(std::span<const std::int32_t> pool, std::size_t k);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

/// Uniform [0,1) from a hash value (53 high bits).
double hash_to_unit(std::uint64_t h);
/// Standard normal from two hash-derived uniforms (Box-Muller).
double hash_to_normal(std::uint64_t h);

/// 64-bit fingerprint of a token sequence.
std::uint64_t fingerprint(std::span<const TokenId> tokens);

}  // namespace dlmaudit
