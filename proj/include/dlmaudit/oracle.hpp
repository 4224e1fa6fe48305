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

// Grey-box masked-loss oracle: the only view of a model that the attacks get.

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dlmaudit/core.hpp"

namespace dlmaudit {

enum class ModelRole { kTarget, kReference };
enum class Backend { kSynthetic, kRemote };

const char* role_name(ModelRole role);
ModelRole parse_role(std::string_view text);

struct OracleInfo {
  std::size_t vocab_size = 0;
  TokenId mask_token_id = 0;
  std::size_t max_sequence_length = 0;
  ModelRole model_role = ModelRole::kTarget;
  Backend backend = Backend::kSynthetic;
};

struct LossQuery {
  std::span<const TokenId> tokens;
  std::span<const std::int32_t> masked_positions;  // sorted, unique
  std::span<const std::int32_t> eval_positions;    // sorted, unique; may include unmasked
};

/// Checks position ranges and ordering against the oracle limits.
void validate_query(const LossQuery& query, const OracleInfo& info);

/// One model behind the masked-loss protocol. Implementations are safe for
/// concurrent use.
class Oracle {
 public:
  virtual ~Oracle() = default;

  virtual OracleInfo info() const = 0;
  virtual TokenSequence tokenize(const std::string& text) const = 0;
  /// Losses at query.eval_positions after replacing masked_positions by the
  /// mask token, from a single forward pass.
  virtual LossVector position_losses(const LossQuery& query) const = 0;
  /// Results are returned in request order.
  virtual std::vector<LossVector> position_losses_batch(std::span<const LossQuery> queries) const;
};

/// Pass-through wrapper counting the loss queries issued through it.
class CountingOracle final : public Oracle {
 public:
  explicit CountingOracle(std::shared_ptr<const Oracle> inner) : inner_(std::move(inner)) {}

  OracleInfo info() const override { return inner_->info(); }
  TokenSequence tokenize(const std::string& text) const override { return inner_->tokenize(text); }
  LossVector position_losses(const LossQuery& query) const override;
  std::vector<LossVector> position_losses_batch(std::span<const LossQuery> queries) const override;

  std::uint64_t queries() const { return count_.load(); }
  void reset() { count_.store(0); }

 private:
  std::shared_ptr<const Oracle> inner_;
  mutable std::atomic<std::uint64_t> count_{0};
};

/// Convenience: build a query over owned vectors and run it.
LossVector query_losses(const Oracle& oracle, std::span<const TokenId> tokens,
                        std::span<const std::int32_t> masked,
                        std::span<const std::int32_t> eval);

}  // namespace dlmaudit
