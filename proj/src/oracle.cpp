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

#include "dlmaudit/oracle.hpp"

#include <string>

namespace dlmaudit {

const char* role_name(ModelRole role) {
  return role == ModelRole::kTarget ? "target" : "reference";
}

ModelRole parse_role(std::string_view text) {
  if (text == "target") return ModelRole::kTarget;
  if (text == "reference") return ModelRole::kReference;
  throw Error(ErrorCode::kInvalidArgument, "unknown model role '" + std::string(text) + "'");
}

namespace {

void check_sorted_in_range(std::span<const std::int32_t> positions, std::size_t length,
                           const char* what) {
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto p = positions[i];
    if (p < 0 || static_cast<std::size_t>(p) >= length) {
      throw Error(ErrorCode::kOutOfRange, std::string(what) + " position " + std::to_string(p) +
                                              " outside sequence of length " +
                                              std::to_string(length));
    }
    if (i > 0 && positions[i] <= positions[i - 1]) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(what) + " positions must be sorted and unique");
    }
  }
}

}  // namespace

void validate_query(const LossQuery& query, const OracleInfo& info) {
  if (query.tokens.empty()) throw Error(ErrorCode::kInvalidArgument, "query has no tokens");
  if (query.tokens.size() > info.max_sequence_length) {
    throw Error(ErrorCode::kInvalidArgument,
                "query length " + std::to_string(query.tokens.size()) + " exceeds oracle limit " +
                    std::to_string(info.max_sequence_length));
  }
  for (TokenId t : query.tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= info.vocab_size) {
      throw Error(ErrorCode::kOutOfRange, "token id " + std::to_string(t) + " outside vocabulary");
    }
  }
  check_sorted_in_range(query.masked_positions, query.tokens.size(), "masked");
  check_sorted_in_range(query.eval_positions, query.tokens.size(), "eval");
}

std::vector<LossVector> Oracle::position_losses_batch(std::span<const LossQuery> queries) const {
  std::vector<LossVector> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(position_losses(q));
  return out;
}

LossVector CountingOracle::position_losses(const LossQuery& query) const {
  count_.fetch_add(1);
  return inner_->position_losses(query);
}

std::vector<LossVector> CountingOracle::position_losses_batch(
    std::span<const LossQuery> queries) const {
  count_.fetch_add(queries.size());
  return inner_->position_losses_batch(queries);
}

LossVector query_losses(const Oracle& oracle, std::span<const TokenId> tokens,
                        std::span<const std::int32_t> masked,
                        std::span<const std::int32_t> eval) {
  return oracle.position_losses(LossQuery{tokens, masked, eval});
}

}  // namespace dlmaudit
