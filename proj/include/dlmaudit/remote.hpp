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

// HTTP/JSON client for the masked-loss wire protocol:
//
//   GET  /v1/info          -> {vocab_size, mask_token_id, max_sequence_length, models}
//   POST /v1/tokenize      {text} -> {tokens}
//   POST /v1/losses        {model, tokens, masked_positions, eval_positions} -> {losses}
//   POST /v1/losses_batch  {model, queries:[...]} -> {results:[{losses}]}
//
// Positions are 0-based; losses[i] belongs to eval_positions[i].

#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>

#include "dlmaudit/oracle.hpp"

namespace dlmaudit {

struct RemoteOptions {
  int timeout_ms = 30000;
  int max_retries = 2;       // extra attempts after a transport failure or timeout
  int max_in_flight = 8;
  int batch_size = 32;
};

class RemoteOracle final : public Oracle {
 public:
  /// `url` is scheme://host:port with an optional path prefix.
  RemoteOracle(std::string url, ModelRole role, RemoteOptions options = {});
  ~RemoteOracle() override;

  OracleInfo info() const override;
  TokenSequence tokenize(const std::string& text) const override;
  LossVector position_losses(const LossQuery& query) const override;
  std::vector<LossVector> position_losses_batch(std::span<const LossQuery> queries) const override;

  const std::string& url() const { return url_; }

 private:
  std::string post(const std::string& path, const std::string& body) const;
  std::string get(const std::string& path) const;
  template <class Call>
  std::string request(const std::string& what, Call&& call) const;

  std::string url_;
  std::string host_;
  std::string prefix_;
  ModelRole role_;
  RemoteOptions options_;
  mutable std::counting_semaphore<> in_flight_;
  mutable std::mutex info_mutex_;
  mutable std::optional<OracleInfo> info_;
};

}  // namespace dlmaudit
