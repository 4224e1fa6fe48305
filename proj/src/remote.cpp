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

#include "dlmaudit/remote.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace dlmaudit {

using nlohmann::json;

namespace {

json parse_body(const std::string& body, const std::string& what) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedResponse, what + ": response is not JSON: " + e.what());
  }
}

json query_json(const LossQuery& q) {
  return json{{"tokens", std::vector<TokenId>(q.tokens.begin(), q.tokens.end())},
              {"masked_positions",
               std::vector<std::int32_t>(q.masked_positions.begin(), q.masked_positions.end())},
              {"eval_positions",
               std::vector<std::int32_t>(q.eval_positions.begin(), q.eval_positions.end())}};
}

LossVector parse_losses(const json& obj, const LossQuery& q, const std::string& what) {
  if (!obj.is_object() || !obj.contains("losses") || !obj["losses"].is_array()) {
    throw Error(ErrorCode::kMalformedResponse, what + ": missing 'losses' array");
  }
  const auto& arr = obj["losses"];
  if (arr.size() != q.eval_positions.size()) {
    throw Error(ErrorCode::kMalformedResponse,
                what + ": expected " + std::to_string(q.eval_positions.size()) + " losses, got " +
                    std::to_string(arr.size()));
  }
  std::vector<double> values;
  values.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number()) throw Error(ErrorCode::kMalformedResponse, what + ": non-numeric loss");
    const double x = v.get<double>();
    if (!std::isfinite(x) || x < 0.0) {
      throw Error(ErrorCode::kMalformedResponse, what + ": loss not finite and non-negative");
    }
    values.push_back(x);
  }
  return LossVector(std::vector<std::int32_t>(q.eval_positions.begin(), q.eval_positions.end()),
                    std::move(values));
}

}  // namespace

RemoteOracle::RemoteOracle(std::string url, ModelRole role, RemoteOptions options)
    : url_(std::move(url)),
      role_(role),
      options_(options),
      in_flight_(std::max(1, options.max_in_flight)) {
  if (url_.empty()) throw Error(ErrorCode::kConfig, "remote oracle needs a URL");
  const auto scheme = url_.find("://");
  const auto path_start = url_.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  host_ = path_start == std::string::npos ? url_ : url_.substr(0, path_start);
  prefix_ = path_start == std::string::npos ? "" : url_.substr(path_start);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  if (scheme == std::string::npos) host_ = "http://" + host_;
  if (options_.batch_size < 1) options_.batch_size = 1;
  if (options_.max_retries < 0) options_.max_retries = 0;
}

RemoteOracle::~RemoteOracle() = default;

template <class Call>
std::string RemoteOracle::request(const std::string& what, Call&& call) const {
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  ErrorCode last_code = ErrorCode::kTransport;
  std::string last_message;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    httplib::Client client(host_);
    const auto timeout = std::chrono::milliseconds(options_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    const auto start = std::chrono::steady_clock::now();
    httplib::Result res = call(client);
    if (res) {
      const int status = res->status;
      if (status >= 500) {
        throw Error(ErrorCode::kServerError,
                    what + ": server error " + std::to_string(status) + ": " + res->body);
      }
      if (status < 200 || status >= 300) {
        throw Error(ErrorCode::kHttpStatus,
                    what + ": HTTP status " + std::to_string(status) + ": " + res->body);
      }
      return res->body;
    }
    const auto elapsed = std::chrono::steady_clock::now() - start;
    const auto err = res.error();
    const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                           (err == httplib::Error::Read && elapsed >= timeout * 9 / 10);
    last_code = timed_out ? ErrorCode::kTimeout : ErrorCode::kTransport;
    last_message = what + ": " + httplib::to_string(err) + " (attempt " +
                   std::to_string(attempt + 1) + ")";
    if (attempt < options_.max_retries) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50 * (attempt + 1)));
    }
  }
  throw Error(last_code, last_message);
}

std::string RemoteOracle::post(const std::string& path, const std::string& body) const {
  const std::string full = prefix_ + path;
  return request("POST " + full, [&](httplib::Client& c) {
    return c.Post(full, body, "application/json");
  });
}

std::string RemoteOracle::get(const std::string& path) const {
  const std::string full = prefix_ + path;
  return request("GET " + full, [&](httplib::Client& c) { return c.Get(full); });
}

OracleInfo RemoteOracle::info() const {
  std::lock_guard lock(info_mutex_);
  if (info_) return *info_;
  const json j = parse_body(get("/v1/info"), "/v1/info");
  try {
    OracleInfo out;
    out.vocab_size = j.at("vocab_size").get<std::size_t>();
    out.mask_token_id = j.at("mask_token_id").get<TokenId>();
    out.max_sequence_length = j.at("max_sequence_length").get<std::size_t>();
    out.model_role = role_;
    out.backend = Backend::kRemote;
    const auto models = j.at("models").get<std::vector<std::string>>();
    if (std::find(models.begin(), models.end(), role_name(role_)) == models.end()) {
      throw Error(ErrorCode::kMalformedResponse,
                  std::string("/v1/info: server does not serve the ") + role_name(role_) + " model");
    }
    if (out.mask_token_id < 0 || static_cast<std::size_t>(out.mask_token_id) >= out.vocab_size) {
      throw Error(ErrorCode::kMalformedResponse, "/v1/info: mask_token_id outside vocabulary");
    }
    info_ = out;
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedResponse, std::string("/v1/info: ") + e.what());
  }
}

TokenSequence RemoteOracle::tokenize(const std::string& text) const {
  if (text.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot tokenize empty text");
  const json j = parse_body(post("/v1/tokenize", json{{"text", text}}.dump()), "/v1/tokenize");
  TokenSequence seq;
  seq.text = text;
  try {
    seq.tokens = j.at("tokens").get<std::vector<TokenId>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedResponse, std::string("/v1/tokenize: ") + e.what());
  }
  if (seq.tokens.empty()) throw Error(ErrorCode::kInvalidArgument, "text tokenizes to zero tokens");
  return seq;
}

LossVector RemoteOracle::position_losses(const LossQuery& query) const {
  validate_query(query, info());
  json body = query_json(query);
  body["model"] = role_name(role_);
  return parse_losses(parse_body(post("/v1/losses", body.dump()), "/v1/losses"), query,
                      "/v1/losses");
}

std::vector<LossVector> RemoteOracle::position_losses_batch(
    std::span<const LossQuery> queries) const {
  const auto inf = info();
  for (const auto& q : queries) validate_query(q, inf);
  std::vector<LossVector> out;
  out.reserve(queries.size());
  const auto chunk = static_cast<std::size_t>(options_.batch_size);
  for (std::size_t start = 0; start < queries.size(); start += chunk) {
    const auto part = queries.subspan(start, std::min(chunk, queries.size() - start));
    json body{{"model", role_name(role_)}, {"queries", json::array()}};
    for (const auto& q : part) body["queries"].push_back(query_json(q));
    const json j = parse_body(post("/v1/losses_batch", body.dump()), "/v1/losses_batch");
    if (!j.is_object() || !j.contains("results") || !j["results"].is_array() ||
        j["results"].size() != part.size()) {
      throw Error(ErrorCode::kMalformedResponse,
                  "/v1/losses_batch: results missing or of the wrong length");
    }
    for (std::size_t i = 0; i < part.size(); ++i) {
      out.push_back(parse_losses(j["results"][i], part[i], "/v1/losses_batch"));
    }
  }
  return out;
}

}  // namespace dlmaudit
