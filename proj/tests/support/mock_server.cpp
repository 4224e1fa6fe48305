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

#include "mock_server.hpp"

#include <chrono>
#include <set>

#include <httplib.h>
#include <json.hpp>

namespace dlmaudit::testing {
namespace {

using nlohmann::json;

bool only_keys(const json& j, const std::set<std::string>& allowed) {
  if (!j.is_object()) return false;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) return false;
  }
  return true;
}

struct Query {
  std::vector<TokenId> tokens;
  std::vector<std::int32_t> masked;
  std::vector<std::int32_t> eval;
};

Query parse_query(const json& j) {
  if (!only_keys(j, {"model", "tokens", "masked_positions", "eval_positions"})) {
    throw std::invalid_argument("unknown field");
  }
  return {j.at("tokens").get<std::vector<TokenId>>(),
          j.at("masked_positions").get<std::vector<std::int32_t>>(),
          j.at("eval_positions").get<std::vector<std::int32_t>>()};
}

}  // namespace

MockModelServer::MockModelServer(std::shared_ptr<const SyntheticWorld> world)
    : world_(std::move(world)), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;

  auto fault_reply = [this](Fault f, httplib::Response& res) {
    switch (f) {
      case Fault::kServerError:
        res.status = 500;
        res.set_content(R"({"error":"model failure"})", "application/json");
        return true;
      case Fault::kNotFound:
        res.status = 404;
        res.set_content("not found", "text/plain");
        return true;
      case Fault::kNotJson:
        res.status = 200;
        res.set_content("<html>oops</html>", "text/html");
        return true;
      case Fault::kSlow:
        std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_.load()));
        return false;
      default:
        return false;
    }
  };

  auto role_of = [](const json& j) {
    return parse_role(j.at("model").get<std::string>());
  };

  auto loss_json = [this](const LossVector& lv, Fault f) {
    if (f == Fault::kMissingLosses) return json{{"values", lv.values()}};
    std::vector<double> values = lv.values();
    if (f == Fault::kWrongCount) values.push_back(1.0);
    if (f == Fault::kNegativeLoss && !values.empty()) values[0] = -1.0;
    return json{{"losses", values}};
  };

  s.Get("/v1/info", [=, this](const httplib::Request&, httplib::Response& res) {
    ++total_requests_;
    const Fault f = current_fault();
    if (fault_reply(f, res)) return;
    const auto info = world_->info(ModelRole::kTarget);
    json j = {{"vocab_size", info.vocab_size},
              {"mask_token_id", info.mask_token_id},
              {"max_sequence_length", info.max_sequence_length},
              {"models", json::parse(models_json_)}};
    res.set_content(j.dump(), "application/json");
  });

  s.Post("/v1/tokenize", [=, this](const httplib::Request& req, httplib::Response& res) {
    ++total_requests_;
    const Fault f = current_fault();
    if (fault_reply(f, res)) return;
    try {
      const json j = json::parse(req.body);
      if (!only_keys(j, {"text"})) throw std::invalid_argument("unknown field");
      const auto tokens = whitespace_tokenize(j.at("text").get<std::string>(),
                                              static_cast<std::size_t>(world_->config().vocab_size));
      res.set_content(json{{"tokens", tokens}}.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(e.what(), "text/plain");
    }
  });

  s.Post("/v1/losses", [=, this](const httplib::Request& req, httplib::Response& res) {
    ++total_requests_;
    ++loss_requests_;
    const Fault f = current_fault();
    if (fault_reply(f, res)) return;
    Query q;
    ModelRole role;
    try {
      const json j = json::parse(req.body);
      role = role_of(j);
      q = parse_query(j);
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(e.what(), "text/plain");
      return;
    }
    try {
      const auto lv = world_->losses({q.tokens, q.masked, q.eval}, role);
      res.set_content(loss_json(lv, f).dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 422;
      res.set_content(e.what(), "text/plain");
    }
  });

  s.Post("/v1/losses_batch", [=, this](const httplib::Request& req, httplib::Response& res) {
    ++total_requests_;
    ++batch_requests_;
    const Fault f = current_fault();
    if (fault_reply(f, res)) return;
    try {
      const json j = json::parse(req.body);
      if (!only_keys(j, {"model", "queries"})) throw std::invalid_argument("unknown field");
      const auto role = role_of(j);
      json results = json::array();
      for (const auto& qj : j.at("queries")) {
        const auto q = parse_query(qj);
        results.push_back(loss_json(world_->losses({q.tokens, q.masked, q.eval}, role), f));
      }
      if (f == Fault::kReverseBatch) {
        json reversed = json::array();
        for (auto it = results.rbegin(); it != results.rend(); ++it) reversed.push_back(*it);
        results = reversed;
      }
      res.set_content(json{{"results", results}}.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(e.what(), "text/plain");
    }
  });

  port_ = s.bind_to_any_port("127.0.0.1");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

MockModelServer::~MockModelServer() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockModelServer::url() const { return "http://127.0.0.1:" + std::to_string(port_); }

void MockModelServer::fail_next(int n, Fault f) {
  transient_fault_.store(f);
  transient_left_.store(n);
}

Fault MockModelServer::current_fault() {
  if (transient_left_.load() > 0 && transient_left_.fetch_sub(1) > 0) return transient_fault_.load();
  return fault_.load();
}

}  // namespace dlmaudit::testing
