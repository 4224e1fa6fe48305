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

#include "dlmaudit/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "dlmaudit/stats.hpp"

namespace dlmaudit {
namespace fs = std::filesystem;
namespace {

// Strict reader over one JSON object: every key must be consumed.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) throw Error(ErrorCode::kConfig, context_ + " must be a JSON object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    try {
      out = it->template get<T>();
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kConfig, context_ + "." + key + ": " + e.what());
    }
  }

  const Json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw Error(ErrorCode::kConfig, "unknown key '" + context_ + "." + it.key() + "'");
      }
    }
  }

 private:
  const Json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

void read_world(const Json& j, SyntheticWorldConfig& w, bool& null_world) {
  ObjectReader r(j, "oracle.synthetic_world");
  r.get("null_world", null_world);
  if (null_world) w = SyntheticWorldConfig::null_world();
  r.get("num_members", w.num_members);
  r.get("num_nonmembers", w.num_nonmembers);
  r.get("min_length", w.min_length);
  r.get("max_length", w.max_length);
  r.get("num_member_shots", w.num_member_shots);
  r.get("num_nonmember_shots", w.num_nonmember_shots);
  r.get("vocab_size", w.vocab_size);
  r.get("mask_token_id", w.mask_token_id);
  r.get("max_sequence_length", w.max_sequence_length);
  r.get("lexicon_size", w.lexicon_size);
  r.get("num_topics", w.num_topics);
  r.get("capitalization_rate", w.capitalization_rate);
  r.get("base_loss_mean", w.base_loss_mean);
  r.get("base_loss_sd", w.base_loss_sd);
  r.get("word_loss_sd", w.word_loss_sd);
  r.get("min_loss", w.min_loss);
  r.get("context_penalty", w.context_penalty);
  r.get("visible_loss_fraction", w.visible_loss_fraction);
  r.get("domain_vocab_fraction", w.domain_vocab_fraction);
  r.get("domain_token_fraction", w.domain_token_fraction);
  r.get("domain_richness_shape", w.domain_richness_shape);
  r.get("domain_mu", w.domain_mu);
  r.get("domain_sigma", w.domain_sigma);
  r.get("domain_shift", w.domain_shift);
  r.get("member_signal_delta", w.member_signal_delta);
  r.get("activation_probability", w.activation_probability);
  r.get("member_strength_shape", w.member_strength_shape);
  r.get("memorization_window", w.memorization_window);
  r.get("noise_sd", w.noise_sd);
  r.get("config_noise_sd", w.config_noise_sd);
  r.finish();
  w.validate();
}

void read_schedule(const Json& j, ScheduleConfig& s) {
  ObjectReader r(j, "attacks.sama.schedule");
  r.get("steps", s.steps);
  r.get("alpha_min", s.alpha_min);
  r.get("alpha_max", s.alpha_max);
  r.get("subset_size", s.subset_size);
  r.get("num_subsets", s.num_subsets);
  r.get("accumulate", s.accumulate);
  r.finish();
}

void read_sama(const Json& j, SamaConfig& s) {
  ObjectReader r(j, "attacks.sama");
  if (const Json* sched = r.child("schedule")) read_schedule(*sched, s.schedule);
  r.get("mc_repetitions", s.mc_repetitions);
  r.finish();
  s.validate();
}

void read_baseline(const Json& j, const std::string& name, BaselineConfig& b) {
  const std::string ctx = "attacks." + name;
  ObjectReader r(j, ctx);
  r.get("mc_samples", b.mc_samples);
  r.get("mask_fraction", b.mask_fraction);
  r.get("min_k_fraction", b.min_k_fraction);
  r.get("zlib_level", b.zlib_level);
  r.get("recall_shots", b.recall_shots);
  r.get("secmi_ratios", b.secmi_ratios);
  r.get("pia_mask_fraction", b.pia_mask_fraction);
  if (const Json* bows = r.child("bows")) {
    ObjectReader br(*bows, ctx + ".bows");
    br.get("max_features", b.bows.max_features);
    br.get("min_df", b.bows.min_df);
    br.get("trees", b.bows.trees);
    br.get("max_depth", b.bows.max_depth);
    br.get("min_leaf", b.bows.min_leaf);
    br.get("folds", b.bows.folds);
    br.finish();
  }
  if (const Json* nb = r.child("neighbor")) {
    ObjectReader nr(*nb, ctx + ".neighbor");
    nr.get("num_neighbors", b.neighbor.num_neighbors);
    nr.get("perturb_fraction", b.neighbor.perturb_fraction);
    nr.finish();
  }
  r.finish();
  b.validate();
}

/// Attack lists may be given as names, as objects with a "name", or as a map.
Json normalize_attacks(const Json& attacks) {
  Json out = Json::object();
  auto add = [&](const std::string& name, const Json& params) {
    if (params.is_null()) {
      out[name] = Json::object();
    } else if (!params.is_object()) {
      throw Error(ErrorCode::kConfig, "parameters of attack '" + name + "' must be an object");
    } else {
      out[name] = params;
    }
  };
  if (attacks.is_null()) return out;
  if (attacks.is_string()) {
    std::stringstream ss(attacks.get<std::string>());
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (!name.empty()) add(name, Json());
    }
  } else if (attacks.is_array()) {
    for (const auto& a : attacks) {
      if (a.is_string()) {
        add(a.get<std::string>(), Json());
      } else if (a.is_object() && a.contains("name") && a["name"].is_string()) {
        Json params = a;
        params.erase("name");
        add(a["name"].get<std::string>(), params);
      } else {
        throw Error(ErrorCode::kConfig, "attack entries must be names or objects with a \"name\"");
      }
    }
  } else if (attacks.is_object()) {
    for (auto it = attacks.begin(); it != attacks.end(); ++it) add(it.key(), it.value());
  } else {
    throw Error(ErrorCode::kConfig, "\"attacks\" must be a list, a map or a comma-separated string");
  }
  return out;
}

Json default_config() {
  Json attacks = Json::object();
  for (const auto& a : attack_catalog()) attacks[a.name] = Json::object();
  return Json{{"seed", 42},
              {"workers", 0},
              {"output_dir", "out"},
              {"oracle", {{"backend", "synthetic"}}},
              {"samples", {{"synthetic", true}}},
              {"attacks", attacks}};
}

Json parse_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception&) {
    return Json(text);
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fpr_key(double f) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%g", f);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  return in;
}

void write_json_file(const std::string& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

Json ndjson_line(const std::string& line, const std::string& path, std::size_t lineno) {
  try {
    return Json::parse(line);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfig,
                path + ":" + std::to_string(lineno) + ": invalid JSON: " + e.what());
  }
}

/// Runs fn(i) for i in [0, n) on `workers` threads, rethrowing the first exception.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, n); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

int effective_workers(int workers) {
  if (workers > 0) return workers;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

Json stats_json(const DistributionStats& s) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  Json ccdf = Json::array();
  for (const auto& p : s.ccdf) ccdf.push_back({p.value, p.fraction_above});
  return Json{{"count", s.count},        {"mean", s.mean},
              {"sd", opt(s.sd)},         {"skewness", opt(s.skewness)},
              {"excess_kurtosis", opt(s.excess_kurtosis)},
              {"ccdf", ccdf}};
}

std::vector<double> deltas_of(const std::vector<TokenComparison>& pool) {
  std::vector<double> v;
  v.reserve(pool.size());
  for (const auto& c : pool) v.push_back(c.delta);
  return v;
}

}  // namespace

const std::vector<AttackInfo>& attack_catalog() {
  static const std::vector<AttackInfo> catalog = {
      {"sama", true, false, false, false,
       "subset sign votes over a progressive mask schedule, inverse-step weighted"},
      {"loss", false, false, false, false, "negated masked-token loss"},
      {"zlib", false, true, false, false, "negated loss over zlib-compressed byte length"},
      {"lowercase", false, true, false, false, "loss on lowercased text minus loss on original"},
      {"neighbor", false, false, false, false,
       "mean loss of random-substitution neighbours minus own loss"},
      {"min_k", false, false, false, false, "sum of the lowest averaged token probabilities"},
      {"min_k_pp", false, false, false, false,
       "sum of the lowest log averaged token probabilities"},
      {"recall", false, false, true, false, "baseline loss over non-member-prefixed loss"},
      {"con_recall", false, false, true, false,
       "non-member minus member prefixed loss, over baseline loss"},
      {"bows", false, true, false, true,
       "TF-IDF random forest, out-of-fold member probability (query-free)"},
      {"ratio", true, false, false, false, "reference loss over target loss"},
      {"secmi", false, false, false, false,
       "negated 1/(s+1)-weighted loss over five content-seeded mask ratios"},
      {"pia", false, false, false, false, "negated masked minus unmasked loss at a text-seeded mask"},
  };
  return catalog;
}

const AttackInfo& attack_info(const std::string& name) {
  for (const auto& a : attack_catalog()) {
    if (a.name == name) return a;
  }
  throw Error(ErrorCode::kConfig, "unknown attack '" + name + "'; valid attacks: " + attack_names());
}

std::string attack_names() {
  std::string out;
  for (const auto& a : attack_catalog()) out += (out.empty() ? "" : ", ") + a.name;
  return out;
}

std::uint64_t documented_query_count(const AttackSettings& s) {
  const auto& b = s.baseline;
  const auto mc = static_cast<std::uint64_t>(b.mc_samples);
  const std::string& n = s.name;
  if (n == "sama") {
    return 2ULL * static_cast<std::uint64_t>(s.sama.schedule.steps) *
           static_cast<std::uint64_t>(s.sama.mc_repetitions);
  }
  if (n == "loss" || n == "zlib" || n == "min_k" || n == "min_k_pp") return mc;
  if (n == "lowercase" || n == "recall" || n == "ratio") return 2 * mc;
  if (n == "con_recall") return 3 * mc;
  if (n == "neighbor") return mc * (1 + static_cast<std::uint64_t>(b.neighbor.num_neighbors));
  if (n == "secmi") return b.secmi_ratios.size();
  if (n == "pia") return 2;
  if (n == "bows") return 0;
  throw Error(ErrorCode::kConfig, "unknown attack '" + n + "'");
}

std::string attack_help() {
  const BaselineConfig b;
  const SamaConfig s;
  std::ostringstream o;
  auto line = [&](const AttackInfo& a, const std::string& params) {
    char head[64];
    std::snprintf(head, sizeof head, "  %-11s", a.name.c_str());
    o << head << a.summary << "\n" << std::string(15, ' ') << params << "\n";
  };
  auto mc = "mc_samples=" + std::to_string(b.mc_samples) + " mask_fraction=" +
            format_double(b.mask_fraction);
  for (const auto& a : attack_catalog()) {
    const auto& n = a.name;
    std::string p;
    if (n == "sama") {
      p = "schedule.steps=" + std::to_string(s.schedule.steps) +
          " schedule.alpha_min=" + format_double(s.schedule.alpha_min) +
          " schedule.alpha_max=" + format_double(s.schedule.alpha_max) +
          " schedule.num_subsets=" + std::to_string(s.schedule.num_subsets) +
          " schedule.subset_size=" + std::to_string(s.schedule.subset_size) +
          " schedule.accumulate=false mc_repetitions=" + std::to_string(s.mc_repetitions);
    } else if (n == "zlib") {
      p = mc + " zlib_level=" + std::to_string(b.zlib_level);
    } else if (n == "neighbor") {
      p = mc + " neighbor.num_neighbors=" + std::to_string(b.neighbor.num_neighbors) +
          " neighbor.perturb_fraction=" + format_double(b.neighbor.perturb_fraction);
    } else if (n == "min_k" || n == "min_k_pp") {
      p = mc + " min_k_fraction=" + format_double(b.min_k_fraction);
    } else if (n == "recall" || n == "con_recall") {
      p = mc + " recall_shots=" + std::to_string(b.recall_shots);
    } else if (n == "bows") {
      p = "bows.max_features=" + std::to_string(b.bows.max_features) +
          " bows.min_df=" + format_double(b.bows.min_df) +
          " bows.trees=" + std::to_string(b.bows.trees) +
          " bows.max_depth=" + std::to_string(b.bows.max_depth) +
          " bows.min_leaf=" + std::to_string(b.bows.min_leaf) +
          " bows.folds=" + std::to_string(b.bows.folds);
    } else if (n == "secmi") {
      p = "secmi_ratios=[0.1,0.275,0.45,0.625,0.8]";
    } else if (n == "pia") {
      p = "pia_mask_fraction=" + format_double(b.pia_mask_fraction);
    } else {
      p = mc;
    }
    AttackSettings settings;
    settings.name = n;
    p += "  (" + std::to_string(documented_query_count(settings)) + " queries/sample)";
    line(a, p);
  }
  return o.str();
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
  ExperimentConfig cfg;
  ObjectReader r(j, "config");
  r.get("seed", cfg.seed);
  r.get("output_dir", cfg.output_dir);
  r.get("workers", cfg.workers);
  if (cfg.workers < 0) throw Error(ErrorCode::kConfig, "workers must be >= 0");

  if (const Json* o = r.child("oracle")) {
    ObjectReader orr(*o, "oracle");
    std::string backend = "synthetic";
    orr.get("backend", backend);
    if (backend == "synthetic") {
      cfg.oracle.backend = Backend::kSynthetic;
    } else if (backend == "remote") {
      cfg.oracle.backend = Backend::kRemote;
    } else {
      throw Error(ErrorCode::kConfig, "oracle.backend must be 'synthetic' or 'remote'");
    }
    orr.get("url", cfg.oracle.url);
    orr.get("timeout_ms", cfg.oracle.remote.timeout_ms);
    orr.get("max_retries", cfg.oracle.remote.max_retries);
    orr.get("max_in_flight", cfg.oracle.remote.max_in_flight);
    orr.get("batch_size", cfg.oracle.remote.batch_size);
    if (const Json* w = orr.child("synthetic_world")) {
      read_world(*w, cfg.oracle.world, cfg.oracle.null_world);
    }
    orr.finish();
  }
  if (cfg.oracle.backend == Backend::kRemote && cfg.oracle.url.empty()) {
    throw Error(ErrorCode::kConfig, "remote oracle needs oracle.url (or --url / DLM_MIA_URL)");
  }

  if (const Json* s = r.child("samples")) {
    ObjectReader sr(*s, "samples");
    sr.get("synthetic", cfg.samples.synthetic);
    sr.get("path", cfg.samples.path);
    sr.get("shots", cfg.samples.shots_path);
    sr.finish();
    if (!cfg.samples.path.empty()) cfg.samples.synthetic = false;
  }
  if (!cfg.samples.synthetic && cfg.samples.path.empty()) {
    throw Error(ErrorCode::kConfig, "samples need either \"synthetic\": true or a \"path\"");
  }
  if (cfg.samples.synthetic && cfg.oracle.backend != Backend::kSynthetic) {
    throw Error(ErrorCode::kConfig, "synthetic samples require the synthetic oracle; set samples.path");
  }

  const Json* attacks = r.child("attacks");
  const Json normalized = normalize_attacks(attacks ? *attacks : Json());
  for (auto it = normalized.begin(); it != normalized.end(); ++it) attack_info(it.key());
  for (const auto& info : attack_catalog()) {
    auto it = normalized.find(info.name);
    if (it == normalized.end()) continue;
    AttackSettings a;
    a.name = info.name;
    if (a.name == "sama") {
      a.sama.seed_spec = SeedSpec{cfg.seed};
      read_sama(*it, a.sama);
    } else {
      read_baseline(*it, a.name, a.baseline);
    }
    cfg.attacks.push_back(std::move(a));
  }
  if (cfg.attacks.empty()) {
    throw Error(ErrorCode::kConfig, "no attacks selected; valid attacks: " + attack_names());
  }
  r.finish();
  return cfg;
}

Json world_config_to_json(const SyntheticWorldConfig& w) {
  return Json{{"num_members", w.num_members},
              {"num_nonmembers", w.num_nonmembers},
              {"min_length", w.min_length},
              {"max_length", w.max_length},
              {"num_member_shots", w.num_member_shots},
              {"num_nonmember_shots", w.num_nonmember_shots},
              {"vocab_size", w.vocab_size},
              {"mask_token_id", w.mask_token_id},
              {"max_sequence_length", w.max_sequence_length},
              {"lexicon_size", w.lexicon_size},
              {"num_topics", w.num_topics},
              {"capitalization_rate", w.capitalization_rate},
              {"base_loss_mean", w.base_loss_mean},
              {"base_loss_sd", w.base_loss_sd},
              {"word_loss_sd", w.word_loss_sd},
              {"min_loss", w.min_loss},
              {"context_penalty", w.context_penalty},
              {"visible_loss_fraction", w.visible_loss_fraction},
              {"domain_vocab_fraction", w.domain_vocab_fraction},
              {"domain_token_fraction", w.domain_token_fraction},
              {"domain_richness_shape", w.domain_richness_shape},
              {"domain_mu", w.domain_mu},
              {"domain_sigma", w.domain_sigma},
              {"domain_shift", w.domain_shift},
              {"member_signal_delta", w.member_signal_delta},
              {"activation_probability", w.activation_probability},
              {"member_strength_shape", w.member_strength_shape},
              {"memorization_window", w.memorization_window},
              {"noise_sd", w.noise_sd},
              {"config_noise_sd", w.config_noise_sd}};
}

Json ExperimentConfig::canonical() const {
  Json oracle_j = {{"backend", oracle.backend == Backend::kSynthetic ? "synthetic" : "remote"}};
  if (oracle.backend == Backend::kRemote) {
    oracle_j["url"] = oracle.url;
    oracle_j["timeout_ms"] = oracle.remote.timeout_ms;
    oracle_j["max_retries"] = oracle.remote.max_retries;
    oracle_j["max_in_flight"] = oracle.remote.max_in_flight;
    oracle_j["batch_size"] = oracle.remote.batch_size;
  } else {
    oracle_j["synthetic_world"] = world_config_to_json(oracle.world);
  }
  Json samples_j = samples.synthetic ? Json{{"synthetic", true}}
                                     : Json{{"path", samples.path}, {"shots", samples.shots_path}};
  Json attacks_j = Json::object();
  for (const auto& a : attacks) {
    if (a.name == "sama") {
      const auto& s = a.sama.schedule;
      attacks_j[a.name] = {{"schedule",
                            {{"steps", s.steps},
                             {"alpha_min", s.alpha_min},
                             {"alpha_max", s.alpha_max},
                             {"subset_size", s.subset_size},
                             {"num_subsets", s.num_subsets},
                             {"accumulate", s.accumulate}}},
                           {"mc_repetitions", a.sama.mc_repetitions}};
    } else {
      const auto& b = a.baseline;
      attacks_j[a.name] = {
          {"mc_samples", b.mc_samples},
          {"mask_fraction", b.mask_fraction},
          {"min_k_fraction", b.min_k_fraction},
          {"zlib_level", b.zlib_level},
          {"recall_shots", b.recall_shots},
          {"secmi_ratios", b.secmi_ratios},
          {"pia_mask_fraction", b.pia_mask_fraction},
          {"bows",
           {{"max_features", b.bows.max_features},
            {"min_df", b.bows.min_df},
            {"trees", b.bows.trees},
            {"max_depth", b.bows.max_depth},
            {"min_leaf", b.bows.min_leaf},
            {"folds", b.bows.folds}}},
          {"neighbor",
           {{"num_neighbors", b.neighbor.num_neighbors},
            {"perturb_fraction", b.neighbor.perturb_fraction}}}};
    }
  }
  return Json{{"seed", seed}, {"oracle", oracle_j}, {"samples", samples_j}, {"attacks", attacks_j}};
}

std::string ExperimentConfig::digest() const { return hex64(fnv1a64(canonical().dump())); }

const AttackSettings* ExperimentConfig::find_attack(const std::string& name) const {
  for (const auto& a : attacks) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

void apply_override(Json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::kConfig, "override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  Json value = parse_value(assignment.substr(eq + 1));
  Json* node = &config;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw Error(ErrorCode::kConfig, "override key '" + key + "' is malformed");
    parts.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (parts[i] == "attacks" && node == &config) {
      (*node)["attacks"] = normalize_attacks(node->contains("attacks") ? (*node)["attacks"] : Json());
    }
    Json& next = (*node)[parts[i]];
    if (next.is_null()) next = Json::object();
    if (!next.is_object()) {
      throw Error(ErrorCode::kConfig, "override '" + key + "' descends into a non-object");
    }
    node = &next;
  }
  (*node)[parts.back()] = std::move(value);
}

Json resolve_config(const std::string& path, const std::vector<std::string>& attacks,
                    const std::vector<std::string>& overrides) {
  Json config = default_config();
  if (!path.empty()) {
    if (!fs::exists(path)) throw Error(ErrorCode::kConfig, "config file '" + path + "' not found");
    auto in = open_in(path);
    try {
      config = Json::parse(in);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kConfig, path + ": invalid JSON: " + e.what());
    }
    if (!config.is_object()) throw Error(ErrorCode::kConfig, path + ": top level must be an object");
    if (!config.contains("attacks")) config["attacks"] = default_config()["attacks"];
  }
  config["attacks"] = normalize_attacks(config["attacks"]);
  if (!attacks.empty()) {
    Json selected = Json::object();
    for (const auto& name : attacks) {
      attack_info(name);
      auto it = config["attacks"].find(name);
      selected[name] = it != config["attacks"].end() ? *it : Json::object();
    }
    config["attacks"] = selected;
  }
  for (const auto& o : overrides) apply_override(config, o);
  config["attacks"] = normalize_attacks(config["attacks"]);
  return config;
}

ExperimentInputs load_inputs(const ExperimentConfig& cfg) {
  ExperimentInputs in;
  if (cfg.oracle.backend == Backend::kSynthetic) {
    auto bundle = build_synthetic_world(cfg.oracle.world, cfg.seed);
    in.world = bundle.world;
    in.target = bundle.target;
    in.reference = bundle.reference;
    if (cfg.samples.synthetic) {
      in.samples = bundle.samples;
      in.shots = in.world->shots();
    }
  } else {
    in.target = std::make_shared<RemoteOracle>(cfg.oracle.url, ModelRole::kTarget, cfg.oracle.remote);
    in.reference =
        std::make_shared<RemoteOracle>(cfg.oracle.url, ModelRole::kReference, cfg.oracle.remote);
  }
  if (!cfg.samples.synthetic) {
    in.samples = read_samples(cfg.samples.path, in.target.get());
    if (!cfg.samples.shots_path.empty()) in.shots = read_shots(cfg.samples.shots_path);
  }
  std::sort(in.samples.begin(), in.samples.end(), [](const auto& a, const auto& b) {
    return a.sequence.sample_id < b.sequence.sample_id;
  });
  return in;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ExperimentInputs& inputs,
                                int workers) {
  workers = effective_workers(workers > 0 ? workers : cfg.workers);
  const SeedSpec seed = cfg.seed_spec();
  auto target = std::make_shared<CountingOracle>(inputs.target);
  auto reference = std::make_shared<CountingOracle>(inputs.reference);

  bool need_shots = false;
  for (const auto& a : cfg.attacks) need_shots |= attack_info(a.name).needs_shots;
  std::optional<ShotPools> pools;
  std::optional<Error> pool_error;
  if (need_shots) {
    try {
      pools = ShotPools::prepare(inputs.shots, *target);
    } catch (const Error& e) {
      pool_error = e;
    }
  }

  const auto& samples = inputs.samples;
  const std::size_t n_attacks = cfg.attacks.size();
  struct Slot {
    std::optional<double> score;
    ErrorCode code = ErrorCode::kInternal;
    std::string message;
  };
  std::vector<Slot> slots(samples.size() * n_attacks);

  auto run_one = [&](std::size_t item) {
    const auto& sample = samples[item / n_attacks];
    const auto& attack = cfg.attacks[item % n_attacks];
    auto& slot = slots[item];
    const auto& seq = sample.sequence;
    const auto& b = attack.baseline;
    try {
      const std::string& n = attack.name;
      if (n == "bows") return;
      if (attack_info(n).needs_shots && !pools) {
        throw pool_error ? *pool_error : Error(ErrorCode::kConfig, "no shot pools available");
      }
      double score = 0.0;
      if (n == "sama") score = sama_score(seq, *target, *reference, attack.sama).score;
      else if (n == "loss") score = loss_attack(seq, *target, b, seed);
      else if (n == "zlib") score = zlib_attack(seq, *target, b, seed);
      else if (n == "lowercase") score = lowercase_attack(seq, *target, b, seed);
      else if (n == "neighbor") score = neighbor_attack(seq, *target, b, seed);
      else if (n == "min_k") score = min_k_attack(seq, *target, b, seed);
      else if (n == "min_k_pp") score = min_k_pp_attack(seq, *target, b, seed);
      else if (n == "recall") score = recall_attack(seq, *target, *pools, b, seed);
      else if (n == "con_recall") score = con_recall_attack(seq, *target, *pools, b, seed);
      else if (n == "ratio") score = ratio_attack(seq, *target, *reference, b, seed);
      else if (n == "secmi") score = secmi_attack(seq, *target, b);
      else if (n == "pia") score = pia_attack(seq, *target, b);
      if (!std::isfinite(score)) throw Error(ErrorCode::kInternal, "non-finite score");
      slot.score = score;
    } catch (const Error& e) {
      slot.code = e.code();
      slot.message = e.what();
    } catch (const std::exception& e) {
      slot.code = ErrorCode::kInternal;
      slot.message = e.what();
    }
  };
  parallel_for(slots.size(), workers, run_one);

  // The bag-of-words classifier needs the whole labelled corpus at once.
  for (std::size_t a = 0; a < n_attacks; ++a) {
    if (cfg.attacks[a].name != "bows") continue;
    std::vector<BowsDocument> corpus;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      auto& slot = slots[i * n_attacks + a];
      if (!samples[i].sequence.text || samples[i].sequence.text->empty()) {
        slot.code = ErrorCode::kInvalidArgument;
        slot.message = "sample '" + samples[i].sequence.sample_id + "' has no text";
        continue;
      }
      corpus.push_back({samples[i].sequence.sample_id, *samples[i].sequence.text, samples[i].label});
      rows.push_back(i);
    }
    try {
      const auto scores = bows_attack(corpus, cfg.attacks[a].baseline.bows, seed);
      for (std::size_t k = 0; k < rows.size(); ++k) slots[rows[k] * n_attacks + a].score = scores[k];
    } catch (const Error& e) {
      for (auto i : rows) {
        slots[i * n_attacks + a].code = e.code();
        slots[i * n_attacks + a].message = e.what();
      }
    }
  }

  ExperimentResult result;
  result.config_digest = cfg.digest();
  result.seed = cfg.seed;
  result.samples = samples.size();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& sample = samples[i / n_attacks];
    const auto& attack = cfg.attacks[i % n_attacks];
    if (slots[i].score) {
      result.scores.push_back({sample.sequence.sample_id, attack.name, *slots[i].score, sample.label});
    } else {
      result.failures.push_back(
          {sample.sequence.sample_id, attack.name, slots[i].code, slots[i].message});
    }
  }
  for (const auto& attack : cfg.attacks) {
    std::vector<LabeledScore> labeled;
    for (const auto& s : result.scores) {
      if (s.attack_name == attack.name && s.label) {
        labeled.push_back({s.score, *s.label == Label::kMember});
      }
    }
    const bool both = std::any_of(labeled.begin(), labeled.end(), [](auto& l) { return l.member; }) &&
                      std::any_of(labeled.begin(), labeled.end(), [](auto& l) { return !l.member; });
    if (both) result.reports.push_back(compute_report(attack.name, labeled, result.config_digest, cfg.seed));
  }
  result.target_queries = target->queries();
  result.reference_queries = reference->queries();
  return result;
}

Json summary_json(const ExperimentResult& result, const ExperimentConfig& cfg) {
  Json attacks = Json::array();
  for (const auto& a : cfg.attacks) {
    std::size_t scored = 0;
    std::size_t failed = 0;
    for (const auto& s : result.scores) scored += s.attack_name == a.name;
    for (const auto& f : result.failures) failed += f.attack == a.name;
    const double total = static_cast<double>(scored + failed);
    attacks.push_back({{"name", a.name},
                       {"scored", scored},
                       {"failed", failed},
                       {"coverage", total > 0 ? static_cast<double>(scored) / total : 0.0},
                       {"queries_per_sample", documented_query_count(a)}});
  }
  Json failures = Json::array();
  for (const auto& f : result.failures) {
    failures.push_back({{"sample_id", f.sample_id},
                        {"attack", f.attack},
                        {"error", error_code_name(f.code)},
                        {"message", f.message}});
  }
  Json notes = Json::array();
  notes.push_back("TPR@FPR uses the step rule without interpolation");
  if (cfg.find_attack("neighbor")) {
    notes.push_back("neighbor uses random-substitution perturbation as a stand-in");
  }
  return Json{{"config_digest", result.config_digest},
              {"seed", result.seed},
              {"samples", result.samples},
              {"attacks", attacks},
              {"queries", {{"target", result.target_queries}, {"reference", result.reference_queries}}},
              {"failures", failures},
              {"notes", notes},
              {"status", result.partial() ? "partial" : "complete"}};
}

Json write_experiment_outputs(const ExperimentResult& result, const ExperimentConfig& cfg,
                              const std::string& dir) {
  fs::create_directories(dir);
  write_scores_csv((fs::path(dir) / "scores.csv").string(), result.scores);
  write_json_file((fs::path(dir) / "metrics.json").string(), metrics_json(result.reports));
  for (const auto& report : result.reports) {
    std::vector<LabeledScore> labeled;
    for (const auto& s : result.scores) {
      if (s.attack_name == report.attack_name && s.label) {
        labeled.push_back({s.score, *s.label == Label::kMember});
      }
    }
    write_roc_csv((fs::path(dir) / ("roc_" + report.attack_name + ".csv")).string(),
                  roc_curve(labeled));
  }
  Json summary = summary_json(result, cfg);
  write_json_file((fs::path(dir) / "summary.json").string(), summary);
  return summary;
}

void write_scores_csv(const std::string& path, const std::vector<MembershipScore>& scores) {
  auto out = open_out(path);
  out << "sample_id,attack,score,label\n";
  for (const auto& s : scores) {
    if (s.sample_id.find_first_of(",\"\n") != std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "sample_id '" + s.sample_id + "' needs CSV quoting");
    }
    out << s.sample_id << ',' << s.attack_name << ',' << format_double(s.score) << ','
        << (s.label ? label_name(*s.label) : "") << '\n';
  }
}

std::vector<MembershipScore> read_scores_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kConfig, path + ": empty scores file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "sample_id,attack,score,label") {
    throw Error(ErrorCode::kConfig, path + ": expected header sample_id,attack,score,label");
  }
  std::vector<MembershipScore> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    const auto where = path + ":" + std::to_string(lineno);
    if (f.size() != 4) throw Error(ErrorCode::kConfig, where + ": expected 4 fields");
    MembershipScore s;
    s.sample_id = f[0];
    s.attack_name = f[1];
    char* end = nullptr;
    s.score = std::strtod(f[2].c_str(), &end);
    if (f[2].empty() || *end != '\0' || !std::isfinite(s.score)) {
      throw Error(ErrorCode::kConfig, where + ": bad score '" + f[2] + "'");
    }
    if (!f[3].empty()) {
      s.label = parse_label(f[3]);
      if (!s.label) throw Error(ErrorCode::kConfig, where + ": bad label '" + f[3] + "'");
    }
    out.push_back(std::move(s));
  }
  return out;
}

Json metrics_json(const std::vector<MetricsReport>& reports) {
  Json out = Json::array();
  for (const auto& r : reports) {
    Json tpr = Json::object();
    for (const auto& [f, t] : r.tpr_at) tpr[fpr_key(f)] = t;
    Json warnings = Json::array();
    for (double f : r.small_sample_fprs) {
      warnings.push_back("TPR@" + fpr_key(f) + " FPR rests on fewer than " +
                         std::to_string(static_cast<int>(kSmallSampleFalsePositives)) +
                         " admissible non-member scores");
    }
    out.push_back({{"attack", r.attack_name},
                   {"auc", r.auc},
                   {"tpr_at_fpr", tpr},
                   {"n_members", r.n_members},
                   {"n_nonmembers", r.n_nonmembers},
                   {"config_digest", r.config_digest},
                   {"seed", r.seed},
                   {"tpr_rule", "step, no interpolation"},
                   {"warnings", warnings}});
  }
  return out;
}

void write_roc_csv(const std::string& path, const std::vector<RocPoint>& roc) {
  auto out = open_out(path);
  out << "fpr,tpr,threshold\n";
  for (const auto& p : roc) {
    out << format_double(p.fpr) << ',' << format_double(p.tpr) << ','
        << (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) << '\n';
  }
}

std::string format_metrics_table(const std::vector<MetricsReport>& reports) {
  std::ostringstream o;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %8s %10s %10s %10s %6s %6s\n", "attack", "AUC", "TPR@10%",
                "TPR@1%", "TPR@0.1%", "n_mem", "n_non");
  o << buf;
  for (const auto& r : reports) {
    auto at = [&](double f) {
      auto it = r.tpr_at.find(f);
      return it == r.tpr_at.end() ? 0.0 : it->second;
    };
    std::snprintf(buf, sizeof buf, "%-12s %8.4f %10.4f %10.4f %10.4f %6zu %6zu%s\n",
                  r.attack_name.c_str(), r.auc, at(0.10), at(0.01), at(0.001), r.n_members,
                  r.n_nonmembers, r.small_sample_fprs.empty() ? "" : "  (small-n)");
    o << buf;
  }
  return o.str();
}

std::vector<LabeledSample> read_samples(const std::string& path, const Oracle* tokenizer) {
  auto in = open_in(path);
  std::vector<LabeledSample> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const Json j = ndjson_line(line, path, lineno);
    const auto where = path + ":" + std::to_string(lineno);
    if (!j.is_object() || !j.contains("sample_id") || !j["sample_id"].is_string()) {
      throw Error(ErrorCode::kConfig, where + ": record needs a string sample_id");
    }
    LabeledSample s;
    s.sequence.sample_id = j["sample_id"].get<std::string>();
    if (!ids.insert(s.sequence.sample_id).second) {
      throw Error(ErrorCode::kConfig, where + ": duplicate sample_id '" + s.sequence.sample_id + "'");
    }
    if (!j.contains("label") || !j["label"].is_string() || !parse_label(j["label"].get<std::string>())) {
      throw Error(ErrorCode::kConfig, where + ": label must be \"member\" or \"non-member\"");
    }
    s.label = *parse_label(j["label"].get<std::string>());
    if (j.contains("text") && j["text"].is_string()) s.sequence.text = j["text"].get<std::string>();
    if (j.contains("tokens") && !j["tokens"].is_null()) {
      try {
        s.sequence.tokens = j["tokens"].get<std::vector<TokenId>>();
      } catch (const Json::exception& e) {
        throw Error(ErrorCode::kConfig, where + ": tokens: " + e.what());
      }
    } else if (s.sequence.text && tokenizer) {
      s.sequence.tokens = tokenizer->tokenize(*s.sequence.text).tokens;
    } else {
      throw Error(ErrorCode::kConfig, where + ": record needs tokens or text");
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_samples(const std::string& path, const std::vector<LabeledSample>& samples) {
  auto out = open_out(path);
  for (const auto& s : samples) {
    Json j = {{"sample_id", s.sequence.sample_id},
              {"tokens", s.sequence.tokens},
              {"label", label_name(s.label)}};
    if (s.sequence.text) j["text"] = *s.sequence.text;
    out << j.dump() << '\n';
  }
}

std::vector<Shot> read_shots(const std::string& path) {
  auto in = open_in(path);
  std::vector<Shot> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const Json j = ndjson_line(line, path, lineno);
    const auto where = path + ":" + std::to_string(lineno);
    if (!j.is_object() || !j.contains("sample_id") || !j.contains("text") || !j.contains("role") ||
        !j["sample_id"].is_string() || !j["text"].is_string() || !j["role"].is_string()) {
      throw Error(ErrorCode::kConfig, where + ": shot needs string sample_id, text and role");
    }
    const auto role = parse_shot_role(j["role"].get<std::string>());
    if (!role) throw Error(ErrorCode::kConfig, where + ": role must be member_shot or nonmember_shot");
    out.push_back({j["sample_id"].get<std::string>(), j["text"].get<std::string>(), *role});
  }
  return out;
}

void write_shots(const std::string& path, const std::vector<Shot>& shots) {
  auto out = open_out(path);
  for (const auto& s : shots) {
    out << Json{{"sample_id", s.sample_id}, {"text", s.text}, {"role", shot_role_name(s.role)}}.dump()
        << '\n';
  }
}

std::vector<MetricsReport> metrics_from_scores(const std::string& scores_csv,
                                               const std::string& out_dir,
                                               const std::string& config_digest,
                                               std::uint64_t seed) {
  const auto scores = read_scores_csv(scores_csv);
  std::vector<std::string> order;
  std::map<std::string, std::vector<LabeledScore>> by_attack;
  for (const auto& s : scores) {
    if (!by_attack.count(s.attack_name)) order.push_back(s.attack_name);
    auto& v = by_attack[s.attack_name];
    if (s.label) v.push_back({s.score, *s.label == Label::kMember});
  }
  std::vector<MetricsReport> reports;
  fs::create_directories(out_dir);
  for (const auto& name : order) {
    const auto& v = by_attack[name];
    reports.push_back(compute_report(name, v, config_digest, seed));
    write_roc_csv((fs::path(out_dir) / ("roc_" + name + ".csv")).string(), roc_curve(v));
  }
  write_json_file((fs::path(out_dir) / "metrics.json").string(), metrics_json(reports));
  return reports;
}

DifferencePools collect_difference_pools(const ExperimentInputs& inputs, const SamaConfig& sama,
                                         int workers) {
  const auto& samples = inputs.samples;
  std::vector<std::vector<TokenComparison>> per_sample(samples.size());
  parallel_for(samples.size(), effective_workers(workers), [&](std::size_t i) {
    collect_evidence(samples[i].sequence, *inputs.target, *inputs.reference, sama, 0,
                     &per_sample[i]);
  });
  DifferencePools pools;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto& dst = samples[i].label == Label::kMember ? pools.member : pools.nonmember;
    dst.insert(dst.end(), per_sample[i].begin(), per_sample[i].end());
  }
  return pools;
}

Json calibration_report(const DifferencePools& pools, const CalibrationTargets& t) {
  const auto m = distribution_stats(deltas_of(pools.member), 0);
  const auto n = distribution_stats(deltas_of(pools.nonmember), 0);
  auto band = [](const std::optional<double>& v, double lo, double hi) {
    return v.has_value() && *v >= lo && *v <= hi;
  };
  const bool ok = band(m.skewness, 5.0, 10.0) && band(m.excess_kurtosis, 60.0, 110.0) &&
                  band(n.mean, 0.002, 0.012) && band(m.mean, 0.025, 0.040);
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  return Json{
      {"targets",
       {{"member", {{"mean", t.member_mean}, {"sd", t.member_sd}, {"skewness", t.member_skewness},
                    {"excess_kurtosis", t.member_excess_kurtosis}}},
        {"nonmember", {{"mean", t.nonmember_mean}, {"sd", t.nonmember_sd},
                       {"skewness", t.nonmember_skewness},
                       {"excess_kurtosis", t.nonmember_excess_kurtosis}}}}},
      {"achieved",
       {{"member", {{"count", m.count}, {"mean", m.mean}, {"sd", opt(m.sd)},
                    {"skewness", opt(m.skewness)}, {"excess_kurtosis", opt(m.excess_kurtosis)}}},
        {"nonmember", {{"count", n.count}, {"mean", n.mean}, {"sd", opt(n.sd)},
                       {"skewness", opt(n.skewness)},
                       {"excess_kurtosis", opt(n.excess_kurtosis)}}}}},
      {"bands",
       {{"member_skewness", {5.0, 10.0}},
        {"member_excess_kurtosis", {60.0, 110.0}},
        {"member_mean", {0.025, 0.040}},
        {"nonmember_mean", {0.002, 0.012}}}},
      {"within_bands", ok}};
}

Json diagnose(const ExperimentConfig& cfg, const ExperimentInputs& inputs,
              const std::string& scores_csv, int workers) {
  SamaConfig sama;
  if (const auto* a = cfg.find_attack("sama")) sama = a->sama;
  sama.seed_spec = cfg.seed_spec();
  workers = effective_workers(workers > 0 ? workers : cfg.workers);
  const auto pools = collect_difference_pools(inputs, sama, workers);

  const auto signals = signal_strength(pools.member, pools.nonmember);
  constexpr std::size_t kMinCount = 30;
  std::vector<TokenSignal> frequent;
  for (const auto& s : signals) {
    if (s.ratio && s.member_count >= kMinCount && s.nonmember_count >= kMinCount) frequent.push_back(s);
  }
  std::vector<double> ratios;
  std::vector<double> domain_ratios;
  for (const auto& s : frequent) {
    ratios.push_back(*s.ratio);
    if (inputs.world && inputs.world->is_domain_token(s.token)) domain_ratios.push_back(*s.ratio);
  }
  auto median = [](std::vector<double> v) -> Json {
    if (v.empty()) return nullptr;
    std::sort(v.begin(), v.end());
    const auto h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
  };
  std::sort(frequent.begin(), frequent.end(), [](const TokenSignal& a, const TokenSignal& b) {
    const double da = a.member_mean - a.nonmember_mean;
    const double db = b.member_mean - b.nonmember_mean;
    return da != db ? da > db : a.token < b.token;
  });
  Json top = Json::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(20, frequent.size()); ++i) {
    const auto& s = frequent[i];
    Json row = {{"token", s.token},
                {"member_mean", s.member_mean},
                {"nonmember_mean", s.nonmember_mean},
                {"ratio", *s.ratio},
                {"member_count", s.member_count},
                {"nonmember_count", s.nonmember_count}};
    if (inputs.world) row["domain_token"] = inputs.world->is_domain_token(s.token);
    top.push_back(row);
  }

  // Mean-based contrast: expected loss difference per class at the middle density.
  constexpr int kDraws = 8;
  const double density = 0.5 * (sama.schedule.alpha_min + sama.schedule.alpha_max);
  std::vector<double> expected(inputs.samples.size());
  parallel_for(inputs.samples.size(), workers, [&](std::size_t i) {
    expected[i] = expected_loss_difference(inputs.samples[i].sequence, *inputs.target,
                                           *inputs.reference, kDraws, density, cfg.seed_spec());
  });
  double em = 0.0, en = 0.0;
  std::size_t cm = 0, cn = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (inputs.samples[i].label == Label::kMember) {
      em += expected[i];
      ++cm;
    } else {
      en += expected[i];
      ++cn;
    }
  }

  Json out = {
      {"config_digest", cfg.digest()},
      {"seed", cfg.seed},
      {"member", stats_json(distribution_stats(deltas_of(pools.member)))},
      {"nonmember", stats_json(distribution_stats(deltas_of(pools.nonmember)))},
      {"signal_strength",
       {{"tokens_in_both_pools", signals.size()},
        {"tokens_reported", frequent.size()},
        {"min_count", kMinCount},
        {"median_ratio", median(ratios)},
        {"median_ratio_domain_tokens", median(domain_ratios)},
        {"top", top}}},
      {"expected_loss_difference",
       {{"density", density},
        {"draws_per_sample", kDraws},
        {"member_mean", cm ? Json(em / static_cast<double>(cm)) : Json(nullptr)},
        {"nonmember_mean", cn ? Json(en / static_cast<double>(cn)) : Json(nullptr)}}}};
  if (!scores_csv.empty()) {
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_attack;
    for (const auto& s : read_scores_csv(scores_csv)) {
      if (!s.label) continue;
      auto& p = by_attack[s.attack_name];
      (*s.label == Label::kMember ? p.first : p.second).push_back(s.score);
    }
    Json scores = Json::object();
    for (const auto& [name, p] : by_attack) {
      scores[name] = {{"member", stats_json(distribution_stats(p.first, 8))},
                      {"nonmember", stats_json(distribution_stats(p.second, 8))}};
    }
    out["scores"] = scores;
  }
  return out;
}

Json write_synthetic_world(const ExperimentConfig& cfg, const std::string& dir, int workers) {
  if (cfg.oracle.backend != Backend::kSynthetic) {
    throw Error(ErrorCode::kConfig, "synth-world needs the synthetic oracle backend");
  }
  ExperimentConfig world_cfg = cfg;
  world_cfg.samples = SampleSettings{};
  const auto inputs = load_inputs(world_cfg);
  fs::create_directories(dir);
  write_samples((fs::path(dir) / "samples.ndjson").string(), inputs.samples);
  write_shots((fs::path(dir) / "shots.ndjson").string(), inputs.shots);
  const Json world_json = world_config_to_json(cfg.oracle.world);
  const Json world = {{"seed", cfg.seed},
                      {"null_world", cfg.oracle.null_world},
                      {"config", world_json},
                      {"world_digest", hex64(fnv1a64(world_json.dump()))},
                      {"config_digest", cfg.digest()},
                      {"samples", inputs.samples.size()},
                      {"shots", inputs.shots.size()},
                      {"memorized_windows", inputs.world->memorized_windows()}};
  write_json_file((fs::path(dir) / "world.json").string(), world);

  SamaConfig sama;
  if (const auto* a = cfg.find_attack("sama")) sama = a->sama;
  sama.seed_spec = cfg.seed_spec();
  const auto pools = collect_difference_pools(inputs, sama, workers);
  Json calibration = calibration_report(pools, cfg.oracle.world.calibration_targets);
  calibration["config_digest"] = cfg.digest();
  write_json_file((fs::path(dir) / "calibration.json").string(), calibration);
  return Json{{"world", world}, {"calibration", calibration}};
}

Json serve_check(const std::string& url, const RemoteOptions& options) {
  Json checks = Json::array();
  bool ok = true;
  auto check = [&](const std::string& name, auto&& fn) {
    const auto start = std::chrono::steady_clock::now();
    Json entry = {{"check", name}};
    try {
      entry["detail"] = fn();
      entry["ok"] = true;
    } catch (const Error& e) {
      entry["ok"] = false;
      entry["error"] = error_code_name(e.code());
      entry["message"] = e.what();
      ok = false;
    }
    entry["millis"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    checks.push_back(entry);
  };
  RemoteOracle target(url, ModelRole::kTarget, options);
  RemoteOracle reference(url, ModelRole::kReference, options);
  TokenSequence probe;
  for (auto* oracle : {&target, &reference}) {
    const std::string role = role_name(oracle->info().model_role);
    check("info/" + role, [&] {
      const auto info = oracle->info();
      return Json{{"vocab_size", info.vocab_size},
                  {"mask_token_id", info.mask_token_id},
                  {"max_sequence_length", info.max_sequence_length}};
    });
  }
  check("tokenize", [&] {
    probe = target.tokenize("The quick brown fox jumps over the lazy dog");
    if (probe.tokens.size() < 2) throw Error(ErrorCode::kMalformedResponse, "probe tokenized to < 2 tokens");
    return Json{{"tokens", probe.tokens.size()}};
  });
  if (probe.tokens.size() < 2) return Json{{"url", url}, {"ok", false}, {"checks", checks}};
  std::vector<std::int32_t> all(probe.tokens.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::int32_t>(i);
  std::vector<std::int32_t> half;
  for (std::size_t i = 0; i < all.size(); i += 2) half.push_back(all[i]);
  for (auto* oracle : {&target, &reference}) {
    const std::string role = role_name(oracle->info().model_role);
    check("losses/" + role, [&] {
      const auto a = query_losses(*oracle, probe.tokens, half, all);
      const auto b = query_losses(*oracle, probe.tokens, half, all);
      if (a.values() != b.values()) throw Error(ErrorCode::kMalformedResponse, "repeated query differs");
      return Json{{"mean_loss", a.mean()}, {"repeat_stable", true}};
    });
  }
  check("losses/empty_eval", [&] {
    const auto l = query_losses(target, probe.tokens, half, {});
    if (!l.empty()) throw Error(ErrorCode::kMalformedResponse, "expected no losses");
    return Json{{"losses", 0}};
  });
  check("losses_batch/order", [&] {
    std::vector<std::vector<std::int32_t>> masks = {half, {all.front()}, {all.back()}};
    std::vector<LossQuery> queries;
    for (const auto& m : masks) queries.push_back({probe.tokens, m, all});
    const auto batch = target.position_losses_batch(queries);
    for (std::size_t i = 0; i < queries.size(); ++i) {
      if (batch[i].values() != target.position_losses(queries[i]).values()) {
        throw Error(ErrorCode::kMalformedResponse, "batch result " + std::to_string(i) + " out of order");
      }
    }
    return Json{{"queries", queries.size()}};
  });
  return Json{{"url", url}, {"ok", ok}, {"checks", checks}};
}

}  // namespace dlmaudit
