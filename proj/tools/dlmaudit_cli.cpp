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

// Command-line front end over the C interface.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dlmaudit/dlmaudit.h"

namespace {

struct Owned {
  char* p = nullptr;
  ~Owned() { dlma_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct Options {
  std::string config;
  std::string out;
  std::string seed;
  int workers = 0;
  std::string oracle;
  std::string url;
  std::string attacks;
  std::vector<std::string> overrides;
  bool null_world = false;
  std::string scores;
  int timeout_ms = 0;
};

std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

int report_error(dlma_status status) {
  std::fprintf(stderr, "error (%s): %s\n", dlma_status_string(status), dlma_last_error());
  return 1;
}

void add_common(CLI::App* cmd, Options& o, bool with_attacks) {
  cmd->add_option("--config", o.config, "experiment config JSON file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "global seed (default 42)");
  cmd->add_option("--workers", o.workers, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--oracle", o.oracle, "oracle backend")->check(CLI::IsMember({"synthetic", "remote"}));
  cmd->add_option("--url", o.url, "model server URL (falls back to $DLM_MIA_URL)");
  cmd->add_option("--set", o.overrides, "dotted key=value override, repeatable");
  if (with_attacks) cmd->add_option("--attacks", o.attacks, "comma-separated attack names");
}

/// Resolves the configuration and prints its digest. Returns false on error.
bool resolve(const Options& o, std::string& config_json) {
  std::vector<std::string> overrides = o.overrides;
  if (!o.seed.empty()) overrides.push_back("seed=" + o.seed);
  if (!o.oracle.empty()) overrides.push_back("oracle.backend=" + json_string(o.oracle));
  if (!o.url.empty()) overrides.push_back("oracle.url=" + json_string(o.url));
  if (o.null_world) overrides.push_back("oracle.synthetic_world.null_world=true");
  if (!o.out.empty()) overrides.push_back("output_dir=" + json_string(o.out));

  auto attempt = [&](const std::vector<std::string>& ov, Owned& json, Owned& digest) {
    std::vector<const char*> argv;
    for (const auto& s : ov) argv.push_back(s.c_str());
    return dlma_config_resolve(o.config.empty() ? nullptr : o.config.c_str(),
                               o.attacks.empty() ? nullptr : o.attacks.c_str(), argv.data(),
                               argv.size(), &json.p, &digest.p);
  };
  Owned json, digest;
  dlma_status st = attempt(overrides, json, digest);
  if (st == DLMA_CONFIG_ERROR && o.url.empty()) {
    // A remote backend without a URL may still be completed from the environment.
    const char* env = std::getenv("DLM_MIA_URL");
    if (env && *env) {
      overrides.push_back(std::string("oracle.url=") + json_string(env));
      Owned json2, digest2;
      st = attempt(overrides, json2, digest2);
      std::swap(json.p, json2.p);
      std::swap(digest.p, digest2.p);
    }
  }
  if (st != DLMA_OK) {
    report_error(st);
    return false;
  }
  std::printf("config digest: %s\n", digest.str().c_str());
  config_json = json.str();
  return true;
}

std::string output_dir(const std::string& config_json) {
  return nlohmann::json::parse(config_json).value("output_dir", std::string("out"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Membership-inference auditing for masked-diffusion language models"};
  app.require_subcommand(1);
  Owned help;
  if (dlma_attack_help(&help.p) == DLMA_OK) app.footer("Attacks and defaults:\n" + help.str());

  Options o;
  auto* synth = app.add_subcommand("synth-world", "materialise a synthetic world and its calibration report");
  add_common(synth, o, false);
  synth->add_option("--out", o.out, "output directory")->required();
  synth->add_flag("--null-world", o.null_world, "no membership signal and no domain effect");

  auto* run = app.add_subcommand("run", "run attacks and write scores, metrics and ROC files");
  add_common(run, o, true);
  run->add_option("--out", o.out, "output directory (default: output_dir from the config)");
  run->footer("Exit status: 0 success, 2 some samples failed, 1 configuration or fatal error.\n"
              "Attacks and defaults:\n" + help.str());

  auto* metrics = app.add_subcommand("metrics", "AUC, TPR@FPR and ROC files from a scores CSV");
  add_common(metrics, o, false);
  metrics->add_option("scores", o.scores, "scores CSV")->required()->check(CLI::ExistingFile);
  metrics->add_option("--out", o.out, "output directory (default: next to the scores file)");

  auto* diag = app.add_subcommand("diagnose", "distribution of token-level loss differences");
  add_common(diag, o, true);
  diag->add_option("--scores", o.scores, "optional scores CSV to summarise")->check(CLI::ExistingFile);
  diag->add_option("--out", o.out, "write diagnostics.json here instead of stdout");

  auto* check = app.add_subcommand("serve-check", "probe a model server for protocol conformance");
  check->add_option("--url", o.url, "model server URL (falls back to $DLM_MIA_URL)");
  check->add_option("--timeout-ms", o.timeout_ms, "request timeout")->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  std::string config;
  if (*synth) {
    if (!resolve(o, config)) return 1;
    Owned report;
    const auto st = dlma_synth_world(config.c_str(), o.out.c_str(), o.workers, &report.p);
    if (st != DLMA_OK) return report_error(st);
    const auto j = nlohmann::json::parse(report.str());
    std::printf("wrote %s/{samples.ndjson,shots.ndjson,world.json,calibration.json}\n", o.out.c_str());
    std::printf("calibration within bands: %s\n",
                j["calibration"]["within_bands"].get<bool>() ? "yes" : "no");
    return 0;
  }
  if (*run) {
    if (!resolve(o, config)) return 1;
    Owned summary, table;
    const std::string dir = output_dir(config);
    const auto st = dlma_run_experiment(config.c_str(), dir.c_str(), o.workers, &summary.p, &table.p);
    if (st != DLMA_OK && st != DLMA_PARTIAL_FAILURE) return report_error(st);
    std::printf("%s", table.str().c_str());
    std::printf("wrote %s/{scores.csv,metrics.json,summary.json}\n", dir.c_str());
    if (st == DLMA_PARTIAL_FAILURE) {
      std::fprintf(stderr, "warning: %s\n", dlma_last_error());
      return 2;
    }
    return 0;
  }
  if (*metrics) {
    const std::string out = o.out;
    o.out.clear();
    if (!resolve(o, config)) return 1;
    Owned json, table;
    const auto st = dlma_metrics(config.c_str(), o.scores.c_str(), out.empty() ? nullptr : out.c_str(),
                                 &json.p, &table.p);
    if (st != DLMA_OK) return report_error(st);
    std::printf("%s", table.str().c_str());
    return 0;
  }
  if (*diag) {
    const std::string out = o.out;
    o.out.clear();
    if (!resolve(o, config)) return 1;
    Owned report;
    const auto st = dlma_diagnose(config.c_str(), o.scores.empty() ? nullptr : o.scores.c_str(),
                                  o.workers, &report.p);
    if (st != DLMA_OK) return report_error(st);
    if (out.empty()) {
      std::printf("%s\n", report.str().c_str());
    } else {
      std::FILE* f = std::fopen(out.c_str(), "w");
      if (!f) {
        std::fprintf(stderr, "error: cannot write %s\n", out.c_str());
        return 1;
      }
      std::fprintf(f, "%s\n", report.str().c_str());
      std::fclose(f);
      std::printf("wrote %s\n", out.c_str());
    }
    return 0;
  }
  if (*check) {
    std::string url = o.url;
    if (url.empty()) {
      const char* env = std::getenv("DLM_MIA_URL");
      if (env) url = env;
    }
    if (url.empty()) {
      std::fprintf(stderr, "error: serve-check needs --url or DLM_MIA_URL\n");
      return 1;
    }
    Owned report;
    const auto st = dlma_serve_check(url.c_str(), o.timeout_ms, &report.p);
    std::printf("%s\n", report.str().c_str());
    if (st != DLMA_OK) return report_error(st);
    return 0;
  }
  return 1;
}
