// Copyright 2026 The aisguard Authors
// SPDX-License-Identifier: Apache-2.0

// aisguard command line: one subcommand per pipeline stage.

#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "aisguard/pipeline.hpp"

namespace {

using Stage = std::function<void(const aisguard::RunConfig&, std::ostream&)>;

std::string dashed(std::string s) {
  for (auto& c : s) c = c == '_' ? '-' : c;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  using aisguard::ExitCode;

  CLI::App app{"aisguard: AIS vessel-day anomaly detection with recurrent autoencoders"};
  app.set_version_flag("--version", aisguard::kToolVersion);
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::string config_file;
  bool print_config = false;
  bool deterministic = false;
  app.add_option("--config", config_file, "key=value configuration file")->check(CLI::ExistingFile);
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");
  app.add_flag("--deterministic", deterministic, "force single-threaded training");

  std::map<std::string, std::optional<std::string>> overrides;
  for (const auto& [key, def] : aisguard::RunConfig::defaults()) {
    auto& slot = overrides[key];
    std::string names = "--" + key;
    if (dashed(key) != key) names += ",--" + dashed(key);
    app.add_option(names, slot, "default: " + def)->group("Configuration");
  }

  const std::vector<std::pair<std::string, Stage>> stages{
      {"synth", aisguard::cmd_synth},
      {"ingest", aisguard::cmd_ingest},
      {"preprocess", aisguard::cmd_preprocess},
      {"split", aisguard::cmd_split},
      {"train", aisguard::cmd_train},
      {"score", aisguard::cmd_score},
      {"report", aisguard::cmd_report},
      {"export-geojson", aisguard::cmd_export_geojson},
      {"run", aisguard::cmd_run},
  };
  const std::map<std::string, std::string> help{
      {"synth", "write a synthetic AIS corpus with labeled teleport anomalies into input_dir"},
      {"ingest", "parse, validate and length-filter AIS CSV files"},
      {"preprocess", "resample to 30-minute vessel-days, interpolate and normalize"},
      {"split", "partition vessel-days into train, validation and test"},
      {"train", "train the recurrent autoencoder"},
      {"score", "reconstruction RMSE per vessel-day"},
      {"report", "score histogram, outliers and repeat offenders"},
      {"export-geojson", "write selected vessel-days as GeoJSON LineStrings"},
      {"run", "every stage from ingest to export-geojson"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, _] : stages) subs[name] = app.add_subcommand(name, help.at(name));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  try {
    aisguard::RunConfig cfg;
    if (!config_file.empty()) cfg.load_file(config_file);
    for (const auto& [key, value] : overrides) {
      if (value) cfg.set(key, *value);
    }
    if (deterministic) cfg.set("threads", "1");
    cfg.model_config();  // reject a bad model description before any work

    if (print_config) {
      cfg.print(std::cout);
      return 0;
    }
    for (const auto& [name, fn] : stages) {
      if (subs[name]->parsed()) {
        fn(cfg, std::cout);
        return 0;
      }
    }
    std::cerr << app.help();
    return static_cast<int>(ExitCode::kUsage);
  } catch (const aisguard::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kData);
  }
}
