// Copyright 2026 The aisguard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fnmatch.h>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "aisguard/ais_ingest.hpp"
#include "aisguard/checksum.hpp"
#include "aisguard/detect.hpp"
#include "aisguard/errors.hpp"
#include "aisguard/geojson.hpp"
#include "aisguard/nn/checkpoint.hpp"
#include "aisguard/nn/train.hpp"
#include "aisguard/preprocess.hpp"
#include "aisguard/sequence.hpp"
#include "aisguard/synthetic.hpp"

namespace aisguard {

inline constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Run configuration: a flat key=value table. "auto" model values resolve from
// the chosen variant.

class RunConfig {
 public:
  static const std::vector<std::pair<std::string, std::string>>& defaults() {
    static const std::vector<std::pair<std::string, std::string>> d{
        {"input_dir", "data"},
        {"input_pattern", "*.csv"},
        {"work_dir", "work"},
        {"min_length", "20"},
        {"tolerance_s", "60"},
        {"min_entries", "20"},
        {"max_fill", "20"},
        {"max_missing_fraction", "0.3"},
        {"test_fraction", "0.2"},
        {"val_fraction", "0.2"},
        {"split_by_vessel", "false"},
        {"seed", "42"},
        {"variant", "bidirectional_recurrent"},
        {"cell", "gru"},
        {"bidirectional", "auto"},
        {"layers", "auto"},
        {"hidden", "auto"},
        {"dropout", "auto"},
        {"recurrent_dropout", "auto"},
        {"dense_dropout", "auto"},
        {"gru_convention", "update_gates_candidate"},
        {"epochs", "auto"},
        {"batch_size", "256"},
        {"learning_rate", "0.001"},
        {"mask_sentinel_loss", "false"},
        {"threads", "1"},
        {"k", "6"},
        {"min_appearances", "5"},
        {"bins", "50"},
        {"score_split", "test"},
        {"per_feature", "false"},
        {"select", "outliers"},
        {"synth_vessels", "100"},
        {"synth_days", "20"},
        {"synth_anomaly_fraction", "0.02"},
    };
    return d;
  }

  RunConfig() {
    for (const auto& [k, v] : defaults()) values_[k] = v;
  }

  bool has(const std::string& key) const { return values_.contains(key); }

  void set(const std::string& key, const std::string& value) {
    if (!has(key)) throw ConfigError("unknown configuration key: " + key);
    values_[key] = std::string(detail::trim(value));
  }

  const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown configuration key: " + key);
    return it->second;
  }

  double real(const std::string& key) const {
    auto v = detail::parse_finite(str(key));
    if (!v) throw ConfigError(key + " must be a number, got '" + str(key) + "'");
    return *v;
  }

  std::uint64_t count(const std::string& key) const {
    const auto& s = str(key);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
      throw ConfigError(key + " must be a non-negative integer, got '" + s + "'");
    }
    return v;
  }

  bool flag(const std::string& key) const {
    const auto& s = str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError(key + " must be true or false, got '" + s + "'");
  }

  bool is_auto(const std::string& key) const { return str(key) == "auto"; }

  /// key=value lines; blank lines and '#' comments are ignored.
  void load(std::istream& in, const std::string& origin = "config") {
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      auto t = detail::trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(origin + ":" + std::to_string(n) + ": expected key=value");
      }
      set(std::string(detail::trim(t.substr(0, eq))), std::string(t.substr(eq + 1)));
    }
  }

  void load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    load(in, path.string());
  }

  /// Every key in canonical order, with "auto" values resolved.
  void print(std::ostream& os) const {
    const auto resolved = resolved_values();
    for (const auto& [k, _] : defaults()) os << k << '=' << resolved.at(k) << '\n';
  }

  std::map<std::string, std::string> resolved_values() const {
    auto out = values_;
    const auto m = model_config();
    out["bidirectional"] = m.bidirectional ? "true" : "false";
    out["layers"] = std::to_string(m.layers);
    out["hidden"] = std::to_string(m.hidden);
    out["dropout"] = format_double(m.dropout_rate);
    out["recurrent_dropout"] = format_double(m.recurrent_dropout_rate);
    out["dense_dropout"] = format_double(m.dense_dropout_rate);
    out["epochs"] = std::to_string(epochs());
    return out;
  }

  nn::ModelConfig model_config() const {
    nn::CellKind kind;
    if (str("cell") == "gru") kind = nn::CellKind::kGru;
    else if (str("cell") == "simple_rnn") kind = nn::CellKind::kSimpleRnn;
    else throw ConfigError("cell must be gru or simple_rnn");

    nn::ModelConfig c;
    if (str("variant") == "stacked") c = nn::ModelConfig::stacked(kind);
    else if (str("variant") == "bidirectional_recurrent") c = nn::ModelConfig::bidirectional_recurrent(kind);
    else throw ConfigError("variant must be stacked or bidirectional_recurrent");

    if (!is_auto("bidirectional")) c.bidirectional = flag("bidirectional");
    if (!is_auto("layers")) c.layers = count("layers");
    if (!is_auto("hidden")) c.hidden = count("hidden");
    if (!is_auto("dropout")) c.dropout_rate = real("dropout");
    if (!is_auto("recurrent_dropout")) c.recurrent_dropout_rate = real("recurrent_dropout");
    if (!is_auto("dense_dropout")) c.dense_dropout_rate = real("dense_dropout");
    if (str("gru_convention") == "update_gates_candidate") {
      c.gru_convention = nn::GruConvention::kUpdateGatesCandidate;
    } else if (str("gru_convention") == "update_gates_previous") {
      c.gru_convention = nn::GruConvention::kUpdateGatesPrevious;
    } else {
      throw ConfigError("gru_convention must be update_gates_candidate or update_gates_previous");
    }
    c.timesteps = kSlotsPerDay;
    c.features = kFeatureCount;
    c.validate();
    return c;
  }

  std::size_t epochs() const {
    if (is_auto("epochs")) return str("variant") == "stacked" ? 10 : 5;
    return count("epochs");
  }

  PreprocessConfig preprocess_config() const {
    PreprocessConfig p;
    p.tolerance = std::chrono::seconds{static_cast<long>(count("tolerance_s"))};
    p.min_entries = count("min_entries");
    p.max_fill = count("max_fill");
    p.max_missing_fraction = real("max_missing_fraction");
    if (p.min_entries > kSlotsPerDay) throw ConfigError("min_entries cannot exceed 48");
    if (p.max_missing_fraction < 0.0 || p.max_missing_fraction > 1.0) {
      throw ConfigError("max_missing_fraction must lie in [0, 1]");
    }
    return p;
  }

  SplitSpec split_spec() const {
    SplitSpec s{real("test_fraction"), real("val_fraction"), count("seed"), flag("split_by_vessel")};
    s.validate();
    return s;
  }

  std::filesystem::path work() const { return str("work_dir"); }

 private:
  std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// Stage bookkeeping

/// Per-stage provenance record: config snapshot, checksums and timing.
class StageManifest {
 public:
  StageManifest(std::string stage, const RunConfig& cfg)
      : stage_(std::move(stage)), cfg_(cfg), start_(std::chrono::steady_clock::now()) {}

  void input(const std::filesystem::path& p) { inputs_.push_back(p); }
  void output(const std::filesystem::path& p) { outputs_.push_back(p); }

  void write() const {
    const auto dir = cfg_.work() / "manifests";
    std::filesystem::create_directories(dir);
    std::ofstream os(dir / (stage_ + ".txt"));
    if (!os) throw IoError("cannot write manifest for " + stage_);
    os << "stage=" << stage_ << '\n' << "tool_version=" << kToolVersion << '\n';
    os << std::fixed << std::setprecision(3) << "wall_seconds="
       << std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count() << '\n';
    for (const auto& p : inputs_) os << "input " << sha256_file(p) << ' ' << p.generic_string() << '\n';
    for (const auto& p : outputs_) os << "output " << sha256_file(p) << ' ' << p.generic_string() << '\n';
    os << "[config]\n";
    cfg_.print(os);
  }

 private:
  std::string stage_;
  const RunConfig& cfg_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::filesystem::path> inputs_, outputs_;
};

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

inline void require(const std::filesystem::path& p, const std::string& hint) {
  if (!std::filesystem::exists(p)) throw DataError(p.string() + " not found; run '" + hint + "' first");
}

inline std::vector<std::filesystem::path> matching_inputs(const RunConfig& cfg) {
  const std::filesystem::path dir = cfg.str("input_dir");
  if (!std::filesystem::is_directory(dir)) throw DataError("input directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    if (fnmatch(cfg.str("input_pattern").c_str(), e.path().filename().c_str(), 0) == 0) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw DataError("no input files match '" + cfg.str("input_pattern") + "' in " + dir.string());
  }
  return files;
}

inline std::string split_file(const std::string& name) {
  if (name == "all") return "corpus.bin";
  if (name == "train" || name == "validation" || name == "test") return name + ".bin";
  throw ConfigError("score_split must be all, train, validation or test");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stages. Each reads and writes files under work_dir and prints a summary.

inline void cmd_synth(const RunConfig& cfg, std::ostream& log) {
  SyntheticSpec spec;
  spec.vessels = cfg.count("synth_vessels");
  spec.days = cfg.count("synth_days");
  spec.anomaly_fraction = cfg.real("synth_anomaly_fraction");
  spec.seed = cfg.count("seed");
  if (spec.vessels < 1 || spec.days < 1) throw ConfigError("synth_vessels and synth_days must be positive");
  const auto corpus = generate_synthetic(spec);
  const auto files = write_synthetic_csvs(corpus, cfg.str("input_dir"));
  log << "synth: " << corpus.records.size() << " records in " << files.size() << " files, "
      << corpus.anomalies.size() << " labeled anomalies\n";
}

inline void cmd_ingest(const RunConfig& cfg, std::ostream& log) {
  StageManifest man("ingest", cfg);
  const double min_length = cfg.real("min_length");
  std::filesystem::create_directories(cfg.work());

  IngestReport rep;
  std::vector<AisRecord> all;
  for (const auto& f : detail::matching_inputs(cfg)) {
    std::ifstream in(f);
    if (!in) throw IoError("cannot open " + f.string());
    auto parsed = parse_ais_csv(in);
    rep.merge(parsed.report);
    all.insert(all.end(), parsed.records.begin(), parsed.records.end());
    man.input(f);
  }
  const auto before = distinct_mmsis(all);
  auto kept = filter_by_length(all, min_length);
  const auto after = distinct_mmsis(kept);
  rep.vessels_kept = after.size();
  rep.vessels_dropped_by_length = before.size() - after.size();
  rep.records_dropped_by_length = all.size() - kept.size();
  auto grouped = group_and_sort(kept);
  rep.duplicate_timestamps = grouped.duplicate_timestamps;
  if (grouped.tracks.empty()) throw DataError("no records survive ingest and the length filter");

  const auto w = cfg.work();
  {
    auto out = detail::open_out(w / "tracks.csv");
    write_tracks_csv(out, grouped.tracks);
  }
  {
    auto out = detail::open_out(w / "ingest_report.txt");
    rep.write_key_value(out);
  }
  {
    auto out = detail::open_out(w / "ingest_report.csv");
    rep.write_csv(out);
  }
  for (const char* f : {"tracks.csv", "ingest_report.txt", "ingest_report.csv"}) man.output(w / f);
  man.write();
  log << "ingest: " << rep.rows_read << " rows, " << rep.rows_rejected << " rejected, " << rep.vessels_kept
      << " vessels kept, " << rep.vessels_dropped_by_length << " dropped by length, "
      << rep.duplicate_timestamps << " duplicate timestamps\n";
}

inline void cmd_preprocess(const RunConfig& cfg, std::ostream& log) {
  StageManifest man("preprocess", cfg);
  const auto w = cfg.work();
  detail::require(w / "tracks.csv", "ingest");
  const auto pcfg = cfg.preprocess_config();
  std::ifstream in(w / "tracks.csv");
  auto parsed = parse_ais_csv(in);
  man.input(w / "tracks.csv");
  const auto grouped = group_and_sort(parsed.records);

  PreprocessTally tally;
  const auto grids = build_daily_grids(grouped.tracks, pcfg, tally);
  if (grids.empty()) throw DataError("no vessel-day survives preprocessing");
  const auto stats = compute_global_stats(grids);
  const auto days = normalize_all(grids, stats, pcfg, &tally);
  const auto set = assemble(days);

  save_sequence_set(w / "corpus.bin", set);
  save_stats(w / "stats.txt", stats);
  {
    auto out = detail::open_out(w / "preprocess_report.txt");
    out << "days_considered=" << tally.days_considered << '\n'
        << "dropped_sparse=" << tally.dropped_sparse << '\n'
        << "dropped_missing=" << tally.dropped_missing << '\n'
        << "kept=" << tally.kept << '\n'
        << "clamped_cells=" << tally.clamped_cells << '\n';
    for (std::size_t i = 0; i <= kSlotsPerDay; ++i) {
      if (tally.missing_slots_histogram[i]) out << "missing_slots." << i << '=' << tally.missing_slots_histogram[i] << '\n';
    }
  }
  for (const char* f : {"corpus.bin", "corpus_ids.csv", "stats.txt", "preprocess_report.txt"}) man.output(w / f);
  man.write();
  log << "preprocess: " << tally.days_considered << " vessel-days, " << tally.dropped_sparse << " sparse, "
      << tally.dropped_missing << " over the missing limit, " << set.size() << " kept\n";
}

inline void cmd_split(const RunConfig& cfg, std::ostream& log) {
  StageManifest man("split", cfg);
  const auto w = cfg.work();
  detail::require(w / "corpus.bin", "preprocess");
  const auto spec = cfg.split_spec();
  const auto set = load_sequence_set(w / "corpus.bin");
  man.input(w / "corpus.bin");
  const auto parts = split(set, spec);
  save_sequence_set(w / "train.bin", parts.train);
  save_sequence_set(w / "validation.bin", parts.validation);
  save_sequence_set(w / "test.bin", parts.test);
  {
    auto out = detail::open_out(w / "split_manifest.txt");
    out << "total=" << set.size() << "\ntrain=" << parts.train.size()
        << "\nvalidation=" << parts.validation.size() << "\ntest=" << parts.test.size()
        << "\nseed=" << spec.seed << "\nby_vessel=" << (spec.by_vessel ? "true" : "false") << '\n';
  }
  for (const char* f : {"train.bin", "validation.bin", "test.bin", "split_manifest.txt"}) man.output(w / f);
  man.write();
  log << "split: " << parts.train.size() << " train, " << parts.validation.size() << " validation, "
      << parts.test.size() << " test\n";
}

inline void cmd_train(const RunConfig& cfg, std::ostream& log) {
  StageManifest man("train", cfg);
  const auto w = cfg.work();
  detail::require(w / "train.bin", "split");
  const auto model_cfg = cfg.model_config();
  const auto train_set = load_sequence_set(w / "train.bin");
  const auto val_set = load_sequence_set(w / "validation.bin");
  man.input(w / "train.bin");
  man.input(w / "validation.bin");

  nn::TrainOptions opt;
  opt.epochs = cfg.epochs();
  opt.batch_size = cfg.count("batch_size");
  opt.seed = cfg.count("seed");
  opt.threads = std::max<std::uint64_t>(1, cfg.count("threads"));
  opt.loss.mask_sentinel = cfg.flag("mask_sentinel_loss");

  auto params = nn::ModelParams::initialized(model_cfg, opt.seed);
  nn::AdamState adam;
  adam.learning_rate = cfg.real("learning_rate");
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");

  const auto ckdir = w / "checkpoints";
  std::filesystem::create_directories(ckdir);
  nn::TrainingHistory done;
  opt.on_epoch = [&](const nn::EpochRecord& r, const nn::ModelParams& p, const nn::AdamState& a) {
    done.push_back(r);
    char name[32];
    std::snprintf(name, sizeof(name), "epoch_%03zu.ckpt", r.epoch);
    nn::save_checkpoint(ckdir / name, p, &a);
    log << "epoch " << r.epoch << ": train_loss " << detail::g17(r.train_loss);
    if (r.val_loss) log << ", val_loss " << detail::g17(*r.val_loss);
    log << '\n';
  };

  auto finish = [&] {
    nn::save_checkpoint(w / "model.ckpt", params, &adam);
    {
      auto out = detail::open_out(w / "model_manifest.txt");
      const double tl = done.empty() ? 0.0 : done.back().train_loss;
      nn::write_checkpoint_manifest(out, model_cfg, opt.seed, done.size(), tl,
                                    done.empty() ? std::nullopt : done.back().val_loss);
    }
    {
      auto out = detail::open_out(w / "history.csv");
      nn::write_history_csv(out, done);
    }
    for (const char* f : {"model.ckpt", "model_manifest.txt", "history.csv"}) man.output(w / f);
    man.write();
  };
  try {
    nn::train(params, adam, {train_set.tensor, train_set.size()}, {val_set.tensor, val_set.size()}, opt);
  } catch (const NumericError&) {
    finish();  // keep the last good epoch on disk
    throw;
  }
  finish();
  log << "train: " << done.size() << " epochs, model written to " << (w / "model.ckpt").string() << '\n';
}

inline void cmd_score(const RunConfig& cfg, std::ostream& log) {
  StageManifest man("score", cfg);
  const auto w = cfg.work();
  load_stats(w / "stats.txt");  // scoring is meaningless without the training-time scaling
  detail::require(w / "model.ckpt", "train");
  const auto data = w / detail::split_file(cfg.str("score_split"));
  detail::require(data, cfg.str("score_split") == "all" ? "preprocess" : "split");
  const auto ck = nn::load_checkpoint(w / "model.ckpt");
  const auto set = load_sequence_set(data);
  man.input(w / "stats.txt");
  man.input(w / "model.ckpt");
  man.input(data);
  const bool masked = cfg.flag("mask_sentinel_loss");
  const auto scores = score_set(ck.model, set, {masked, cfg.flag("per_feature")});
  {
    auto out = detail::open_out(w / "scores.csv");
    write_scores_csv(out, scores, masked);
  }
  man.output(w / "scores.csv");
  man.write();
  log << "score: " << scores.size() << " vessel-days scored from " << data.filename().string() << '\n';
}

inline std::vector<ScoreRecord> load_scores(const std::filesystem::path& p) {
  detail::require(p, "score");
  std::ifstream in(p);
  auto s = read_scores_csv(in);
  if (s.empty()) throw DataError("scores file is empty: " + p.string());
  return s;
}

inline void cmd_report(const RunConfig& cfg, std::ostream& log) {
  StageManifest man("report", cfg);
  const auto w = cfg.work();
  const auto scores = load_scores(w / "scores.csv");
  man.input(w / "scores.csv");
  const auto dist = fit_distribution(scores, cfg.count("bins"));
  const auto outliers = flag_outliers(scores, dist, cfg.real("k"));
  const auto offenders = offender_frequency(outliers, cfg.count("min_appearances"));
  {
    auto out = detail::open_out(w / "histogram.csv");
    write_histogram_csv(out, dist);
  }
  {
    auto out = detail::open_out(w / "outliers.csv");
    write_outliers_csv(out, outliers);
  }
  {
    auto out = detail::open_out(w / "offenders.csv");
    write_offenders_csv(out, offenders);
  }
  {
    auto out = detail::open_out(w / "summary.txt");
    out << "count=" << dist.count << "\nmean=" << detail::g17(dist.mean) << "\nstd=" << detail::g17(dist.std)
        << "\nk=" << detail::g17(outliers.k) << "\nthreshold=" << detail::g17(outliers.threshold)
        << "\nflagged=" << outliers.flagged.size() << "\npersistent_offenders=" << offenders.persistent.size()
        << '\n';
  }
  for (const char* f : {"histogram.csv", "outliers.csv", "offenders.csv", "summary.txt"}) man.output(w / f);
  man.write();
  log << "report: mean " << detail::g17(dist.mean) << ", std " << detail::g17(dist.std) << ", threshold "
      << detail::g17(outliers.threshold) << ", " << outliers.flagged.size() << " flagged, "
      << offenders.persistent.size() << " persistent offenders\n";
}

inline void cmd_export_geojson(const RunConfig& cfg, std::ostream& log) {
  StageManifest man("export-geojson", cfg);
  const auto w = cfg.work();
  const auto stats = load_stats(w / "stats.txt");
  const auto scores = load_scores(w / "scores.csv");
  const auto data = w / detail::split_file(cfg.str("score_split"));
  const auto set = load_sequence_set(data);
  man.input(w / "stats.txt");
  man.input(w / "scores.csv");
  man.input(data);

  std::vector<DayId> selection;
  const auto& sel = cfg.str("select");
  if (sel == "outliers") {
    const auto rep = flag_outliers(scores, fit_distribution(scores, cfg.count("bins")), cfg.real("k"));
    for (const auto& s : rep.flagged) selection.push_back({s.mmsi, s.day});
  } else if (sel == "all") {
    for (const auto& s : scores) selection.push_back({s.mmsi, s.day});
  } else {
    throw ConfigError("select must be outliers or all");
  }
  const auto gj = export_geojson(set, stats, scores, selection);
  {
    auto out = detail::open_out(w / "export.geojson");
    out << gj.dump(2) << '\n';
  }
  man.output(w / "export.geojson");
  man.write();
  log << "export-geojson: " << selection.size() << " LineStrings\n";
}

/// ingest through export-geojson in one go.
inline void cmd_run(const RunConfig& cfg, std::ostream& log) {
  cmd_ingest(cfg, log);
  cmd_preprocess(cfg, log);
  cmd_split(cfg, log);
  cmd_train(cfg, log);
  cmd_score(cfg, log);
  cmd_report(cfg, log);
  cmd_export_geojson(cfg, log);
}

}  // namespace aisguard
