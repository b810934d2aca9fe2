// Copyright 2026 The stratpref Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment configuration and the batch runner behind the CLI. A run writes
// one directory:
//
//   manifest.json          config, resolved games, backend, model, config hash
//   measurements.jsonl     the measurement store
//   species_report.json    when the run includes a value_rank game
//   preferences.json       relation per strategy pair and game
//   member_rho.csv, preferences.csv, member_rho.svg
//
// Everything except the manifest and the store is recomputed from the store by
// write_reports, so reports can be regenerated without a backend.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "stratpref/builtin_games.hpp"
#include "stratpref/error.hpp"
#include "stratpref/game_model.hpp"
#include "stratpref/measurement.hpp"
#include "stratpref/preference.hpp"
#include "stratpref/promptgen.hpp"
#include "stratpref/report.hpp"

namespace stratpref {

struct ExperimentConfig {
  std::string experiment_id = "experiment";
  std::vector<std::string> games;
  std::vector<std::filesystem::path> game_files;  // extra GameSpec JSON files
  BackendDescriptor backend;
  PopulationSpec population;
  std::optional<std::string> positive_word;  // overrides every game's words
  std::optional<std::string> negative_word;
  double alpha = kDefaultAlpha;
  double threshold = kDefaultThreshold;
  TestKind test = TestKind::kRankSum;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  std::size_t max_in_flight = 8;
  int max_retries = 3;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

inline json parse_json_file(const std::filesystem::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

}  // namespace detail

// Relative game_files resolve against `base` (the config file's directory).
inline ExperimentConfig parse_config(const json& j, const std::filesystem::path& base = {}) {
  ExperimentConfig c;
  try {
    c.experiment_id = j.value("experiment_id", c.experiment_id);
    c.games = j.at("games").get<std::vector<std::string>>();
    for (const auto& f : j.value("game_files", std::vector<std::string>{})) {
      std::filesystem::path p(f);
      c.game_files.push_back(p.is_relative() && !base.empty() ? base / p : p);
    }
    c.seed = j.value("seed", std::uint64_t{0});
    c.backend = j.at("backend").get<BackendDescriptor>();
    if (c.backend.mock_profile && !j.at("backend").at("mock_profile").contains("seed")) {
      c.backend.mock_profile->seed = c.seed;
    }
    c.population = j.at("population").get<PopulationSpec>();
    if (!j.at("population").contains("seed")) c.population.seed = c.seed;
    if (j.contains("evaluation_words")) {
      const auto& w = j["evaluation_words"];
      if (w.contains("positive")) c.positive_word = w["positive"].get<std::string>();
      if (w.contains("negative")) c.negative_word = w["negative"].get<std::string>();
    }
    c.alpha = j.value("alpha", c.alpha);
    c.threshold = j.value("threshold", c.threshold);
    c.test = parse_test_kind(j.value("test", std::string(to_string(c.test))));
    c.out_dir = j.value("out", c.out_dir.string());
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.max_retries = j.value("max_retries", c.max_retries);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(detail::parse_json_file(path), path.parent_path());
}

// Builtins plus the config's game files, restricted to the requested names in
// request order, with evaluation-word overrides applied.
inline std::vector<GameSpec> resolve_games(const ExperimentConfig& c) {
  std::vector<GameSpec> pool = builtin_games();
  for (const auto& f : c.game_files) {
    for (auto& g : parse_game_specs(detail::parse_json_file(f))) {
      const auto same = [&](const GameSpec& x) { return x.name == g.name; };
      std::erase_if(pool, same);
      pool.push_back(std::move(g));
    }
  }
  std::vector<GameSpec> out;
  for (const auto& name : c.games) {
    GameSpec g = find_game(pool, name);
    if (c.positive_word) g.positive_word.text = *c.positive_word;
    if (c.negative_word) g.negative_word.text = *c.negative_word;
    validate(g);
    check_template(g);
    out.push_back(std::move(g));
  }
  return out;
}

inline void validate(const ExperimentConfig& c) {
  if (c.experiment_id.empty()) throw ValidationError("experiment_id must be non-empty");
  if (c.games.empty()) throw ValidationError("config lists no games");
  if (!(c.alpha > 0 && c.alpha < 1)) throw ValidationError("alpha must lie in (0, 1)");
  if (!(c.threshold > 0 && c.threshold < 1)) throw ValidationError("threshold must lie in (0, 1)");
  if (c.max_in_flight == 0) throw ValidationError("max_in_flight must be >= 1");
  if (c.max_retries < 0) throw ValidationError("max_retries must be >= 0");
  if (c.positive_word && c.positive_word->empty()) throw ValidationError("positive word must be non-empty");
  if (c.negative_word && c.negative_word->empty()) throw ValidationError("negative word must be non-empty");
  validate(c.backend);
  if (c.backend.mock_profile) validate(*c.backend.mock_profile);
  validate(c.population);
  resolve_games(c);
}

// Semantic content of a config: everything that can change a measurement or a
// verdict. Output location and throughput knobs are excluded.
inline json semantic_json(const ExperimentConfig& c) {
  json games = json::array();
  for (const auto& g : resolve_games(c)) games.push_back(g);
  return json{{"experiment_id", c.experiment_id}, {"games", games},
              {"backend", c.backend},             {"population", c.population},
              {"alpha", c.alpha},                 {"threshold", c.threshold},
              {"test", to_string(c.test)},        {"seed", c.seed}};
}

inline std::string config_hash(const ExperimentConfig& c) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << detail::fnv1a(semantic_json(c).dump());
  return ss.str();
}

// ---------------------------------------------------------------------------
// Analysis

struct ExperimentAnalysis {
  std::optional<SpeciesReport> species;
  std::vector<GamePreferences> preferences;
};

inline ExperimentAnalysis analyze(std::span<const MeasurementRecord> records, std::span<const GameSpec> games,
                                  const ModelInfo& model, double alpha, double threshold, TestKind test) {
  ExperimentAnalysis out;
  for (const auto& g : games) {
    if (g.kind == GameKind::kValueRank && !out.species) out.species = species_report(records, g, model, threshold);
    out.preferences.push_back({g.name, relation_matrix(records, g, alpha, test)});
  }
  return out;
}

inline nlohmann::ordered_json preferences_json(const ExperimentAnalysis& a, TestKind test) {
  nlohmann::ordered_json j;
  j["test"] = to_string(test);
  auto games = nlohmann::ordered_json::array();
  for (const auto& g : a.preferences) {
    nlohmann::ordered_json entry;
    entry["game"] = g.game;
    auto rel = nlohmann::ordered_json::array();
    for (const auto& o : g.outcomes) rel.push_back(to_ordered_json(o));
    entry["relations"] = std::move(rel);
    games.push_back(std::move(entry));
  }
  j["games"] = std::move(games);
  return j;
}

struct Manifest {
  std::string status;
  std::string config_hash;
  std::string experiment_id;
  ModelInfo model;
  std::vector<GameSpec> games;
  double alpha = kDefaultAlpha;
  double threshold = kDefaultThreshold;
  TestKind test = TestKind::kRankSum;
  json raw;
};

inline Manifest read_manifest(const std::filesystem::path& dir) {
  Manifest m;
  m.raw = detail::parse_json_file(dir / "manifest.json");
  try {
    m.status = m.raw.at("status").get<std::string>();
    m.config_hash = m.raw.at("config_hash").get<std::string>();
    m.experiment_id = m.raw.at("experiment_id").get<std::string>();
    m.model = {m.raw.at("model").at("name").get<std::string>(), m.raw.at("model").at("param_count").get<std::int64_t>()};
    m.games = m.raw.at("games").get<std::vector<GameSpec>>();
    m.alpha = m.raw.at("alpha").get<double>();
    m.threshold = m.raw.at("threshold").get<double>();
    m.test = parse_test_kind(m.raw.at("test").get<std::string>());
  } catch (const json::exception& e) {
    throw ValidationError((dir / "manifest.json").string() + ": " + e.what());
  }
  return m;
}

// Recomputes every report in `dir` from manifest.json and measurements.jsonl.
inline ExperimentAnalysis write_reports(const std::filesystem::path& dir) {
  const Manifest m = read_manifest(dir);
  const auto store = MeasurementStore::load(dir / "measurements.jsonl");
  const auto records = store.records();
  const auto a = analyze(records, m.games, m.model, m.alpha, m.threshold, m.test);
  if (a.species) {
    auto j = to_ordered_json(*a.species);
    detail::write_file(dir / "species_report.json", j.dump(2) + "\n");
    detail::write_file(dir / "member_rho.csv", member_rho_csv(*a.species));
    const SpeciesRegistryEntry e = registry_entry(*a.species);
    detail::write_file(dir / "member_rho.svg", species_rho_svg(std::span(&e, 1), m.threshold));
  }
  detail::write_file(dir / "preferences.json", preferences_json(a, m.test).dump(2) + "\n");
  detail::write_file(dir / "preferences.csv", preferences_csv(a.preferences));
  return a;
}

struct RunOptions {
  bool overwrite = false;
  std::ostream* log = nullptr;
};

struct RunResult {
  std::filesystem::path dir;
  std::string config_hash;
  std::size_t records = 0;
  std::size_t scored = 0;  // cells scored in this invocation (0 on a full cache hit)
  ExperimentAnalysis analysis;
};

// Validates before touching the filesystem. A completed experiment directory
// is left alone unless `overwrite` is set; an unfinished one with the same
// config hash is resumed from its store.
inline RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {}) {
  validate(config);
  const auto games = resolve_games(config);
  const std::string hash = config_hash(config);
  const auto& dir = config.out_dir;
  const auto manifest_path = dir / "manifest.json";
  const auto store_path = dir / "measurements.jsonl";

  if (std::filesystem::exists(manifest_path) && !options.overwrite) {
    const Manifest old = read_manifest(dir);
    if (old.status == "complete") {
      throw ValidationError(dir.string() + " holds a completed experiment; pass the overwrite flag to replace it");
    }
    if (old.config_hash != hash) {
      throw ValidationError(dir.string() + " holds an unfinished experiment with a different config");
    }
  }

  auto backend = make_backend(config.backend, games);
  const ModelInfo model = backend->model_info();
  backend->init_population(config.population);

  std::filesystem::create_directories(dir);
  if (options.overwrite) {
    for (const char* f : {"measurements.jsonl", "species_report.json", "preferences.json", "member_rho.csv",
                          "preferences.csv", "member_rho.svg"}) {
      std::filesystem::remove(dir / f);
    }
  }

  nlohmann::ordered_json manifest;
  manifest["experiment_id"] = config.experiment_id;
  manifest["status"] = "running";
  manifest["config_hash"] = hash;
  manifest["model"] = {{"name", model.name}, {"param_count", model.param_count}};
  manifest["backend"] = json(config.backend);
  manifest["population"] = json(config.population);
  manifest["alpha"] = config.alpha;
  manifest["threshold"] = config.threshold;
  manifest["test"] = to_string(config.test);
  manifest["seed"] = config.seed;
  manifest["games"] = json(games);
  detail::write_file(manifest_path, manifest.dump(2) + "\n");

  MeasurementStore store = MeasurementStore::load(store_path);
  SweepOptions sweep;
  sweep.experiment_id = config.experiment_id;
  sweep.max_in_flight = config.max_in_flight;
  sweep.max_retries = config.max_retries;
  RunResult result;
  result.dir = dir;
  result.config_hash = hash;
  for (const auto& g : games) {
    const auto instances = expand_both(g);
    const std::size_t n = run_sweep(*backend, config.population, instances, store, sweep);
    result.scored += n;
    if (options.log) *options.log << g.name << ": scored " << n << " cells\n";
  }
  store.commit(store_path);
  result.records = store.size();

  result.analysis = write_reports(dir);
  manifest["status"] = "complete";
  manifest["record_count"] = result.records;
  detail::write_file(manifest_path, manifest.dump(2) + "\n");
  return result;
}

// Registry entry for a completed experiment directory with a value_rank game.
inline SpeciesRegistryEntry registry_entry(const std::filesystem::path& dir) {
  const Manifest m = read_manifest(dir);
  const auto records = MeasurementStore::load(dir / "measurements.jsonl").records();
  for (const auto& g : m.games) {
    if (g.kind == GameKind::kValueRank) return registry_entry(species_report(records, g, m.model, m.threshold));
  }
  throw ValidationError(dir.string() + " has no value_rank game");
}

}  // namespace stratpref
