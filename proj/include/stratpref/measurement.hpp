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

// Scoring prompt instances against log-probability backends and persisting the
// resulting measurements.
//
// A backend returns ln p(continuation | context) for one population member.
// Member 0 is always the unperturbed base model; members 1..N are the
// perturbed population. Two backends ship: RemoteBackend speaks the JSON/HTTP
// wire protocol below, MockBackend is an in-process synthetic agent whose
// behaviour is known by construction.
//
//   POST /v1/population/init  {"size": N, "dropout": r, "seed": s} -> {"members": [1..N]}
//   POST /v1/score            {"context": str, "continuation": str, "member": int}
//                             -> {"logprob": float, "tokens": [{"text": str, "logprob": float}]}
//   GET  /v1/model            -> {"name": str, "param_count": int}

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "stratpref/error.hpp"
#include "stratpref/game_model.hpp"
#include "stratpref/promptgen.hpp"

namespace stratpref {

struct ModelInfo {
  std::string name;
  std::int64_t param_count = 0;

  bool operator==(const ModelInfo&) const = default;
};

struct PopulationSpec {
  int size = 50;
  double dropout_rate = 0.1;
  std::uint64_t seed = 0;

  bool operator==(const PopulationSpec&) const = default;
};

inline void validate(const PopulationSpec& p) {
  if (p.size < 2) throw ValidationError("population size must be >= 2");
  if (!(p.dropout_rate > 0.0 && p.dropout_rate < 1.0)) {
    throw ValidationError("dropout rate must lie in (0, 1)");
  }
}

inline void to_json(json& j, const PopulationSpec& p) {
  j = json{{"size", p.size}, {"dropout", p.dropout_rate}, {"seed", p.seed}};
}

inline void from_json(const json& j, PopulationSpec& p) {
  p.size = j.at("size").get<int>();
  p.dropout_rate = j.value("dropout", 0.1);
  p.seed = j.value("seed", std::uint64_t{0});
}

// ---------------------------------------------------------------------------
// Mock profiles

enum class MockKind { kValueAgent, kLabelAgent, kNoisyPopulationAgent, kBrittleAgent };

inline std::string_view to_string(MockKind k) {
  switch (k) {
    case MockKind::kValueAgent: return "value_agent";
    case MockKind::kLabelAgent: return "label_agent";
    case MockKind::kNoisyPopulationAgent: return "noisy_population_agent";
    case MockKind::kBrittleAgent: return "brittle_agent";
  }
  return "?";
}

inline MockKind parse_mock_kind(std::string_view s) {
  if (s == "value_agent") return MockKind::kValueAgent;
  if (s == "label_agent") return MockKind::kLabelAgent;
  if (s == "noisy_population_agent") return MockKind::kNoisyPopulationAgent;
  if (s == "brittle_agent") return MockKind::kBrittleAgent;
  throw ValidationError("unknown mock kind '" + std::string(s) + "'");
}

// Synthetic agent. The evaluation logit for a (member, instance) is
//
//   sign * beta * gain_m * v(s)  +  label_bias[label]
//     + base_noise_sd * e_ctx + [m > 0] * member_noise_sd * e_member
//     + sentiment_noise_sd * e_word  -  logit_offset
//
// where sign is +1 for the positive word and -1 for the negative word, v(s)
// is the strategy value standardised over the game's strategies, and the e_*
// are standard normals drawn from a hash of the cell. e_ctx and e_member do
// not depend on the evaluation word. The score is log(sigmoid(logit)).
//
// The kind selects the active terms: value_agent uses the value term,
// label_agent the label term, noisy_population_agent both. brittle_agent is a
// value agent whose members lose value-carrying units: each of
// kBrittleUnits units is ablated with probability ablation_prob, and gain_m is
// the surviving fraction (the base model keeps all units).
struct MockProfile {
  MockKind kind = MockKind::kValueAgent;
  double beta = 1.0;
  std::map<std::string, double> label_bias;
  double base_noise_sd = 0.25;
  double member_noise_sd = 0.5;
  double sentiment_noise_sd = 0.1;
  double ablation_prob = 0.0;
  double logit_offset = 1.0;
  // Utility per strategy id; falls back to the strategy's value, then quote.
  std::map<std::string, double> strategy_values;
  std::uint64_t seed = 0;

  bool operator==(const MockProfile&) const = default;
};

inline constexpr int kBrittleUnits = 16;

inline void validate(const MockProfile& p) {
  if (p.base_noise_sd < 0 || p.member_noise_sd < 0 || p.sentiment_noise_sd < 0) {
    throw ValidationError("mock noise scales must be >= 0");
  }
  if (p.kind == MockKind::kBrittleAgent && !(p.ablation_prob > 0 && p.ablation_prob <= 1)) {
    throw ValidationError("brittle_agent needs ablation_prob in (0, 1]");
  }
  if (p.kind == MockKind::kLabelAgent && p.label_bias.empty()) {
    throw ValidationError("label_agent needs a label_bias");
  }
}

inline void to_json(json& j, const MockProfile& p) {
  j = json{{"kind", to_string(p.kind)},
           {"beta", p.beta},
           {"label_bias", p.label_bias},
           {"base_noise_sd", p.base_noise_sd},
           {"member_noise_sd", p.member_noise_sd},
           {"sentiment_noise_sd", p.sentiment_noise_sd},
           {"ablation_prob", p.ablation_prob},
           {"logit_offset", p.logit_offset},
           {"strategy_values", p.strategy_values},
           {"seed", p.seed}};
}

inline void from_json(const json& j, MockProfile& p) {
  const MockProfile d;
  p.kind = parse_mock_kind(j.at("kind").get<std::string>());
  p.beta = j.value("beta", d.beta);
  p.label_bias = j.value("label_bias", d.label_bias);
  p.base_noise_sd = j.value("base_noise_sd", d.base_noise_sd);
  p.member_noise_sd = j.value("member_noise_sd", d.member_noise_sd);
  p.sentiment_noise_sd = j.value("sentiment_noise_sd", d.sentiment_noise_sd);
  p.ablation_prob = j.value("ablation_prob", d.ablation_prob);
  p.logit_offset = j.value("logit_offset", d.logit_offset);
  p.strategy_values = j.value("strategy_values", d.strategy_values);
  p.seed = j.value("seed", d.seed);
}

// ---------------------------------------------------------------------------
// Backend descriptor

struct BackendDescriptor {
  enum class Kind { kRemote, kMock };
  Kind kind = Kind::kMock;
  std::optional<std::string> endpoint;
  std::optional<MockProfile> mock_profile;
  std::string model_name;
  std::int64_t param_count = 0;

  bool operator==(const BackendDescriptor&) const = default;
};

inline void validate(const BackendDescriptor& b) {
  if (b.endpoint.has_value() == b.mock_profile.has_value()) {
    throw ValidationError("backend needs exactly one of endpoint or mock_profile");
  }
  if (b.kind == BackendDescriptor::Kind::kRemote && !b.endpoint) {
    throw ValidationError("remote backend needs an endpoint");
  }
  if (b.kind == BackendDescriptor::Kind::kMock && !b.mock_profile) {
    throw ValidationError("mock backend needs a mock_profile");
  }
  if (b.mock_profile) validate(*b.mock_profile);
}

inline void to_json(json& j, const BackendDescriptor& b) {
  j = json{{"kind", b.kind == BackendDescriptor::Kind::kRemote ? "remote" : "mock"},
           {"model_name", b.model_name},
           {"param_count", b.param_count}};
  if (b.endpoint) j["endpoint"] = *b.endpoint;
  if (b.mock_profile) j["mock_profile"] = *b.mock_profile;
}

inline void from_json(const json& j, BackendDescriptor& b) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "remote") {
    b.kind = BackendDescriptor::Kind::kRemote;
  } else if (kind == "mock") {
    b.kind = BackendDescriptor::Kind::kMock;
  } else {
    throw ValidationError("unknown backend kind '" + kind + "'");
  }
  b.endpoint = j.contains("endpoint") ? std::optional(j["endpoint"].get<std::string>()) : std::nullopt;
  b.mock_profile =
      j.contains("mock_profile") ? std::optional(j["mock_profile"].get<MockProfile>()) : std::nullopt;
  b.model_name = j.value("model_name", "");
  b.param_count = j.value("param_count", std::int64_t{0});
}

// ---------------------------------------------------------------------------
// Backends

struct TokenLogprob {
  std::string text;
  double logprob = 0;
};

struct ScoreResult {
  double logprob = 0;
  std::vector<TokenLogprob> tokens;
};

class ScoringBackend {
 public:
  virtual ~ScoringBackend() = default;

  virtual ModelInfo model_info() = 0;
  // Registers members 1..N; returns their ids.
  virtual std::vector<int> init_population(const PopulationSpec& population) = 0;
  // Throws TransportError (retryable) or BackendError.
  virtual ScoreResult score(const PromptInstance& instance, int member) = 0;
  // True when equal inputs always give bit-identical scores.
  virtual bool deterministic() const = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t mix(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }

// Uniform in [0, 1) from the top 53 bits.
inline double uniform(std::uint64_t key) { return static_cast<double>(splitmix64(key) >> 11) * 0x1.0p-53; }

// Box-Muller on two hashed uniforms. std::normal_distribution is avoided
// because its output differs between standard library implementations.
inline double standard_normal(std::uint64_t key) {
  const std::uint64_t a = splitmix64(key);
  const std::uint64_t b = splitmix64(a);
  const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;          // [0, 1)
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// log(sigmoid(x)) without overflow.
inline double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

}  // namespace detail

class MockBackend final : public ScoringBackend {
 public:
  MockBackend(MockProfile profile, ModelInfo info, std::vector<GameSpec> games)
      : profile_(std::move(profile)), info_(std::move(info)) {
    validate(profile_);
    for (auto& g : games) games_.emplace(g.name, std::move(g));
  }

  ModelInfo model_info() override { return info_; }

  std::vector<int> init_population(const PopulationSpec& population) override {
    validate(population);
    std::lock_guard lock(mu_);
    members_ = population.size;
    std::vector<int> ids;
    for (int m = 1; m <= population.size; ++m) ids.push_back(m);
    return ids;
  }

  ScoreResult score(const PromptInstance& instance, int member) override {
    {
      std::lock_guard lock(mu_);
      if (member < 0 || member > members_) {
        throw BackendError("unknown member " + std::to_string(member));
      }
    }
    const double lp = detail::log_sigmoid(logit(instance, member));
    return {lp, {{instance.continuation, lp}}};
  }

  bool deterministic() const override { return true; }

  const MockProfile& profile() const { return profile_; }

  // Value-signal gain of a member; 1 except for ablated brittle members.
  double gain(int member) const {
    if (profile_.kind != MockKind::kBrittleAgent || member == 0) return 1.0;
    const std::uint64_t key =
        detail::mix(detail::mix(profile_.seed, 0xab1a7e), static_cast<std::uint64_t>(member));
    int kept = 0;
    for (int u = 0; u < kBrittleUnits; ++u) {
      kept += detail::uniform(detail::mix(key, static_cast<std::uint64_t>(u))) < profile_.ablation_prob ? 0 : 1;
    }
    return static_cast<double>(kept) / kBrittleUnits;
  }

  double logit(const PromptInstance& instance, int member) const {
    const auto it = games_.find(instance.game);
    if (it == games_.end()) throw BackendError("mock backend does not know game '" + instance.game + "'");
    const GameSpec& spec = it->second;

    double x = -profile_.logit_offset;
    const bool value_term = profile_.kind != MockKind::kLabelAgent;
    const bool label_term = profile_.kind == MockKind::kLabelAgent ||
                            profile_.kind == MockKind::kNoisyPopulationAgent;
    if (value_term) {
      const double sign = instance.evaluation_word.sentiment == Sentiment::kPositive ? 1.0 : -1.0;
      x += sign * profile_.beta * gain(member) * standardized_value(spec, instance.evaluated_strategy);
    }
    if (label_term) {
      if (auto b = profile_.label_bias.find(instance.label); b != profile_.label_bias.end()) x += b->second;
    }

    std::uint64_t cell = detail::mix(profile_.seed, detail::fnv1a(instance.game));
    cell = detail::mix(cell, instance.permutation.label_order);
    cell = detail::mix(cell, instance.permutation.assignment);
    cell = detail::mix(cell, detail::fnv1a(instance.evaluated_strategy));
    const std::uint64_t ctx_key = detail::mix(cell, 0xc0);
    x += profile_.base_noise_sd * detail::standard_normal(ctx_key);
    if (member > 0) {
      const std::uint64_t member_key = detail::mix(detail::mix(cell, 0x3e), static_cast<std::uint64_t>(member));
      x += profile_.member_noise_sd * detail::standard_normal(member_key);
    }
    std::uint64_t word_key = detail::mix(detail::mix(cell, 0x5e), static_cast<std::uint64_t>(member));
    word_key = detail::mix(word_key, detail::fnv1a(instance.evaluation_word.text));
    x += profile_.sentiment_noise_sd * detail::standard_normal(word_key);
    return x;
  }

 private:
  double raw_value(const Strategy& s) const {
    if (auto it = profile_.strategy_values.find(s.id); it != profile_.strategy_values.end()) return it->second;
    if (s.value) return *s.value;
    if (s.quote) return *s.quote;
    return 0.0;
  }

  double standardized_value(const GameSpec& spec, const std::string& id) const {
    double mean = 0;
    for (const auto& s : spec.strategies) mean += raw_value(s);
    mean /= static_cast<double>(spec.strategies.size());
    double var = 0;
    for (const auto& s : spec.strategies) var += (raw_value(s) - mean) * (raw_value(s) - mean);
    var /= static_cast<double>(spec.strategies.size());
    if (var <= 0) return 0.0;
    return (raw_value(spec.strategy(id)) - mean) / std::sqrt(var);
  }

  MockProfile profile_;
  ModelInfo info_;
  std::map<std::string, GameSpec> games_;
  mutable std::mutex mu_;
  int members_ = 0;
};

class RemoteBackend final : public ScoringBackend {
 public:
  explicit RemoteBackend(std::string endpoint, std::chrono::seconds timeout = std::chrono::seconds(60))
      : endpoint_(std::move(endpoint)), timeout_(timeout) {}

  ModelInfo model_info() override {
    const json body = request("GET", "/v1/model", nullptr);
    try {
      return {body.at("name").get<std::string>(), body.at("param_count").get<std::int64_t>()};
    } catch (const json::exception& e) {
      throw BackendError(std::string("malformed /v1/model response: ") + e.what());
    }
  }

  std::vector<int> init_population(const PopulationSpec& population) override {
    validate(population);
    const json req = population;
    const json body = request("POST", "/v1/population/init", &req);
    std::vector<int> members;
    try {
      members = body.at("members").get<std::vector<int>>();
    } catch (const json::exception& e) {
      throw BackendError(std::string("malformed /v1/population/init response: ") + e.what());
    }
    std::vector<int> expected;
    for (int m = 1; m <= population.size; ++m) expected.push_back(m);
    if (members != expected) throw BackendError("backend registered unexpected member ids");
    return members;
  }

  ScoreResult score(const PromptInstance& instance, int member) override {
    const json req{{"context", instance.rendered_context},
                   {"continuation", instance.continuation},
                   {"member", member}};
    return parse_score_response(request("POST", "/v1/score", &req));
  }

  bool deterministic() const override { return false; }

  // Validates a /v1/score payload.
  static ScoreResult parse_score_response(const json& body) {
    ScoreResult out;
    try {
      if (!body.at("logprob").is_number()) throw BackendError("logprob is not a number");
      out.logprob = body["logprob"].get<double>();
      if (body.contains("tokens")) {
        for (const auto& t : body["tokens"]) {
          out.tokens.push_back({t.at("text").get<std::string>(), t.at("logprob").get<double>()});
        }
      }
    } catch (const json::exception& e) {
      throw BackendError(std::string("malformed /v1/score response: ") + e.what());
    }
    if (!std::isfinite(out.logprob) || out.logprob > 0) {
      throw BackendError("malformed /v1/score response: logprob must be finite and <= 0");
    }
    if (!out.tokens.empty()) {
      double sum = 0;
      for (const auto& t : out.tokens) sum += t.logprob;
      if (std::abs(sum - out.logprob) > 1e-5) {
        throw BackendError("malformed /v1/score response: token logprobs do not sum to total");
      }
    }
    return out;
  }

 private:
  json request(const std::string& method, const std::string& path, const json* body) {
    httplib::Client client(endpoint_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Result res = method == "GET"
                              ? client.Get(path)
                              : client.Post(path, body ? body->dump() : std::string("{}"), "application/json");
    if (!res) {
      throw TransportError(endpoint_ + path + ": " + httplib::to_string(res.error()));
    }
    if (res->status >= 500) {
      throw TransportError(endpoint_ + path + ": HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
      std::string detail = res->body;
      try {
        detail = json::parse(res->body).value("error", res->body);
      } catch (const json::exception&) {
      }
      throw BackendError(endpoint_ + path + ": HTTP " + std::to_string(res->status) + ": " + detail);
    }
    try {
      return json::parse(res->body);
    } catch (const json::exception& e) {
      throw BackendError(endpoint_ + path + ": response is not JSON: " + e.what());
    }
  }

  std::string endpoint_;
  std::chrono::seconds timeout_;
};

inline std::unique_ptr<ScoringBackend> make_backend(const BackendDescriptor& d, std::vector<GameSpec> games) {
  validate(d);
  if (d.kind == BackendDescriptor::Kind::kRemote) return std::make_unique<RemoteBackend>(*d.endpoint);
  return std::make_unique<MockBackend>(*d.mock_profile, ModelInfo{d.model_name, d.param_count},
                                       std::move(games));
}

// ---------------------------------------------------------------------------
// Measurement records and store

struct MeasurementRecord {
  std::string experiment_id;
  std::string game;
  PermutationId permutation;
  std::string evaluated_strategy;
  std::string label;
  Sentiment sentiment = Sentiment::kPositive;
  int member_id = 0;
  double logprob = 0;
  std::int64_t timestamp = 0;  // unix milliseconds; 0 for deterministic backends

  bool operator==(const MeasurementRecord&) const = default;
};

using RecordKey = std::tuple<std::string, int, std::string, std::size_t, std::size_t, std::string, int>;

inline RecordKey key_of(const MeasurementRecord& r) {
  return {r.experiment_id, r.member_id, r.game, r.permutation.label_order, r.permutation.assignment,
          r.evaluated_strategy, static_cast<int>(r.sentiment)};
}

// Canonical store order: experiment, game, member, sentiment, permutation, strategy.
inline bool canonical_less(const MeasurementRecord& a, const MeasurementRecord& b) {
  return std::tie(a.experiment_id, a.game, a.member_id, a.sentiment, a.permutation, a.evaluated_strategy) <
         std::tie(b.experiment_id, b.game, b.member_id, b.sentiment, b.permutation, b.evaluated_strategy);
}

inline std::string to_jsonl_line(const MeasurementRecord& r) {
  nlohmann::ordered_json j;
  j["experiment_id"] = r.experiment_id;
  j["game"] = r.game;
  j["permutation"] = {{"label_order", r.permutation.label_order}, {"assignment", r.permutation.assignment}};
  j["evaluated_strategy"] = r.evaluated_strategy;
  j["label"] = r.label;
  j["sentiment"] = to_string(r.sentiment);
  j["member_id"] = r.member_id;
  j["logprob"] = r.logprob;
  j["timestamp"] = r.timestamp;
  return j.dump();
}

inline MeasurementRecord record_from_json(const json& j) {
  MeasurementRecord r;
  r.experiment_id = j.at("experiment_id").get<std::string>();
  r.game = j.at("game").get<std::string>();
  r.permutation = {j.at("permutation").at("label_order").get<std::size_t>(),
                   j.at("permutation").at("assignment").get<std::size_t>()};
  r.evaluated_strategy = j.at("evaluated_strategy").get<std::string>();
  r.label = j.at("label").get<std::string>();
  r.sentiment = parse_sentiment(j.at("sentiment").get<std::string>());
  r.member_id = j.at("member_id").get<int>();
  r.logprob = j.at("logprob").get<double>();
  r.timestamp = j.at("timestamp").get<std::int64_t>();
  return r;
}

// Append-only set of records keyed by cell. One writer at a time; commit
// writes a temporary file and renames it over the target.
class MeasurementStore {
 public:
  MeasurementStore() = default;
  MeasurementStore(MeasurementStore&& other) noexcept {
    std::lock_guard lock(other.mu_);
    records_ = std::move(other.records_);
    keys_ = std::move(other.keys_);
  }
  MeasurementStore& operator=(MeasurementStore&& other) noexcept {
    if (this != &other) {
      std::scoped_lock lock(mu_, other.mu_);
      records_ = std::move(other.records_);
      keys_ = std::move(other.keys_);
    }
    return *this;
  }

  static MeasurementStore load(const std::filesystem::path& path) {
    MeasurementStore store;
    if (!std::filesystem::exists(path)) return store;
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        store.append(record_from_json(json::parse(line)));
      } catch (const json::exception& e) {
        throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    return store;
  }

  bool contains(const RecordKey& key) const {
    std::lock_guard lock(mu_);
    return keys_.contains(key);
  }

  // Returns false when the cell is already present.
  bool append(MeasurementRecord r) {
    std::lock_guard lock(mu_);
    if (!keys_.insert(key_of(r)).second) return false;
    records_.push_back(std::move(r));
    return true;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return records_.size();
  }

  std::vector<MeasurementRecord> records() const {
    std::lock_guard lock(mu_);
    auto out = records_;
    std::sort(out.begin(), out.end(), canonical_less);
    return out;
  }

  void commit(const std::filesystem::path& path) const {
    const auto sorted = records();
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot write " + tmp.string());
      for (const auto& r : sorted) out << to_jsonl_line(r) << '\n';
      if (!out.flush()) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }

 private:
  mutable std::mutex mu_;
  std::vector<MeasurementRecord> records_;
  std::set<RecordKey> keys_;
};

// ---------------------------------------------------------------------------
// Sweeps

struct SweepOptions {
  std::string experiment_id;
  std::size_t max_in_flight = 8;
  int max_retries = 3;
  std::chrono::milliseconds retry_backoff{50};
};

// Scores every (member, instance) cell for members 0..population.size that
// `store` does not already hold, then appends them. Throws SweepAborted, with
// `store` untouched, if any cell is still unscored after retries.
inline std::size_t run_sweep(ScoringBackend& backend, const PopulationSpec& population,
                             std::span<const PromptInstance> instances, MeasurementStore& store,
                             const SweepOptions& options) {
  validate(population);
  struct Cell {
    int member;
    std::size_t instance;
  };
  std::vector<Cell> cells;
  for (int m = 0; m <= population.size; ++m) {
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto& p = instances[i];
      const RecordKey key{options.experiment_id, m, p.game, p.permutation.label_order,
                          p.permutation.assignment, p.evaluated_strategy,
                          static_cast<int>(p.evaluation_word.sentiment)};
      if (!store.contains(key)) cells.push_back({m, i});
    }
  }
  if (cells.empty()) return 0;

  const bool stamp = !backend.deterministic();
  std::vector<std::optional<MeasurementRecord>> results(cells.size());
  std::vector<std::string> errors(cells.size());
  std::atomic<std::size_t> next{0};

  const auto worker = [&] {
    for (std::size_t c = next++; c < cells.size(); c = next++) {
      const auto& p = instances[cells[c].instance];
      for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        try {
          const ScoreResult s = backend.score(p, cells[c].member);
          MeasurementRecord r;
          r.experiment_id = options.experiment_id;
          r.game = p.game;
          r.permutation = p.permutation;
          r.evaluated_strategy = p.evaluated_strategy;
          r.label = p.label;
          r.sentiment = p.evaluation_word.sentiment;
          r.member_id = cells[c].member;
          r.logprob = s.logprob;
          r.timestamp = stamp ? std::chrono::duration_cast<std::chrono::milliseconds>(
                                    std::chrono::system_clock::now().time_since_epoch())
                                    .count()
                              : 0;
          results[c] = std::move(r);
          break;
        } catch (const TransportError& e) {
          errors[c] = e.what();
          if (attempt < options.max_retries) std::this_thread::sleep_for(options.retry_backoff);
        } catch (const Error& e) {
          errors[c] = e.what();
          break;
        }
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(options.max_in_flight, 1, cells.size());
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  std::size_t missing = 0;
  std::string first_error;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (results[c]) continue;
    if (missing++ == 0) {
      first_error = "member " + std::to_string(cells[c].member) + ", " + instances[cells[c].instance].game +
                    "/" + instances[cells[c].instance].evaluated_strategy + ": " + errors[c];
    }
  }
  if (missing > 0) {
    throw SweepAborted("sweep aborted: " + std::to_string(missing) + " of " + std::to_string(cells.size()) +
                       " cells unscored after " + std::to_string(options.max_retries) +
                       " retries; first failure: " + first_error);
  }
  for (auto& r : results) store.append(std::move(*r));
  return cells.size();
}

}  // namespace stratpref
