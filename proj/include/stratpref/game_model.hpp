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

// Domain types shared by every module: strategies, evaluation words, payoff
// descriptions and the declarative GameSpec that drives prompt generation.
// Specs are plain data and round-trip through JSON.

#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "stratpref/error.hpp"

namespace stratpref {

using json = nlohmann::json;

enum class Sentiment { kPositive, kNegative };
enum class GameKind { kValueRank, kPrisonersDilemma, kTravelersDilemma };
enum class Orientation { kMaximize, kMinimize };

inline std::string_view to_string(Sentiment s) {
  return s == Sentiment::kPositive ? "positive" : "negative";
}

inline Sentiment parse_sentiment(std::string_view s) {
  if (s == "positive") return Sentiment::kPositive;
  if (s == "negative") return Sentiment::kNegative;
  throw ValidationError("unknown sentiment '" + std::string(s) + "'");
}

inline std::string_view to_string(GameKind k) {
  switch (k) {
    case GameKind::kValueRank: return "value_rank";
    case GameKind::kPrisonersDilemma: return "pd";
    case GameKind::kTravelersDilemma: return "td";
  }
  return "?";
}

inline GameKind parse_game_kind(std::string_view s) {
  if (s == "value_rank") return GameKind::kValueRank;
  if (s == "pd") return GameKind::kPrisonersDilemma;
  if (s == "td") return GameKind::kTravelersDilemma;
  throw ValidationError("unknown game kind '" + std::string(s) + "'");
}

inline std::string_view to_string(Orientation o) {
  return o == Orientation::kMaximize ? "maximize" : "minimize";
}

inline Orientation parse_orientation(std::string_view s) {
  if (s == "maximize") return Orientation::kMaximize;
  if (s == "minimize") return Orientation::kMinimize;
  throw ValidationError("unknown orientation '" + std::string(s) + "'");
}

struct Strategy {
  std::string id;
  std::string display_label;
  std::optional<int> value;  // points, value-ranking task
  std::optional<int> quote;  // dollars claimed, traveler's dilemma
  // Named text fragments substituted into per-strategy template sections.
  std::map<std::string, std::string> slots;

  bool operator==(const Strategy&) const = default;
};

struct EvaluationWord {
  std::string text;
  Sentiment sentiment = Sentiment::kPositive;

  bool operator==(const EvaluationWord&) const = default;
};

struct Payoff {
  double row = 0;
  double col = 0;

  bool operator==(const Payoff&) const = default;
};

// Two-player bimatrix over strategy ids. cells[r][c] holds (row, col) payoffs.
struct PayoffMatrix {
  std::string name;
  std::vector<std::string> row_strategies;
  std::vector<std::string> col_strategies;
  std::vector<std::vector<Payoff>> cells;
  Orientation orientation = Orientation::kMaximize;

  bool operator==(const PayoffMatrix&) const = default;

  std::size_t row_index(std::string_view id) const { return index_of(row_strategies, id); }
  std::size_t col_index(std::string_view id) const { return index_of(col_strategies, id); }

  const Payoff& at(std::string_view row, std::string_view col) const {
    return cells[row_index(row)][col_index(col)];
  }

  // True when `a` is at least as good as `b` under the matrix orientation.
  bool at_least_as_good(double a, double b) const {
    return orientation == Orientation::kMaximize ? a >= b : a <= b;
  }
  bool better(double a, double b) const {
    return orientation == Orientation::kMaximize ? a > b : a < b;
  }

 private:
  static std::size_t index_of(const std::vector<std::string>& ids, std::string_view id) {
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) throw ValidationError("unknown strategy '" + std::string(id) + "'");
    return static_cast<std::size_t>(it - ids.begin());
  }
};

// Traveler's dilemma parameters: quotes in [quote_min, quote_max], the lower
// quoter gains `penalty`, the higher quoter loses it.
struct TDGame {
  int quote_min = 2;
  int quote_max = 100;
  int penalty = 2;
  bool floor_at_zero = false;

  bool operator==(const TDGame&) const = default;
};

// A template section is either literal text or a fragment repeated once per
// strategy, in label order.
struct TemplateSection {
  enum class Kind { kText, kEach };
  Kind kind = Kind::kText;
  std::string text;

  bool operator==(const TemplateSection&) const = default;
};

// Slots available inside `each` sections and the query: {label}, {Label}
// (first letter capitalised), {value}, {quote}, and any key of
// Strategy::slots. The query is rendered for the evaluated strategy and must
// end where the evaluation word begins.
struct PromptTemplate {
  std::vector<TemplateSection> sections;
  std::string query;

  bool operator==(const PromptTemplate&) const = default;
};

using GamePayoff = std::variant<std::monostate, PayoffMatrix, TDGame>;

struct GameSpec {
  std::string name;
  GameKind kind = GameKind::kValueRank;
  std::vector<Strategy> strategies;
  EvaluationWord positive_word{"best", Sentiment::kPositive};
  EvaluationWord negative_word{"worst", Sentiment::kNegative};
  PromptTemplate prompt;
  GamePayoff payoff;

  bool operator==(const GameSpec&) const = default;

  const EvaluationWord& word(Sentiment s) const {
    return s == Sentiment::kPositive ? positive_word : negative_word;
  }

  std::size_t strategy_index(std::string_view id) const {
    for (std::size_t i = 0; i < strategies.size(); ++i) {
      if (strategies[i].id == id) return i;
    }
    throw ValidationError("game '" + name + "' has no strategy '" + std::string(id) + "'");
  }

  const Strategy& strategy(std::string_view id) const { return strategies[strategy_index(id)]; }

  const PayoffMatrix* matrix() const { return std::get_if<PayoffMatrix>(&payoff); }
  const TDGame* traveler() const { return std::get_if<TDGame>(&payoff); }
};

// ---------------------------------------------------------------------------
// Validation

inline void validate(const TDGame& g) {
  if (g.quote_min < 0) throw ValidationError("quote_min must be >= 0");
  if (g.quote_min >= g.quote_max) throw ValidationError("quote_min must be < quote_max");
  if (g.penalty <= 0) throw ValidationError("penalty must be > 0");
}

inline void validate(const PayoffMatrix& m) {
  if (m.row_strategies.empty() || m.col_strategies.empty()) {
    throw ValidationError("payoff matrix '" + m.name + "' has no strategies");
  }
  if (m.cells.size() != m.row_strategies.size()) {
    throw ValidationError("payoff matrix '" + m.name + "' row count mismatch");
  }
  for (const auto& row : m.cells) {
    if (row.size() != m.col_strategies.size()) {
      throw ValidationError("payoff matrix '" + m.name + "' column count mismatch");
    }
  }
}

inline void validate(const GameSpec& spec) {
  const auto fail = [&](const std::string& why) {
    throw ValidationError("game '" + spec.name + "': " + why);
  };
  if (spec.name.empty()) throw ValidationError("game spec has empty name");
  if (spec.strategies.empty()) fail("no strategies");

  std::set<std::string> ids;
  std::set<std::string> labels;
  for (const auto& s : spec.strategies) {
    if (s.id.empty()) fail("strategy with empty id");
    if (s.display_label.empty()) fail("strategy '" + s.id + "' has empty label");
    if (!ids.insert(s.id).second) fail("duplicate strategy id '" + s.id + "'");
    if (!labels.insert(s.display_label).second) fail("duplicate label '" + s.display_label + "'");
  }
  if (spec.positive_word.text.empty() || spec.negative_word.text.empty()) {
    fail("empty evaluation word");
  }
  if (spec.positive_word.sentiment != Sentiment::kPositive ||
      spec.negative_word.sentiment != Sentiment::kNegative) {
    fail("need exactly one positive and one negative evaluation word");
  }

  switch (spec.kind) {
    case GameKind::kValueRank: {
      if (spec.strategies.size() != 3) fail("value_rank needs exactly 3 strategies");
      std::set<int> values;
      for (const auto& s : spec.strategies) {
        if (!s.value) fail("strategy '" + s.id + "' has no value");
        values.insert(*s.value);
      }
      if (values.size() != 3) fail("value_rank strategy values must be distinct");
      break;
    }
    case GameKind::kPrisonersDilemma:
      if (spec.strategies.size() != 2) fail("pd needs exactly 2 strategies");
      break;
    case GameKind::kTravelersDilemma: {
      if (spec.strategies.size() != 2) fail("td needs exactly 2 strategies");
      std::set<int> quotes;
      for (const auto& s : spec.strategies) {
        if (!s.quote) fail("strategy '" + s.id + "' has no quote");
        quotes.insert(*s.quote);
      }
      if (quotes != std::set<int>{99, 100}) fail("td strategies must quote 99 and 100");
      break;
    }
  }

  if (const auto* m = spec.matrix()) {
    validate(*m);
    for (const auto& s : spec.strategies) {
      (void)m->row_index(s.id);
      (void)m->col_index(s.id);
    }
  }
  if (const auto* td = spec.traveler()) {
    validate(*td);
    for (const auto& s : spec.strategies) {
      if (*s.quote < td->quote_min || *s.quote > td->quote_max) {
        fail("quote of '" + s.id + "' outside the claim range");
      }
    }
  }
  if (spec.prompt.query.empty()) fail("template has no query");
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(json& j, const Strategy& s) {
  j = json{{"id", s.id}, {"label", s.display_label}};
  if (s.value) j["value"] = *s.value;
  if (s.quote) j["quote"] = *s.quote;
  if (!s.slots.empty()) j["slots"] = s.slots;
}

inline void from_json(const json& j, Strategy& s) {
  s.id = j.at("id").get<std::string>();
  s.display_label = j.at("label").get<std::string>();
  s.value = j.contains("value") ? std::optional<int>(j["value"].get<int>()) : std::nullopt;
  s.quote = j.contains("quote") ? std::optional<int>(j["quote"].get<int>()) : std::nullopt;
  s.slots = j.value("slots", std::map<std::string, std::string>{});
}

inline void to_json(json& j, const EvaluationWord& w) {
  j = json{{"text", w.text}, {"sentiment", to_string(w.sentiment)}};
}

inline void from_json(const json& j, EvaluationWord& w) {
  w.text = j.at("text").get<std::string>();
  w.sentiment = parse_sentiment(j.at("sentiment").get<std::string>());
}

inline void to_json(json& j, const PayoffMatrix& m) {
  json cells = json::array();
  for (const auto& row : m.cells) {
    json r = json::array();
    for (const auto& c : row) r.push_back(json::array({c.row, c.col}));
    cells.push_back(std::move(r));
  }
  j = json{{"name", m.name},
           {"orientation", to_string(m.orientation)},
           {"rows", m.row_strategies},
           {"cols", m.col_strategies},
           {"cells", std::move(cells)}};
}

inline void from_json(const json& j, PayoffMatrix& m) {
  m.name = j.value("name", "");
  m.orientation = parse_orientation(j.value("orientation", "maximize"));
  m.row_strategies = j.at("rows").get<std::vector<std::string>>();
  m.col_strategies = j.at("cols").get<std::vector<std::string>>();
  m.cells.clear();
  for (const auto& row : j.at("cells")) {
    std::vector<Payoff> r;
    for (const auto& c : row) r.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    m.cells.push_back(std::move(r));
  }
}

inline void to_json(json& j, const TDGame& g) {
  j = json{{"quote_min", g.quote_min},
           {"quote_max", g.quote_max},
           {"penalty", g.penalty},
           {"floor_at_zero", g.floor_at_zero}};
}

inline void from_json(const json& j, TDGame& g) {
  g.quote_min = j.at("quote_min").get<int>();
  g.quote_max = j.at("quote_max").get<int>();
  g.penalty = j.at("penalty").get<int>();
  g.floor_at_zero = j.value("floor_at_zero", false);
}

inline void to_json(json& j, const PromptTemplate& t) {
  json sections = json::array();
  for (const auto& s : t.sections) {
    sections.push_back(json{{s.kind == TemplateSection::Kind::kText ? "text" : "each", s.text}});
  }
  j = json{{"sections", std::move(sections)}, {"query", t.query}};
}

inline void from_json(const json& j, PromptTemplate& t) {
  t.sections.clear();
  for (const auto& s : j.at("sections")) {
    if (s.contains("text")) {
      t.sections.push_back({TemplateSection::Kind::kText, s["text"].get<std::string>()});
    } else if (s.contains("each")) {
      t.sections.push_back({TemplateSection::Kind::kEach, s["each"].get<std::string>()});
    } else {
      throw ValidationError("template section needs 'text' or 'each'");
    }
  }
  t.query = j.at("query").get<std::string>();
}

inline void to_json(json& j, const GameSpec& g) {
  j = json{{"name", g.name},
           {"kind", to_string(g.kind)},
           {"strategies", g.strategies},
           {"evaluation_words", json::array({g.positive_word, g.negative_word})},
           {"template", g.prompt}};
  if (const auto* m = g.matrix()) j["payoff"] = json{{"matrix", *m}};
  if (const auto* td = g.traveler()) j["payoff"] = json{{"traveler", *td}};
}

inline void from_json(const json& j, GameSpec& g) {
  g.name = j.at("name").get<std::string>();
  g.kind = parse_game_kind(j.at("kind").get<std::string>());
  g.strategies = j.at("strategies").get<std::vector<Strategy>>();
  const auto words = j.at("evaluation_words").get<std::vector<EvaluationWord>>();
  if (words.size() != 2) throw ValidationError("game '" + g.name + "' needs 2 evaluation words");
  const bool pos_first = words[0].sentiment == Sentiment::kPositive;
  g.positive_word = pos_first ? words[0] : words[1];
  g.negative_word = pos_first ? words[1] : words[0];
  g.prompt = j.at("template").get<PromptTemplate>();
  g.payoff = std::monostate{};
  if (j.contains("payoff") && !j["payoff"].is_null()) {
    const auto& p = j["payoff"];
    if (p.contains("matrix")) {
      g.payoff = p["matrix"].get<PayoffMatrix>();
    } else if (p.contains("traveler")) {
      g.payoff = p["traveler"].get<TDGame>();
    } else {
      throw ValidationError("game '" + g.name + "': payoff needs 'matrix' or 'traveler'");
    }
  }
}

// Parses and validates a spec. Accepts a single object or an array of them.
inline std::vector<GameSpec> parse_game_specs(const json& j) {
  std::vector<GameSpec> out;
  try {
    if (j.is_array()) {
      out = j.get<std::vector<GameSpec>>();
    } else {
      out.push_back(j.get<GameSpec>());
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed game spec: ") + e.what());
  }
  for (const auto& g : out) validate(g);
  return out;
}

inline const GameSpec& find_game(std::span<const GameSpec> games, std::string_view name) {
  for (const auto& g : games) {
    if (g.name == name) return g;
  }
  throw ValidationError("unknown game '" + std::string(name) + "'");
}

}  // namespace stratpref
