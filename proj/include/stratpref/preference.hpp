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

// Classification layer over committed measurements: value-based preference
// (VBP), self-consistency, brittleness, label sensitivity, and the
// preference relation built from independent best-word and worst-word tests.

#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "stratpref/error.hpp"
#include "stratpref/game_model.hpp"
#include "stratpref/measurement.hpp"
#include "stratpref/promptgen.hpp"
#include "stratpref/stats.hpp"

namespace stratpref {

inline constexpr double kDefaultThreshold = 0.3;
inline constexpr double kDefaultAlpha = 0.05;

struct VBPVerdict {
  double rho_pos = 0;
  double rho_neg = 0;
  bool has_vbp = false;
  bool self_consistent = false;
};

namespace detail {

inline void require_complete(std::span<const MeasurementRecord> records, const GameSpec& spec, Sentiment s,
                             std::string_view what) {
  const std::size_t k = spec.strategies.size();
  const std::size_t expected = factorial(k) * factorial(k) * k;
  std::set<std::tuple<std::size_t, std::size_t, std::string>> cells;
  for (const auto& r : records) {
    if (r.game == spec.name && r.sentiment == s) {
      cells.insert({r.permutation.label_order, r.permutation.assignment, r.evaluated_strategy});
    }
  }
  if (cells.size() != expected) {
    throw IncompleteDesignError(std::string(what) + ": " + std::to_string(cells.size()) + " of " +
                                std::to_string(expected) + " " + std::string(to_string(s)) +
                                " cells present for game '" + spec.name + "'");
  }
}

}  // namespace detail

// Spearman correlation of strategy value against evaluation-word score, per
// sentiment, over one member's records.
inline VBPVerdict classify_vbp(std::span<const MeasurementRecord> records, const GameSpec& spec,
                               double threshold = kDefaultThreshold) {
  std::set<int> members;
  for (const auto& r : records) {
    if (r.game == spec.name) members.insert(r.member_id);
  }
  if (members.size() > 1) throw ValidationError("classify_vbp expects records of a single member");
  detail::require_complete(records, spec, Sentiment::kPositive, "classify_vbp");
  detail::require_complete(records, spec, Sentiment::kNegative, "classify_vbp");

  std::vector<double> values[2];
  std::vector<double> scores[2];
  for (const auto& r : records) {
    if (r.game != spec.name) continue;
    const auto& s = spec.strategy(r.evaluated_strategy);
    if (!s.value) throw ValidationError("strategy '" + s.id + "' has no value");
    const int side = r.sentiment == Sentiment::kPositive ? 0 : 1;
    values[side].push_back(*s.value);
    scores[side].push_back(r.logprob);
  }
  VBPVerdict v;
  v.rho_pos = stats::spearman(values[0], scores[0]).rho;
  v.rho_neg = stats::spearman(values[1], scores[1]).rho;
  v.has_vbp = v.rho_pos >= threshold;
  v.self_consistent = v.has_vbp && v.rho_neg <= -threshold;
  return v;
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw ValidationError("median of empty list");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// Population VBP: median member rho_pos reaches the threshold.
inline bool population_has_vbp(std::span<const VBPVerdict> members, double threshold = kDefaultThreshold) {
  std::vector<double> rhos;
  for (const auto& m : members) rhos.push_back(m.rho_pos);
  return median(std::move(rhos)) >= threshold;
}

// Brittle: the base model has VBP but its population does not.
inline bool classify_brittleness(const VBPVerdict& base, std::span<const VBPVerdict> members,
                                 double threshold = kDefaultThreshold) {
  if (members.size() < 2) throw ValidationError("brittleness needs at least 2 population members");
  return base.has_vbp && !population_has_vbp(members, threshold);
}

// Kruskal-Wallis over the records grouped by displayed label. Callers choose
// the slice (typically the base model's positive-word records).
inline stats::TestResult label_sensitivity(std::span<const MeasurementRecord> records) {
  std::map<std::string, std::vector<double>> by_label;
  for (const auto& r : records) by_label[r.label].push_back(r.logprob);
  if (by_label.size() < 2) throw ValidationError("label sensitivity needs at least 2 labels");
  std::vector<std::vector<double>> groups;
  for (auto& [label, xs] : by_label) groups.push_back(std::move(xs));
  return stats::kruskal_wallis(groups);
}

// ---------------------------------------------------------------------------
// Preference relation

enum class Decision { kLeft, kRight, kIndifferent };

enum class Relation { kStrictLeft, kStrictRight, kWeakLeft, kWeakRight, kIndifferent };

inline std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::kLeft: return "left";
    case Decision::kRight: return "right";
    case Decision::kIndifferent: return "indifferent";
  }
  return "?";
}

inline std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::kStrictLeft: return "strict_left";
    case Relation::kStrictRight: return "strict_right";
    case Relation::kWeakLeft: return "weak_left";
    case Relation::kWeakRight: return "weak_right";
    case Relation::kIndifferent: return "indifferent";
  }
  return "?";
}

inline Relation mirror(Relation r) {
  switch (r) {
    case Relation::kStrictLeft: return Relation::kStrictRight;
    case Relation::kStrictRight: return Relation::kStrictLeft;
    case Relation::kWeakLeft: return Relation::kWeakRight;
    case Relation::kWeakRight: return Relation::kWeakLeft;
    case Relation::kIndifferent: return Relation::kIndifferent;
  }
  return r;
}

// Combines the best-word decision and the worst-word decision (both already
// expressed as "which side is preferred"): agreement is strict, one
// indifferent side gives a weak preference toward the decided side, and
// conflict or double indifference is indifference.
inline Relation combine(Decision best, Decision worst) {
  if (best == worst) {
    if (best == Decision::kLeft) return Relation::kStrictLeft;
    if (best == Decision::kRight) return Relation::kStrictRight;
    return Relation::kIndifferent;
  }
  if (best == Decision::kIndifferent) return worst == Decision::kLeft ? Relation::kWeakLeft : Relation::kWeakRight;
  if (worst == Decision::kIndifferent) return best == Decision::kLeft ? Relation::kWeakLeft : Relation::kWeakRight;
  return Relation::kIndifferent;
}

enum class TestKind { kRankSum, kSignedRank };

inline std::string_view to_string(TestKind k) { return k == TestKind::kRankSum ? "rank_sum" : "signed_rank"; }

inline TestKind parse_test_kind(std::string_view s) {
  if (s == "rank_sum") return TestKind::kRankSum;
  if (s == "signed_rank") return TestKind::kSignedRank;
  throw ValidationError("unknown test '" + std::string(s) + "'");
}

struct PreferenceOutcome {
  std::string left;
  std::string right;
  Relation relation = Relation::kIndifferent;
  Decision best_decision = Decision::kIndifferent;
  Decision worst_decision = Decision::kIndifferent;
  stats::TestResult pos_test;
  stats::TestResult neg_test;
  double alpha = kDefaultAlpha;
};

namespace detail {

inline stats::TestResult two_sample(std::span<const double> l, std::span<const double> m, TestKind kind) {
  if (kind == TestKind::kRankSum) return stats::rank_sum(l, m);
  std::vector<double> diffs(l.size());
  for (std::size_t i = 0; i < l.size(); ++i) diffs[i] = l[i] - m[i];
  return stats::signed_rank(diffs);
}

// Which side scores higher, if significantly so.
inline Decision higher_side(const stats::TestResult& t, double alpha) {
  if (!(t.p_value < alpha) || t.statistic == t.expected) return Decision::kIndifferent;
  return t.statistic > t.expected ? Decision::kLeft : Decision::kRight;
}

}  // namespace detail

// Best-word scores favour the higher side; worst-word scores are read
// inverted, so a higher worst probability marks the anti-preferred side.
inline PreferenceOutcome build_relation(std::string left, std::string right, std::span<const double> pos_left,
                                        std::span<const double> pos_right, std::span<const double> neg_left,
                                        std::span<const double> neg_right, double alpha = kDefaultAlpha,
                                        TestKind kind = TestKind::kRankSum) {
  if (pos_left.size() != pos_right.size() || neg_left.size() != neg_right.size() ||
      pos_left.size() != neg_left.size()) {
    throw ValidationError("build_relation needs member-paired lists of equal length");
  }
  if (pos_left.empty()) throw ValidationError("build_relation needs non-empty measurement lists");
  if (!(alpha > 0 && alpha < 1)) throw ValidationError("alpha must lie in (0, 1)");
  PreferenceOutcome out;
  out.left = std::move(left);
  out.right = std::move(right);
  out.alpha = alpha;
  out.pos_test = detail::two_sample(pos_left, pos_right, kind);
  out.neg_test = detail::two_sample(neg_left, neg_right, kind);
  out.best_decision = detail::higher_side(out.pos_test, alpha);
  const Decision worst_higher = detail::higher_side(out.neg_test, alpha);
  out.worst_decision = worst_higher == Decision::kLeft    ? Decision::kRight
                       : worst_higher == Decision::kRight ? Decision::kLeft
                                                          : Decision::kIndifferent;
  out.relation = combine(out.best_decision, out.worst_decision);
  return out;
}

// One outcome per unordered strategy pair (spec order), over population
// members 1..N paired by (member, permutation). Falls back to every member
// when the records hold only the base model.
inline std::vector<PreferenceOutcome> relation_matrix(std::span<const MeasurementRecord> records,
                                                      const GameSpec& spec, double alpha = kDefaultAlpha,
                                                      TestKind kind = TestKind::kRankSum) {
  bool any_population = false;
  for (const auto& r : records) any_population |= r.game == spec.name && r.member_id > 0;

  using CellKey = std::tuple<int, std::size_t, std::size_t>;  // member, order, assignment
  std::map<std::pair<std::string, int>, std::map<CellKey, double>> table;
  std::set<int> members;
  for (const auto& r : records) {
    if (r.game != spec.name || (any_population && r.member_id == 0)) continue;
    members.insert(r.member_id);
    table[{r.evaluated_strategy, static_cast<int>(r.sentiment)}]
         [{r.member_id, r.permutation.label_order, r.permutation.assignment}] = r.logprob;
  }
  const std::size_t perms = factorial(spec.strategies.size());
  const std::size_t expected = members.size() * perms * perms;
  if (members.empty()) throw IncompleteDesignError("no measurements for game '" + spec.name + "'");

  const auto column = [&](const std::string& id, Sentiment s) {
    const auto it = table.find({id, static_cast<int>(s)});
    if (it == table.end() || it->second.size() != expected) {
      throw IncompleteDesignError("incomplete " + std::string(to_string(s)) + " measurements for '" + id +
                                  "' in game '" + spec.name + "'");
    }
    std::vector<double> out;
    out.reserve(expected);
    for (const auto& [key, v] : it->second) out.push_back(v);
    return out;
  };

  std::vector<PreferenceOutcome> out;
  for (std::size_t i = 0; i < spec.strategies.size(); ++i) {
    for (std::size_t j = i + 1; j < spec.strategies.size(); ++j) {
      const auto& l = spec.strategies[i].id;
      const auto& m = spec.strategies[j].id;
      out.push_back(build_relation(l, m, column(l, Sentiment::kPositive), column(m, Sentiment::kPositive),
                                   column(l, Sentiment::kNegative), column(m, Sentiment::kNegative), alpha,
                                   kind));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Species report

struct SpeciesReport {
  std::string model_name;
  std::int64_t param_count = 0;
  VBPVerdict base_verdict;
  std::vector<VBPVerdict> member_verdicts;  // members 1..N in order
  bool population_has_vbp = false;
  bool brittle = false;
  stats::TestResult label_sensitivity;
};

inline std::vector<MeasurementRecord> select(std::span<const MeasurementRecord> records, std::string_view game,
                                             int member) {
  std::vector<MeasurementRecord> out;
  for (const auto& r : records) {
    if (r.game == game && r.member_id == member) out.push_back(r);
  }
  return out;
}

// Base verdict from member 0, member verdicts computed per member before any
// aggregation, label sensitivity from the base model's positive-word scores.
inline SpeciesReport species_report(std::span<const MeasurementRecord> records, const GameSpec& spec,
                                    const ModelInfo& model, double threshold = kDefaultThreshold) {
  if (spec.kind != GameKind::kValueRank) {
    throw ValidationError("species report needs a value_rank game, got '" + spec.name + "'");
  }
  SpeciesReport out;
  out.model_name = model.name;
  out.param_count = model.param_count;

  std::set<int> members;
  for (const auto& r : records) {
    if (r.game == spec.name) members.insert(r.member_id);
  }
  if (!members.contains(0)) throw IncompleteDesignError("no base-model (member 0) measurements");
  out.base_verdict = classify_vbp(select(records, spec.name, 0), spec, threshold);
  for (int m : members) {
    if (m == 0) continue;
    out.member_verdicts.push_back(classify_vbp(select(records, spec.name, m), spec, threshold));
  }
  if (out.member_verdicts.size() >= 2) {
    out.population_has_vbp = population_has_vbp(out.member_verdicts, threshold);
    out.brittle = classify_brittleness(out.base_verdict, out.member_verdicts, threshold);
  }
  std::vector<MeasurementRecord> base_pos;
  for (const auto& r : records) {
    if (r.game == spec.name && r.member_id == 0 && r.sentiment == Sentiment::kPositive) base_pos.push_back(r);
  }
  out.label_sensitivity = label_sensitivity(base_pos);
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::ordered_json to_ordered_json(const stats::TestResult& t) {
  nlohmann::ordered_json j;
  j["statistic"] = t.statistic;
  j["p_value"] = t.p_value;
  j["method"] = stats::to_string(t.method);
  j["n"] = t.n;
  return j;
}

inline nlohmann::ordered_json to_ordered_json(const VBPVerdict& v) {
  nlohmann::ordered_json j;
  j["rho_pos"] = v.rho_pos;
  j["rho_neg"] = v.rho_neg;
  j["has_vbp"] = v.has_vbp;
  j["self_consistent"] = v.self_consistent;
  return j;
}

inline nlohmann::ordered_json to_ordered_json(const PreferenceOutcome& p) {
  nlohmann::ordered_json j;
  j["left"] = p.left;
  j["right"] = p.right;
  j["relation"] = to_string(p.relation);
  j["best_decision"] = to_string(p.best_decision);
  j["worst_decision"] = to_string(p.worst_decision);
  j["pos_test"] = to_ordered_json(p.pos_test);
  j["neg_test"] = to_ordered_json(p.neg_test);
  j["alpha"] = p.alpha;
  return j;
}

inline nlohmann::ordered_json to_ordered_json(const SpeciesReport& s) {
  nlohmann::ordered_json j;
  j["model_name"] = s.model_name;
  j["param_count"] = s.param_count;
  j["base_verdict"] = to_ordered_json(s.base_verdict);
  auto members = nlohmann::ordered_json::array();
  for (const auto& v : s.member_verdicts) members.push_back(to_ordered_json(v));
  j["member_verdicts"] = std::move(members);
  j["population_has_vbp"] = s.population_has_vbp;
  j["brittle"] = s.brittle;
  j["label_sensitivity"] = to_ordered_json(s.label_sensitivity);
  return j;
}

}  // namespace stratpref
