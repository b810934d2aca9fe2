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

// Expands a GameSpec into the permutation-controlled prompt design:
// label order x label assignment x evaluated strategy, one evaluation word at
// a time.
//
// Labels are the spec's display labels in spec order, L[0..k). For a
// PermutationId (order, assignment) with permutations pi = nth(order) and
// sigma = nth(assignment):
//   - strategy i is shown under label L[sigma[i]];
//   - the j-th block of every `each` section describes the strategy whose
//     label is L[pi[j]].
// Both indices are lexicographic ranks in [0, k!).

#pragma once

#include <cctype>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stratpref/error.hpp"
#include "stratpref/game_model.hpp"

namespace stratpref {

struct PermutationId {
  std::size_t label_order = 0;
  std::size_t assignment = 0;

  auto operator<=>(const PermutationId&) const = default;
};

struct PromptInstance {
  std::string game;
  PermutationId permutation;
  std::string evaluated_strategy;  // strategy id
  std::string label;               // label shown for the evaluated strategy
  EvaluationWord evaluation_word;
  std::string rendered_context;
  std::string continuation;

  bool operator==(const PromptInstance&) const = default;
};

inline std::size_t factorial(std::size_t k) {
  std::size_t f = 1;
  for (std::size_t i = 2; i <= k; ++i) f *= i;
  return f;
}

// Lexicographic permutation of {0..k-1} with the given rank.
inline std::vector<std::size_t> nth_permutation(std::size_t k, std::size_t index) {
  if (index >= factorial(k)) {
    throw ValidationError("permutation index " + std::to_string(index) + " out of range for k=" +
                          std::to_string(k));
  }
  std::vector<std::size_t> pool(k);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = k; i > 0; --i) {
    const std::size_t f = factorial(i - 1);
    const std::size_t pick = index / f;
    index %= f;
    out.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

namespace detail {

inline std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

// Replaces {name} tokens. Strategy slot values may themselves contain label
// tokens, so they are expanded once more without slot lookup.
inline std::string fill(std::string_view text, const Strategy& s, const std::string& label,
                        const std::string& game, bool allow_slots) {
  std::string out;
  out.reserve(text.size() + 32);
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    const std::size_t close = text.find('}', open);
    if (close == std::string_view::npos) {
      throw TemplateError("game '" + game + "': unterminated slot in template");
    }
    out.append(text.substr(pos, open - pos));
    const std::string name(text.substr(open + 1, close - open - 1));
    if (name == "label") {
      out += label;
    } else if (name == "Label") {
      out += capitalize(label);
    } else if (name == "value" && s.value) {
      out += std::to_string(*s.value);
    } else if (name == "quote" && s.quote) {
      out += std::to_string(*s.quote);
    } else if (auto it = s.slots.find(name); allow_slots && it != s.slots.end()) {
      out += fill(it->second, s, label, game, false);
    } else {
      throw TemplateError("game '" + game + "': slot {" + name + "} cannot be filled for strategy '" +
                          s.id + "'");
    }
    pos = close + 1;
  }
  return out;
}

struct LabelBinding {
  std::vector<std::size_t> order;       // position -> label index
  std::vector<std::size_t> assignment;  // strategy index -> label index
};

inline LabelBinding bind(const GameSpec& spec, const PermutationId& perm) {
  const std::size_t k = spec.strategies.size();
  return {nth_permutation(k, perm.label_order), nth_permutation(k, perm.assignment)};
}

inline std::size_t strategy_with_label(const LabelBinding& b, std::size_t label_index) {
  for (std::size_t i = 0; i < b.assignment.size(); ++i) {
    if (b.assignment[i] == label_index) return i;
  }
  return 0;  // unreachable for a valid permutation
}

}  // namespace detail

// Label shown for `strategy_id` under `perm`.
inline std::string assigned_label(const GameSpec& spec, const PermutationId& perm,
                                  std::string_view strategy_id) {
  const auto binding = detail::bind(spec, perm);
  const std::size_t i = spec.strategy_index(strategy_id);
  return spec.strategies[binding.assignment[i]].display_label;
}

// The context shared by every evaluated strategy: everything before the query.
inline std::string render_body(const GameSpec& spec, const PermutationId& perm) {
  const auto binding = detail::bind(spec, perm);
  const std::size_t k = spec.strategies.size();
  std::string out;
  for (const auto& section : spec.prompt.sections) {
    if (section.kind == TemplateSection::Kind::kText) {
      out += section.text;
      continue;
    }
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t label_index = binding.order[j];
      const auto& s = spec.strategies[detail::strategy_with_label(binding, label_index)];
      out += detail::fill(section.text, s, spec.strategies[label_index].display_label, spec.name,
                          true);
    }
  }
  return out;
}

// Confirms every slot can be filled and every label reaches the context.
inline void check_template(const GameSpec& spec) {
  const auto& q = spec.prompt.query;
  if (q.find("{label}") == std::string::npos && q.find("{Label}") == std::string::npos) {
    throw TemplateError("game '" + spec.name + "': query lacks a {label} slot");
  }
  bool has_each = false;
  for (const auto& s : spec.prompt.sections) has_each |= s.kind == TemplateSection::Kind::kEach;
  if (!has_each) {
    throw TemplateError("game '" + spec.name + "': template has no per-strategy section");
  }
  const std::string body = render_body(spec, PermutationId{});
  for (const auto& s : spec.strategies) {
    if (body.find(s.display_label) == std::string::npos) {
      throw TemplateError("game '" + spec.name + "': label '" + s.display_label +
                          "' never appears in the context; a {label} slot is missing");
    }
    (void)detail::fill(q, s, s.display_label, spec.name, true);
  }
}

inline PromptInstance render(const GameSpec& spec, const PermutationId& perm,
                             const Strategy& strategy, const EvaluationWord& word) {
  const auto binding = detail::bind(spec, perm);
  const std::size_t i = spec.strategy_index(strategy.id);
  const std::string label = spec.strategies[binding.assignment[i]].display_label;
  PromptInstance out;
  out.game = spec.name;
  out.permutation = perm;
  out.evaluated_strategy = strategy.id;
  out.label = label;
  out.evaluation_word = word;
  out.rendered_context =
      render_body(spec, perm) + detail::fill(spec.prompt.query, spec.strategies[i], label, spec.name, true);
  out.continuation = word.text;
  return out;
}

// k! label orders x k! assignments x k evaluated strategies, in that nesting.
inline std::vector<PromptInstance> expand(const GameSpec& spec, const EvaluationWord& word) {
  check_template(spec);
  const std::size_t k = spec.strategies.size();
  const std::size_t perms = factorial(k);
  std::vector<PromptInstance> out;
  out.reserve(perms * perms * k);
  for (std::size_t order = 0; order < perms; ++order) {
    for (std::size_t assignment = 0; assignment < perms; ++assignment) {
      const PermutationId perm{order, assignment};
      for (const auto& s : spec.strategies) out.push_back(render(spec, perm, s, word));
    }
  }
  return out;
}

// Positive-word design followed by the negative-word design.
inline std::vector<PromptInstance> expand_both(const GameSpec& spec) {
  auto out = expand(spec, spec.positive_word);
  auto neg = expand(spec, spec.negative_word);
  out.insert(out.end(), std::make_move_iterator(neg.begin()), std::make_move_iterator(neg.end()));
  return out;
}

inline void to_json(nlohmann::ordered_json& j, const PromptInstance& p) {
  j = nlohmann::ordered_json::object();
  j["game"] = p.game;
  j["permutation"] = {{"label_order", p.permutation.label_order},
                      {"assignment", p.permutation.assignment}};
  j["evaluated_strategy"] = p.evaluated_strategy;
  j["label"] = p.label;
  j["evaluation_word"] = {{"text", p.evaluation_word.text},
                          {"sentiment", to_string(p.evaluation_word.sentiment)}};
  j["rendered_context"] = p.rendered_context;
  j["continuation"] = p.continuation;
}

inline std::string to_jsonl(std::span<const PromptInstance> instances) {
  std::string out;
  for (const auto& p : instances) {
    nlohmann::ordered_json j;
    to_json(j, p);
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace stratpref
