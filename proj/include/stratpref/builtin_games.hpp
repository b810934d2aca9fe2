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

// The five shipped scenarios: value ranking, the low/high stakes prisoner's
// dilemma, and the low/high penalty traveler's dilemma. Prompt texts are kept
// verbatim, including their original wording quirks.

#pragma once

#include <vector>

#include "stratpref/game_model.hpp"

namespace stratpref {

inline constexpr const char* kBuiltinGamesJson = R"json([
{
  "name": "value_rank",
  "kind": "value_rank",
  "strategies": [
    {"id": "points-5", "label": "A1", "value": 5},
    {"id": "points-10", "label": "A2", "value": 10},
    {"id": "points-20", "label": "A3", "value": 20}
  ],
  "evaluation_words": [
    {"text": "best", "sentiment": "positive"},
    {"text": "worst", "sentiment": "negative"}
  ],
  "template": {
    "sections": [{"each": "Option {label} gives {value} points. "}],
    "query": "{label} is "
  }
},
{
  "name": "pd_low_stakes",
  "kind": "pd",
  "strategies": [
    {"id": "betray", "label": "Option1", "slots": {
      "action": "to use the AC",
      "outcomes": "If I choose {label} and my roommate uses the AC then I will be warm. If I choose {label} and my roommate does not use the AC then I will be cold."}},
    {"id": "silent", "label": "Option2", "slots": {
      "action": "to not use the AC",
      "outcomes": "If I choose {label} and my roommate uses the AC then I will be hot. If I choose {label} and my roommate does not use the AC then I will be cool."}}
  ],
  "evaluation_words": [
    {"text": "best", "sentiment": "positive"},
    {"text": "worst", "sentiment": "negative"}
  ],
  "template": {
    "sections": [
      {"text": "My roommate and I share an AC. If one person uses the AC then they will get all and the other person will get none. If neither uses the AC then both will have a little. I do not know if my roommate will use the AC today, but they might. I cannot control their choice. "},
      {"each": "{label} is {action}. "},
      {"each": "{outcomes} "},
      {"text": "I want to be cold. I do not want to be hot or warm. My roommate wants to be cold and does not want to be hot or warm. "}
    ],
    "query": "{label} is the "
  },
  "payoff": {"matrix": {
    "name": "ac_sharing",
    "orientation": "maximize",
    "rows": ["silent", "betray"],
    "cols": ["silent", "betray"],
    "cells": [[[2, 2], [0, 3]], [[3, 0], [1, 1]]]
  }}
},
{
  "name": "pd_high_stakes",
  "kind": "pd",
  "strategies": [
    {"id": "betray", "label": "Option1", "slots": {
      "action": "to use the life support",
      "outcomes": "If I choose {label} and my roommate uses the life support then I will live 2 years. If I choose {label} and the other person does not use the life support then I will live 10 years."}},
    {"id": "silent", "label": "Option2", "slots": {
      "action": "to not use the life support",
      "outcomes": "If I choose {label} and the other person uses the life support then I will die tomorrow. If I choose {label} and the other person does not use the life support then I will live 4 years."}}
  ],
  "evaluation_words": [
    {"text": "best", "sentiment": "positive"},
    {"text": "worst", "sentiment": "negative"}
  ],
  "template": {
    "sections": [
      {"text": "I am in space with another person and we share a life support system. If one person uses the life support then they will get all and the other person will get none. If neither uses the life support then both will have some. I do not know if the other person will use the life support today, but they might. I cannot control their choice. "},
      {"each": "{label} is {action}. "},
      {"each": "{outcomes} "},
      {"text": "I want to live as long as possible. I do not want to die. My roommate wants to live and does not want to die. "}
    ],
    "query": "{label} is the "
  },
  "payoff": {"matrix": {
    "name": "life_support_sharing",
    "orientation": "maximize",
    "rows": ["silent", "betray"],
    "cols": ["silent", "betray"],
    "cells": [[[4, 4], [0, 10]], [[10, 0], [2, 2]]]
  }}
},
{
  "name": "td_low_penalty",
  "kind": "td",
  "strategies": [
    {"id": "claim-100", "label": "optionA", "quote": 100, "slots": {
      "outcome": "you are likely to get a payment of 100 dollars, and it is less likely but possible that you may get a payment between 97 and 0 dollars."}},
    {"id": "claim-99", "label": "optionB", "quote": 99, "slots": {
      "outcome": "you are likely to get a payment of 101 dollars, and it is less likely but possible that you may get 99 dollars or between 96 and 0 dollars."}}
  ],
  "evaluation_words": [
    {"text": "best", "sentiment": "positive"},
    {"text": "worst", "sentiment": "negative"}
  ],
  "template": {
    "sections": [
      {"text": "You and another person have traveled and returned with two vases. However, the airline has broken the vases. You don't know the other person. The airline will let you and the other person claim between 100 and 2 dollars for the vase. If you claim more than the other person, you will get their claim minus 2 dollars. If you claim less than the other person, you will get your claim plus 2 dollars. "},
      {"each": "If you choose {label} to claim {quote} dollars {outcome} "},
      {"text": "You prefer options that will get the most money. "}
    ],
    "query": "{Label} is "
  },
  "payoff": {"traveler": {"quote_min": 2, "quote_max": 100, "penalty": 2, "floor_at_zero": false}}
},
{
  "name": "td_high_penalty",
  "kind": "td",
  "strategies": [
    {"id": "claim-100", "label": "optionA", "quote": 100, "slots": {
      "outcome": "you are likely to get a payment of 100 dollars, and it is less likely but possible that you may get a payment between 77 and 0 dollars."}},
    {"id": "claim-99", "label": "optionB", "quote": 99, "slots": {
      "outcome": "you are likely to get a payment of 119 dollars, and it is less likely but possible that you may get 99 dollars or between 76 and 0 dollars."}}
  ],
  "evaluation_words": [
    {"text": "best", "sentiment": "positive"},
    {"text": "worst", "sentiment": "negative"}
  ],
  "template": {
    "sections": [
      {"text": "You and another person have traveled and returned with two vases. However, the airline has broken the vases. You don't know the other person. The airline will let you and the other person claim between 100 and 20 dollars for the vase. If you claim more than the other person, you will get their claim minus 20 dollars. If you claim less than the other person, you will get your claim plus 20 dollars. "},
      {"each": "If you choose {label} to claim {quote} dollars {outcome} "},
      {"text": "You prefer options that will get the most money. "}
    ],
    "query": "{Label} is "
  },
  "payoff": {"traveler": {"quote_min": 2, "quote_max": 100, "penalty": 20, "floor_at_zero": false}}
}
])json";

// Reference matrices. Time in jail is minimised and never used in prompts.
inline constexpr const char* kJailMatrixJson = R"json({
  "name": "time_in_jail",
  "orientation": "minimize",
  "rows": ["silent", "betray"],
  "cols": ["silent", "betray"],
  "cells": [[[2, 2], [5, 0]], [[0, 5], [3, 3]]]
})json";

inline std::vector<GameSpec> builtin_games() {
  return parse_game_specs(json::parse(kBuiltinGamesJson));
}

inline PayoffMatrix jail_matrix() {
  auto m = json::parse(kJailMatrixJson).get<PayoffMatrix>();
  validate(m);
  return m;
}

// AC sharing, life support sharing, time in jail.
inline std::vector<PayoffMatrix> builtin_matrices() {
  std::vector<PayoffMatrix> out;
  for (const auto& g : builtin_games()) {
    if (const auto* m = g.matrix()) out.push_back(*m);
  }
  out.push_back(jail_matrix());
  return out;
}

}  // namespace stratpref
