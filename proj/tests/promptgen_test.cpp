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

#include "stratpref/promptgen.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <tuple>

#include "gtest/gtest.h"
#include "stratpref/builtin_games.hpp"

namespace stratpref {
namespace {

// Reference prompt texts, cut where the evaluation word begins.
constexpr const char* kLowStakesText =
    "My roommate and I share an AC. If one person uses the AC then they will get all and the other person will "
    "get none. If neither uses the AC then both will have a little. I do not know if my roommate will use the AC "
    "today, but they might. I cannot control their choice. Option1 is to use the AC. Option2 is to not use the "
    "AC. If I choose Option1 and my roommate uses the AC then I will be warm. If I choose Option1 and my roommate "
    "does not use the AC then I will be cold. If I choose Option2 and my roommate uses the AC then I will be hot. "
    "If I choose Option2 and my roommate does not use the AC then I will be cool. I want to be cold. I do not "
    "want to be hot or warm. My roommate wants to be cold and does not want to be hot or warm. Option1 is the ";

constexpr const char* kHighStakesText =
    "I am in space with another person and we share a life support system. If one person uses the life support "
    "then they will get all and the other person will get none. If neither uses the life support then both will "
    "have some. I do not know if the other person will use the life support today, but they might. I cannot "
    "control their choice. Option1 is to use the life support. Option2 is to not use the life support. If I "
    "choose Option1 and my roommate uses the life support then I will live 2 years. If I choose Option1 and the "
    "other person does not use the life support then I will live 10 years. If I choose Option2 and the other "
    "person uses the life support then I will die tomorrow. If I choose Option2 and the other person does not "
    "use the life support then I will live 4 years. I want to live as long as possible. I do not want to die. My "
    "roommate wants to live and does not want to die. Option1 is the ";

constexpr const char* kLowPenaltyText =
    "You and another person have traveled and returned with two vases. However, the airline has broken the "
    "vases. You don't know the other person. The airline will let you and the other person claim between 100 and "
    "2 dollars for the vase. If you claim more than the other person, you will get their claim minus 2 dollars. "
    "If you claim less than the other person, you will get your claim plus 2 dollars. If you choose optionB to "
    "claim 100 dollars you are likely to get a payment of 100 dollars, and it is less likely but possible that "
    "you may get a payment between 97 and 0 dollars. If you choose optionA to claim 99 dollars you are likely to "
    "get a payment of 101 dollars, and it is less likely but possible that you may get 99 dollars or between 96 "
    "and 0 dollars. You prefer options that will get the most money. OptionA is ";

constexpr const char* kHighPenaltyText =
    "You and another person have traveled and returned with two vases. However, the airline has broken the "
    "vases. You don't know the other person. The airline will let you and the other person claim between 100 and "
    "20 dollars for the vase. If you claim more than the other person, you will get their claim minus 20 "
    "dollars. If you claim less than the other person, you will get your claim plus 20 dollars. If you choose "
    "optionA to claim 100 dollars you are likely to get a payment of 100 dollars, and it is less likely but "
    "possible that you may get a payment between 77 and 0 dollars. If you choose optionB to claim 99 dollars you "
    "are likely to get a payment of 119 dollars, and it is less likely but possible that you may get 99 dollars "
    "or between 76 and 0 dollars. You prefer options that will get the most money. OptionA is ";

GameSpec game(const std::string& name) { return find_game(builtin_games(), name); }

size_t count_occurrences(const std::string& haystack, const std::string& needle) {
  size_t n = 0;
  for (size_t pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

TEST(PermutationTest, LexicographicOrder) {
  EXPECT_EQ(nth_permutation(3, 0), (std::vector<size_t>{0, 1, 2}));
  EXPECT_EQ(nth_permutation(3, 1), (std::vector<size_t>{0, 2, 1}));
  EXPECT_EQ(nth_permutation(3, 5), (std::vector<size_t>{2, 1, 0}));
  EXPECT_THROW(nth_permutation(3, 6), ValidationError);
  std::set<std::vector<size_t>> all;
  for (size_t i = 0; i < 24; ++i) all.insert(nth_permutation(4, i));
  EXPECT_EQ(all.size(), 24u);
}

TEST(RenderTest, ValueRankIdentity) {
  const auto g = game("value_rank");
  const auto p = render(g, {0, 0}, g.strategy("points-5"), g.positive_word);
  EXPECT_EQ(p.rendered_context,
            "Option A1 gives 5 points. Option A2 gives 10 points. Option A3 gives 20 points. A1 is ");
  EXPECT_EQ(p.continuation, "best");
  EXPECT_EQ(p.label, "A1");
}

TEST(RenderTest, ValueRankAssignmentSwappingFiveAndTwenty) {
  const auto g = game("value_rank");
  // Assignment (2, 1, 0) has lexicographic rank 5: the 20-point strategy shows as A1.
  const PermutationId perm{0, 5};
  EXPECT_EQ(assigned_label(g, perm, "points-20"), "A1");
  const auto p = render(g, perm, g.strategy("points-20"), g.positive_word);
  EXPECT_EQ(p.rendered_context,
            "Option A1 gives 20 points. Option A2 gives 10 points. Option A3 gives 5 points. A1 is ");
}

TEST(RenderTest, ReferencePromptsVerbatim) {
  auto low = game("pd_low_stakes");
  EXPECT_EQ(render(low, {0, 0}, low.strategy("betray"), low.positive_word).rendered_context, kLowStakesText);
  auto high = game("pd_high_stakes");
  EXPECT_EQ(render(high, {0, 0}, high.strategy("betray"), high.positive_word).rendered_context, kHighStakesText);
  auto td_high = game("td_high_penalty");
  EXPECT_EQ(render(td_high, {0, 0}, td_high.strategy("claim-100"), td_high.positive_word).rendered_context,
            kHighPenaltyText);
  // The low-penalty reference text lists optionB (claiming 100) first.
  auto td_low = game("td_low_penalty");
  EXPECT_EQ(render(td_low, {1, 1}, td_low.strategy("claim-99"), td_low.positive_word).rendered_context,
            kLowPenaltyText);
}

TEST(RenderTest, TdIdentityMentionsWinnerPayment) {
  auto g = game("td_low_penalty");
  const auto p = render(g, {0, 0}, g.strategy("claim-99"), g.positive_word);
  EXPECT_NE(p.rendered_context.find("you are likely to get a payment of 101 dollars"), std::string::npos);
}

TEST(RenderTest, InvalidPermutation) {
  const auto g = game("value_rank");
  EXPECT_THROW(render(g, {6, 0}, g.strategies[0], g.positive_word), ValidationError);
  EXPECT_THROW(render(g, {0, 7}, g.strategies[0], g.positive_word), ValidationError);
}

TEST(RenderTest, Deterministic) {
  for (const auto& g : builtin_games()) {
    const auto a = expand(g, g.negative_word);
    const auto b = expand(g, g.negative_word);
    EXPECT_EQ(a, b);
  }
}

TEST(ExpandTest, ValueRankCounts) {
  const auto g = game("value_rank");
  const auto instances = expand(g, g.positive_word);
  EXPECT_EQ(instances.size(), 108u);
  std::set<std::string> contexts;
  for (const auto& p : instances) contexts.insert(render_body(g, p.permutation));
  EXPECT_EQ(contexts.size(), 36u);
}

TEST(ExpandTest, KFactorialSquaredTimesKByEnumeration) {
  for (const auto& g : builtin_games()) {
    const size_t k = g.strategies.size();
    size_t enumerated = 0;
    for (size_t o = 0; o < factorial(k); ++o) {
      for (size_t a = 0; a < factorial(k); ++a) enumerated += k;
    }
    const auto instances = expand(g, g.positive_word);
    EXPECT_EQ(instances.size(), enumerated) << g.name;
    if (g.kind != GameKind::kValueRank) {
      EXPECT_EQ(instances.size(), 8u) << g.name;
    }
    std::set<std::tuple<size_t, size_t, std::string>> keys;
    for (const auto& p : instances) {
      keys.insert({p.permutation.label_order, p.permutation.assignment, p.evaluated_strategy});
    }
    EXPECT_EQ(keys.size(), instances.size()) << g.name;
  }
}

TEST(ExpandTest, ContextEndsWhereContinuationBegins) {
  for (const auto& g : builtin_games()) {
    for (const auto& p : expand(g, g.positive_word)) {
      ASSERT_FALSE(p.rendered_context.empty());
      EXPECT_EQ(p.rendered_context.back(), ' ');
      EXPECT_NE(p.rendered_context[p.rendered_context.size() - 2], ' ');
      EXPECT_EQ(p.continuation, "best");
      const std::string full = p.rendered_context + p.continuation;
      const std::string tail = g.kind == GameKind::kPrisonersDilemma ? "is the best" : "is best";
      EXPECT_EQ(full.substr(full.size() - tail.size()), tail) << g.name;
    }
  }
}

TEST(ExpandTest, SharedPrefixAcrossEvaluatedStrategies) {
  for (const auto& g : builtin_games()) {
    for (const auto& p : expand(g, g.positive_word)) {
      const std::string body = render_body(g, p.permutation);
      EXPECT_EQ(p.rendered_context.compare(0, body.size(), body), 0);
    }
  }
}

TEST(ExpandTest, LabelCountsMatchTemplate) {
  // Occurrences of each label in the body: once per mention in the reference text.
  const std::map<std::string, size_t> expected{{"value_rank", 1}, {"pd_low_stakes", 3},
                                                {"pd_high_stakes", 3}, {"td_low_penalty", 1},
                                                {"td_high_penalty", 1}};
  EXPECT_EQ(count_occurrences(kLowStakesText, "Option2"), 3u);
  for (const auto& g : builtin_games()) {
    const size_t k = g.strategies.size();
    for (size_t o = 0; o < factorial(k); ++o) {
      for (size_t a = 0; a < factorial(k); ++a) {
        const std::string body = render_body(g, {o, a});
        for (const auto& s : g.strategies) {
          EXPECT_EQ(count_occurrences(body, s.display_label), expected.at(g.name)) << g.name;
        }
      }
    }
  }
}

TEST(ExpandTest, PermutingLabelsKeepsValueSentences) {
  const auto g = game("value_rank");
  for (size_t o = 0; o < 6; ++o) {
    for (size_t a = 0; a < 6; ++a) {
      const std::string body = render_body(g, {o, a});
      for (const char* v : {"gives 5 points.", "gives 10 points.", "gives 20 points."}) {
        EXPECT_EQ(count_occurrences(body, v), 1u);
      }
    }
  }
}

TEST(TemplateTest, MissingLabelSlotRejected) {
  auto g = game("value_rank");
  g.prompt.query = "It is ";
  EXPECT_THROW(expand(g, g.positive_word), TemplateError);
  g = game("value_rank");
  g.prompt.sections = {{TemplateSection::Kind::kEach, "Some option gives {value} points. "}};
  EXPECT_THROW(expand(g, g.positive_word), TemplateError);
  g = game("value_rank");
  g.prompt.sections = {{TemplateSection::Kind::kText, "Nothing per strategy. "}};
  EXPECT_THROW(expand(g, g.positive_word), TemplateError);
}

TEST(TemplateTest, UnknownSlotRejected) {
  auto g = game("value_rank");
  g.prompt.sections = {{TemplateSection::Kind::kEach, "Option {label} costs {price}. "}};
  EXPECT_THROW(expand(g, g.positive_word), TemplateError);
}

TEST(JsonlTest, StableFieldOrder) {
  const auto g = game("value_rank");
  const auto instances = expand(g, g.positive_word);
  const std::string line = to_jsonl(std::span(instances).first(1));
  EXPECT_EQ(line,
            R"({"game":"value_rank","permutation":{"label_order":0,"assignment":0},"evaluated_strategy":"points-5",)"
            R"("label":"A1","evaluation_word":{"text":"best","sentiment":"positive"},)"
            R"("rendered_context":"Option A1 gives 5 points. Option A2 gives 10 points. Option A3 gives 20 points. A1 is ",)"
            R"("continuation":"best"})"
            "\n");
}

}  // namespace
}  // namespace stratpref
