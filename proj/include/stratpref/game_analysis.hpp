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

// Reference game theory for the scenarios: traveler's dilemma payoffs, bimatrix
// lookups, weak dominance, iterated elimination, Pareto and pure Nash profiles.

#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stratpref/error.hpp"
#include "stratpref/game_model.hpp"

namespace stratpref {

// A claim inside the game's range.
class TDQuote {
 public:
  TDQuote(int value, const TDGame& game) : value_(value) {
    if (value < game.quote_min || value > game.quote_max) {
      throw ValidationError("quote " + std::to_string(value) + " outside [" +
                            std::to_string(game.quote_min) + ", " + std::to_string(game.quote_max) + "]");
    }
  }
  int value() const { return value_; }

 private:
  int value_;
};

struct TDPayoff {
  int a = 0;
  int b = 0;

  bool operator==(const TDPayoff&) const = default;
};

// Lower quoter gets min + penalty, higher quoter gets min - penalty, equal
// quotes are paid as quoted.
inline TDPayoff td_payoff(TDQuote qa, TDQuote qb, const TDGame& game) {
  const int m = std::min(qa.value(), qb.value());
  TDPayoff out;
  if (qa.value() == qb.value()) {
    out = {m, m};
  } else if (qa.value() < qb.value()) {
    out = {m + game.penalty, m - game.penalty};
  } else {
    out = {m - game.penalty, m + game.penalty};
  }
  if (game.floor_at_zero) {
    out.a = std::max(out.a, 0);
    out.b = std::max(out.b, 0);
  }
  return out;
}

inline TDPayoff td_payoff(int qa, int qb, const TDGame& game) {
  return td_payoff(TDQuote(qa, game), TDQuote(qb, game), game);
}

// Payoffs a quote can earn when the other traveler undercuts it, as quoted in
// the prompt texts ("between X and 0 dollars"). Empty range at quote_min.
struct PayoffRange {
  int low = 0;
  int high = 0;
};

inline PayoffRange td_undercut_range(int quote, TDGame game, bool floor_at_zero = true) {
  game.floor_at_zero = floor_at_zero;
  if (quote <= game.quote_min) throw ValidationError("no lower quote exists");
  const int lowest = td_payoff(quote, game.quote_min, game).a;
  const int highest = td_payoff(quote, quote - 1, game).a;
  return {lowest, highest};
}

inline std::vector<int> td_quotes(const TDGame& game) {
  std::vector<int> out;
  for (int q = game.quote_min; q <= game.quote_max; ++q) out.push_back(q);
  return out;
}

inline Payoff pd_payoff(const PayoffMatrix& matrix, std::string_view row, std::string_view col) {
  return matrix.at(row, col);
}

// `payoff(own, opponent)` must return a value where larger is better.
template <typename S, typename PayoffFn>
bool weakly_dominates(const S& a, const S& b, std::span<const S> opponents, PayoffFn&& payoff) {
  if (opponents.empty()) throw ValidationError("weak dominance needs a non-empty opponent set");
  bool strictly_better_somewhere = false;
  for (const auto& o : opponents) {
    const auto pa = payoff(a, o);
    const auto pb = payoff(b, o);
    if (pa < pb) return false;
    if (pa > pb) strictly_better_somewhere = true;
  }
  return strictly_better_somewhere;
}

template <typename S, typename PayoffFn>
bool strictly_dominates(const S& a, const S& b, std::span<const S> opponents, PayoffFn&& payoff) {
  if (opponents.empty()) throw ValidationError("dominance needs a non-empty opponent set");
  for (const auto& o : opponents) {
    if (!(payoff(a, o) > payoff(b, o))) return false;
  }
  return true;
}

template <typename S>
struct EliminationResult {
  std::vector<S> survivors;
  std::vector<std::vector<S>> trace;  // trace[r]: strategies removed in round r+1
};

// Iterated elimination of weakly dominated strategies in a symmetric game.
// Every round removes, simultaneously, all strategies weakly dominated within
// the current set (opponents restricted to the same set); stops at a fixed
// point. Weak dominance is a strict partial order, so a round never empties
// the set.
template <typename S, typename PayoffFn>
EliminationResult<S> iterated_elimination(std::vector<S> strategies, PayoffFn&& payoff) {
  EliminationResult<S> out;
  while (strategies.size() > 1) {
    std::vector<bool> dominated(strategies.size(), false);
    const std::span<const S> current(strategies);
    for (std::size_t i = 0; i < strategies.size(); ++i) {
      for (std::size_t j = 0; j < strategies.size() && !dominated[i]; ++j) {
        if (i != j && weakly_dominates(strategies[j], strategies[i], current, payoff)) dominated[i] = true;
      }
    }
    std::vector<S> keep;
    std::vector<S> removed;
    for (std::size_t i = 0; i < strategies.size(); ++i) {
      (dominated[i] ? removed : keep).push_back(strategies[i]);
    }
    if (removed.empty()) break;
    out.trace.push_back(std::move(removed));
    strategies = std::move(keep);
  }
  out.survivors = std::move(strategies);
  return out;
}

inline EliminationResult<int> td_iterated_elimination(const TDGame& game) {
  return iterated_elimination(td_quotes(game),
                              [&](int own, int opp) { return td_payoff(own, opp, game).a; });
}

enum class DominanceKind { kWeak, kStrict };

struct DominanceReport {
  std::string dominator;
  std::string dominated;
  DominanceKind kind = DominanceKind::kWeak;

  bool operator==(const DominanceReport&) const = default;
};

// Row-player payoff oriented so that larger is better.
inline std::function<double(const std::string&, const std::string&)> row_utility(const PayoffMatrix& m) {
  return [&m](const std::string& own, const std::string& opp) {
    const double v = m.at(own, opp).row;
    return m.orientation == Orientation::kMaximize ? v : -v;
  };
}

// Dominance relations among the row player's strategies, against every column.
inline std::vector<DominanceReport> matrix_dominance(const PayoffMatrix& m) {
  std::vector<DominanceReport> out;
  const auto u = row_utility(m);
  const std::span<const std::string> cols(m.col_strategies);
  for (const auto& a : m.row_strategies) {
    for (const auto& b : m.row_strategies) {
      if (a == b) continue;
      if (strictly_dominates(a, b, cols, u)) {
        out.push_back({a, b, DominanceKind::kStrict});
      } else if (weakly_dominates(a, b, cols, u)) {
        out.push_back({a, b, DominanceKind::kWeak});
      }
    }
  }
  return out;
}

struct Profile {
  std::string row;
  std::string col;

  bool operator==(const Profile&) const = default;
};

// Profiles not Pareto-dominated by another profile, honoring orientation.
inline std::vector<Profile> pareto_optimal(const PayoffMatrix& m) {
  std::vector<Profile> out;
  for (std::size_t r = 0; r < m.row_strategies.size(); ++r) {
    for (std::size_t c = 0; c < m.col_strategies.size(); ++c) {
      const auto& p = m.cells[r][c];
      bool dominated = false;
      for (std::size_t r2 = 0; r2 < m.row_strategies.size() && !dominated; ++r2) {
        for (std::size_t c2 = 0; c2 < m.col_strategies.size() && !dominated; ++c2) {
          const auto& q = m.cells[r2][c2];
          dominated = m.at_least_as_good(q.row, p.row) && m.at_least_as_good(q.col, p.col) &&
                      (m.better(q.row, p.row) || m.better(q.col, p.col));
        }
      }
      if (!dominated) out.push_back({m.row_strategies[r], m.col_strategies[c]});
    }
  }
  return out;
}

// Pure-strategy Nash equilibria: each side best-responds to the other.
inline std::vector<Profile> pure_nash(const PayoffMatrix& m) {
  std::vector<Profile> out;
  for (std::size_t r = 0; r < m.row_strategies.size(); ++r) {
    for (std::size_t c = 0; c < m.col_strategies.size(); ++c) {
      bool stable = true;
      for (std::size_t r2 = 0; r2 < m.row_strategies.size() && stable; ++r2) {
        stable = !m.better(m.cells[r2][c].row, m.cells[r][c].row);
      }
      for (std::size_t c2 = 0; c2 < m.col_strategies.size() && stable; ++c2) {
        stable = !m.better(m.cells[r][c2].col, m.cells[r][c].col);
      }
      if (stable) out.push_back({m.row_strategies[r], m.col_strategies[c]});
    }
  }
  return out;
}

}  // namespace stratpref
