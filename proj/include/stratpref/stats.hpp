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

// Nonparametric rank statistics: midranks, Spearman's rho, Wilcoxon rank-sum,
// Wilcoxon signed-rank, Kruskal-Wallis, plus the tail functions they need.
// All p-values are two-sided. Ties are handled with midranks everywhere,
// including the exact null distributions.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stratpref/error.hpp"

namespace stratpref::stats {

enum class Method { kExact, kNormalApprox, kChiSquare };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::kExact: return "exact";
    case Method::kNormalApprox: return "normal_approx";
    case Method::kChiSquare: return "chi_square";
  }
  return "?";
}

struct TestResult {
  double statistic = 0;
  double p_value = 1;
  Method method = Method::kExact;
  std::vector<std::size_t> n;
  // Null expectation of `statistic`; the sign of statistic - expected gives
  // the direction of a two-sample effect.
  double expected = 0;
};

struct CorrelationResult {
  double rho = 0;
  std::size_t n = 0;
};

inline constexpr std::size_t kRankSumExactThreshold = 16;
inline constexpr std::size_t kSignedRankExactThreshold = 20;
inline constexpr std::size_t kOracleLimit = 12;

// Relative slack when comparing statistics for "at least as extreme".
inline constexpr double kExtremeTolerance = 1e-9;

// Ranks 1..n; tied values share the mean of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = mid;
    i = j + 1;
  }
  return ranks;
}

// Sum over tie groups of (t^3 - t).
inline double tie_term(std::span<const double> xs) {
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  double total = 0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j + 1 < v.size() && v[j + 1] == v[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    total += t * t * t - t;
    i = j + 1;
  }
  return total;
}

// Upper tail of the standard normal.
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

namespace detail {

// Regularized lower incomplete gamma P(a, x) by series; valid for x < a + 1.
inline double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by Lentz continued fraction;
// valid for x >= a + 1.
inline double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

// Chi-square survival function, Q(df/2, x/2).
inline double chi_square_sf(double x, int df) {
  if (df < 1) throw ValidationError("chi_square_sf needs df >= 1");
  if (x < 0) throw ValidationError("chi_square_sf needs x >= 0");
  if (x == 0) return 1.0;
  const double a = 0.5 * df;
  const double h = 0.5 * x;
  if (h < a + 1.0) return std::clamp(1.0 - detail::gamma_p_series(a, h), 0.0, 1.0);
  return std::clamp(detail::gamma_q_fraction(a, h), 0.0, 1.0);
}

// Pearson correlation of midranks.
inline CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("spearman needs equal-length inputs");
  if (x.size() < 3) throw ValidationError("spearman needs at least 3 observations");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) {
    throw ValidationError("spearman correlation undefined: zero rank variance");
  }
  return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), x.size()};
}

namespace detail {

// Midranks are multiples of 1/2, so doubled ranks are exact integers.
inline std::vector<std::int64_t> doubled(std::span<const double> ranks) {
  std::vector<std::int64_t> out;
  out.reserve(ranks.size());
  for (double r : ranks) out.push_back(std::llround(2.0 * r));
  return out;
}

// counts[m][s]: number of m-element subsets of `items` with sum s.
inline std::vector<std::vector<double>> subset_sum_counts(std::span<const std::int64_t> items,
                                                          std::size_t max_size) {
  const std::int64_t total = std::accumulate(items.begin(), items.end(), std::int64_t{0});
  std::vector<std::vector<double>> counts(max_size + 1,
                                          std::vector<double>(static_cast<std::size_t>(total) + 1, 0.0));
  counts[0][0] = 1.0;
  for (std::int64_t item : items) {
    for (std::size_t m = max_size; m >= 1; --m) {
      auto& dst = counts[m];
      const auto& src = counts[m - 1];
      for (std::int64_t s = total; s >= item; --s) {
        dst[static_cast<std::size_t>(s)] += src[static_cast<std::size_t>(s - item)];
      }
    }
  }
  return counts;
}

}  // namespace detail

// Wilcoxon rank-sum (Mann-Whitney). statistic = sum of pooled midranks of `a`.
inline TestResult rank_sum(std::span<const double> a, std::span<const double> b,
                           std::size_t exact_threshold = kRankSumExactThreshold) {
  if (a.empty() || b.empty()) throw ValidationError("rank_sum needs two non-empty samples");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = average_ranks(pooled);
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  const std::size_t n = na + nb;
  const double w = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(na), 0.0);
  const double mu = static_cast<double>(na) * static_cast<double>(n + 1) / 2.0;

  TestResult out;
  out.statistic = w;
  out.expected = mu;
  out.n = {na, nb};

  if (n <= exact_threshold) {
    const auto items = detail::doubled(ranks);
    const auto counts = detail::subset_sum_counts(items, na);
    const std::int64_t w2 = std::llround(2.0 * w);
    const std::int64_t mu2 = static_cast<std::int64_t>(na * (n + 1));
    const std::int64_t dev = std::llabs(w2 - mu2);
    double extreme = 0, total = 0;
    const auto& row = counts[na];
    for (std::size_t s = 0; s < row.size(); ++s) {
      if (row[s] == 0) continue;
      total += row[s];
      if (std::llabs(static_cast<std::int64_t>(s) - mu2) >= dev) extreme += row[s];
    }
    out.method = Method::kExact;
    out.p_value = std::clamp(extreme / total, 0.0, 1.0);
    return out;
  }

  const double nd = static_cast<double>(n);
  const double var = static_cast<double>(na) * static_cast<double>(nb) / 12.0 *
                     ((nd + 1.0) - tie_term(pooled) / (nd * (nd - 1.0)));
  out.method = Method::kNormalApprox;
  if (var <= 0) {
    out.p_value = 1.0;
    return out;
  }
  const double z = std::max(0.0, std::abs(w - mu) - 0.5) / std::sqrt(var);
  out.p_value = std::min(1.0, 2.0 * normal_sf(z));
  return out;
}

// Wilcoxon signed-rank on paired differences. Zeros are dropped first.
// statistic = sum of midranks of |d| over positive differences.
inline TestResult signed_rank(std::span<const double> diffs,
                              std::size_t exact_threshold = kSignedRankExactThreshold) {
  std::vector<double> nz;
  for (double d : diffs) {
    if (d != 0) nz.push_back(d);
  }
  TestResult out;
  out.n = {nz.size()};
  if (nz.empty()) {
    out.method = Method::kExact;
    out.statistic = 0;
    out.p_value = 1.0;
    return out;
  }
  std::vector<double> mags;
  mags.reserve(nz.size());
  for (double d : nz) mags.push_back(std::abs(d));
  const auto ranks = average_ranks(mags);
  double w = 0;
  for (std::size_t i = 0; i < nz.size(); ++i) {
    if (nz[i] > 0) w += ranks[i];
  }
  const double n = static_cast<double>(nz.size());
  const double mu = n * (n + 1.0) / 4.0;
  out.statistic = w;
  out.expected = mu;

  if (nz.size() <= exact_threshold) {
    // Every sign pattern is equally likely: subsets of any size.
    const auto items = detail::doubled(ranks);
    const std::int64_t total_sum = std::accumulate(items.begin(), items.end(), std::int64_t{0});
    std::vector<double> counts(static_cast<std::size_t>(total_sum) + 1, 0.0);
    counts[0] = 1.0;
    for (std::int64_t item : items) {
      for (std::int64_t s = total_sum; s >= item; --s) {
        counts[static_cast<std::size_t>(s)] += counts[static_cast<std::size_t>(s - item)];
      }
    }
    const std::int64_t w2 = std::llround(2.0 * w);
    const std::int64_t dev = std::llabs(2 * w2 - total_sum);
    double extreme = 0, total = 0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      total += counts[s];
      if (std::llabs(2 * static_cast<std::int64_t>(s) - total_sum) >= dev) extreme += counts[s];
    }
    out.method = Method::kExact;
    out.p_value = std::clamp(extreme / total, 0.0, 1.0);
    return out;
  }

  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term(mags) / 48.0;
  out.method = Method::kNormalApprox;
  if (var <= 0) {
    out.p_value = 1.0;
    return out;
  }
  const double z = std::max(0.0, std::abs(w - mu) - 0.5) / std::sqrt(var);
  out.p_value = std::min(1.0, 2.0 * normal_sf(z));
  return out;
}

// Kruskal-Wallis H with tie correction; p from chi-square with k-1 df.
inline TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw ValidationError("kruskal_wallis needs at least 2 groups");
  std::vector<double> pooled;
  TestResult out;
  out.method = Method::kChiSquare;
  for (const auto& g : groups) {
    if (g.empty()) throw ValidationError("kruskal_wallis groups must be non-empty");
    pooled.insert(pooled.end(), g.begin(), g.end());
    out.n.push_back(g.size());
  }
  const double n = static_cast<double>(pooled.size());
  const double correction = 1.0 - tie_term(pooled) / (n * n * n - n);
  if (correction <= 0) {
    out.statistic = 0;
    out.p_value = 1.0;
    return out;
  }
  const auto ranks = average_ranks(pooled);
  double acc = 0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double r = 0;
    for (std::size_t i = 0; i < g.size(); ++i) r += ranks[offset + i];
    acc += r * r / static_cast<double>(g.size());
    offset += g.size();
  }
  const double h = std::max(0.0, (12.0 / (n * (n + 1.0)) * acc - 3.0 * (n + 1.0)) / correction);
  out.statistic = h;
  out.expected = static_cast<double>(groups.size() - 1);
  out.p_value = chi_square_sf(h, static_cast<int>(groups.size() - 1));
  return out;
}

// Brute-force permutation reference for rank_sum: visits every split of the
// pooled sample into groups of sizes |a| and |b| and recomputes the
// Mann-Whitney U from pairwise comparisons. Statistic reported is U for `a`.
inline TestResult exact_perm_oracle(std::span<const double> a, std::span<const double> b) {
  const std::size_t na = a.size();
  const std::size_t n = na + b.size();
  if (a.empty() || b.empty()) throw ValidationError("oracle needs two non-empty samples");
  if (n > kOracleLimit) {
    throw ValidationError("exact_perm_oracle limited to " + std::to_string(kOracleLimit) + " observations");
  }
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto u_of = [&](std::uint32_t mask) {
    double u = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask >> i & 1u)) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (mask >> j & 1u) continue;
        if (pooled[i] > pooled[j]) {
          u += 1.0;
        } else if (pooled[i] == pooled[j]) {
          u += 0.5;
        }
      }
    }
    return u;
  };
  const double center = static_cast<double>(na) * static_cast<double>(n - na) / 2.0;
  const double observed = u_of((1u << na) - 1u);
  const double dev = std::abs(observed - center);
  std::size_t extreme = 0, total = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != na) continue;
    ++total;
    if (std::abs(u_of(mask) - center) >= dev - kExtremeTolerance) ++extreme;
  }
  TestResult out;
  out.statistic = observed;
  out.expected = center;
  out.method = Method::kExact;
  out.n = {na, n - na};
  out.p_value = static_cast<double>(extreme) / static_cast<double>(total);
  return out;
}

}  // namespace stratpref::stats
