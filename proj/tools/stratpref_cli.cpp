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

// Command-line front end: generate | run | stats | report | game | oracle.
// Exit codes: 0 success, 1 validation error, 2 runtime error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stratpref/builtin_games.hpp"
#include "stratpref/experiment.hpp"
#include "stratpref/game_analysis.hpp"
#include "stratpref/report.hpp"
#include "stratpref/stats.hpp"

namespace fs = std::filesystem;
using namespace stratpref;

namespace {

struct GlobalFlags {
  std::optional<std::string> config;
  std::optional<std::string> backend_url;
  std::optional<int> population;
  std::optional<double> alpha;
  std::optional<double> threshold;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> max_in_flight;
};

ExperimentConfig config_from_flags(const GlobalFlags& f) {
  if (!f.config) throw ValidationError("--config is required");
  ExperimentConfig c = load_config(*f.config);
  if (f.backend_url) {
    c.backend.kind = BackendDescriptor::Kind::kRemote;
    c.backend.endpoint = *f.backend_url;
    c.backend.mock_profile.reset();
  }
  if (f.population) c.population.size = *f.population;
  if (f.alpha) c.alpha = *f.alpha;
  if (f.threshold) c.threshold = *f.threshold;
  if (f.seed) {
    c.seed = *f.seed;
    c.population.seed = *f.seed;
    if (c.backend.mock_profile) c.backend.mock_profile->seed = *f.seed;
  }
  if (f.out) c.out_dir = *f.out;
  if (f.max_in_flight) c.max_in_flight = *f.max_in_flight;
  return c;
}

std::vector<double> parse_sample(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ValidationError("not a number: '" + item + "'");
    }
  }
  return out;
}

nlohmann::ordered_json elimination_json(const EliminationResult<int>& e) {
  nlohmann::ordered_json j;
  j["survivors"] = e.survivors;
  j["rounds"] = e.trace.size();
  j["trace"] = e.trace;
  return j;
}

nlohmann::ordered_json matrix_json(const PayoffMatrix& m) {
  nlohmann::ordered_json j;
  j["matrix"] = m.name;
  j["orientation"] = to_string(m.orientation);
  auto cells = nlohmann::ordered_json::array();
  for (const auto& r : m.row_strategies) {
    for (const auto& c : m.col_strategies) {
      const auto p = pd_payoff(m, r, c);
      cells.push_back({{"row", r}, {"col", c}, {"payoff", {p.row, p.col}}});
    }
  }
  j["cells"] = std::move(cells);
  auto dom = nlohmann::ordered_json::array();
  for (const auto& d : matrix_dominance(m)) {
    dom.push_back({{"dominator", d.dominator},
                   {"dominated", d.dominated},
                   {"kind", d.kind == DominanceKind::kStrict ? "strict" : "weak"}});
  }
  j["dominance"] = std::move(dom);
  const auto profiles = [](const std::vector<Profile>& ps) {
    auto a = nlohmann::ordered_json::array();
    for (const auto& p : ps) a.push_back({p.row, p.col});
    return a;
  };
  j["pareto_optimal"] = profiles(pareto_optimal(m));
  j["pure_nash"] = profiles(pure_nash(m));
  return j;
}

std::string short_number(double x) {
  std::ostringstream ss;
  ss << x;
  return ss.str();
}

void print_matrix_text(const PayoffMatrix& m, std::ostream& out) {
  out << m.name << " (" << to_string(m.orientation) << ")\n";
  std::size_t w = 8;
  for (const auto& s : m.row_strategies) w = std::max(w, s.size() + 2);
  out << std::string(w, ' ');
  for (const auto& c : m.col_strategies) out << std::setw(static_cast<int>(w)) << c;
  out << '\n';
  for (const auto& r : m.row_strategies) {
    out << std::setw(static_cast<int>(w)) << std::left << r << std::right;
    for (const auto& c : m.col_strategies) {
      const auto p = pd_payoff(m, r, c);
      out << std::setw(static_cast<int>(w)) << (short_number(p.row) + "," + short_number(p.col));
    }
    out << '\n';
  }
  for (const auto& d : matrix_dominance(m)) {
    out << d.dominator << (d.kind == DominanceKind::kStrict ? " strictly" : " weakly") << " dominates "
        << d.dominated << '\n';
  }
  out << "pareto optimal:";
  for (const auto& p : pareto_optimal(m)) out << " (" << p.row << ", " << p.col << ")";
  out << "\npure nash:";
  for (const auto& p : pure_nash(m)) out << " (" << p.row << ", " << p.col << ")";
  out << '\n';
}

nlohmann::ordered_json traveler_json(const TDGame& t) {
  nlohmann::ordered_json j;
  j["quote_range"] = {t.quote_min, t.quote_max};
  j["penalty"] = t.penalty;
  const auto pay = td_payoff(99, 100, t);
  j["payoff_99_vs_100"] = {pay.a, pay.b};
  j["weakly_dominates_99_100"] = weakly_dominates(99, 100, std::span<const int>(td_quotes(t)),
                                                  [&](int a, int b) { return td_payoff(a, b, t).a; });
  j["elimination"] = elimination_json(td_iterated_elimination(t));
  return j;
}

int cmd_game(const std::string& name, const std::string& format) {
  const auto games = builtin_games();
  std::optional<PayoffMatrix> matrix;
  std::optional<TDGame> traveler;
  for (const auto& m : builtin_matrices()) {
    if (m.name == name) matrix = m;
  }
  if (!matrix) {
    if (std::none_of(games.begin(), games.end(), [&](const GameSpec& g) { return g.name == name; })) {
      std::string known;
      for (const auto& g : games) known += " " + g.name;
      for (const auto& m : builtin_matrices()) known += " " + m.name;
      throw ValidationError("unknown game '" + name + "'; known:" + known);
    }
    const auto& g = find_game(games, name);
    if (const auto* m = g.matrix()) matrix = *m;
    if (const auto* t = g.traveler()) traveler = *t;
    if (!matrix && !traveler) {
      nlohmann::ordered_json j;
      j["game"] = g.name;
      for (const auto& s : g.strategies) j["values"][s.id] = s.value ? json(*s.value) : json(nullptr);
      std::cout << j.dump(2) << '\n';
      return 0;
    }
  }
  if (format == "json") {
    std::cout << (matrix ? matrix_json(*matrix) : traveler_json(*traveler)).dump(2) << '\n';
    return 0;
  }
  if (matrix) {
    print_matrix_text(*matrix, std::cout);
    return 0;
  }
  const auto pay = td_payoff(99, 100, *traveler);
  const auto elim = td_iterated_elimination(*traveler);
  std::cout << "quotes " << traveler->quote_min << ".." << traveler->quote_max << ", penalty " << traveler->penalty
            << "\n(99, 100) -> (" << pay.a << ", " << pay.b << ")\n";
  for (std::size_t r = 0; r < elim.trace.size(); ++r) {
    std::cout << "round " << r + 1 << ": removed";
    for (int q : elim.trace[r]) std::cout << ' ' << q;
    std::cout << '\n';
  }
  std::cout << "survivors:";
  for (int q : elim.survivors) std::cout << ' ' << q;
  std::cout << '\n';
  return 0;
}

fs::path resolve_dir(const std::optional<std::string>& positional, const GlobalFlags& f) {
  if (positional) return *positional;
  if (f.out) return *f.out;
  if (f.config) return load_config(*f.config).out_dir;
  throw ValidationError("no experiment directory given");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual measurement of strategic preferences in language models"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags flags;
  app.add_option("--config", flags.config, "experiment config (JSON)");
  app.add_option("--backend-url", flags.backend_url, "score against a remote backend at this URL");
  app.add_option("--population", flags.population, "population size N");
  app.add_option("--alpha", flags.alpha, "significance level");
  app.add_option("--threshold", flags.threshold, "VBP correlation threshold");
  app.add_option("--seed", flags.seed, "experiment seed");
  app.add_option("--out", flags.out, "output directory");
  app.add_option("--max-in-flight", flags.max_in_flight, "concurrent scoring requests");

  auto* generate = app.add_subcommand("generate", "write the prompt design as JSONL");
  std::vector<std::string> gen_games;
  std::string gen_word = "both";
  generate->add_option("--game", gen_games, "game names (default: config games, else all builtins)");
  generate->add_option("--word", gen_word, "positive | negative | both")
      ->check(CLI::IsMember({"positive", "negative", "both"}));

  auto* run = app.add_subcommand("run", "run an experiment and write its directory");
  bool overwrite = false;
  run->add_flag("--overwrite", overwrite, "replace a completed experiment");

  auto* stats_cmd = app.add_subcommand("stats", "recompute statistics from a measurement store");
  std::optional<std::string> stats_dir;
  std::string stats_test = "";
  stats_cmd->add_option("dir", stats_dir, "experiment directory");
  stats_cmd->add_option("--test", stats_test, "rank_sum | signed_rank (default: as recorded)");

  auto* report = app.add_subcommand("report", "regenerate tables and plots; 3+ dirs add size correlation");
  std::vector<std::string> report_dirs;
  report->add_option("dirs", report_dirs, "experiment directories")->required();

  auto* game = app.add_subcommand("game", "payoff tables, dominance and elimination traces");
  std::string game_name;
  std::string game_format = "text";
  game->add_option("name", game_name, "game or matrix name")->required();
  game->add_option("--format", game_format, "text | json")->check(CLI::IsMember({"text", "json"}));

  auto* oracle = app.add_subcommand("oracle", "compare rank_sum with the brute-force permutation oracle");
  std::string sample_a, sample_b;
  oracle->add_option("--a", sample_a, "comma-separated sample")->required();
  oracle->add_option("--b", sample_b, "comma-separated sample")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*generate) {
      std::vector<GameSpec> games;
      if (!gen_games.empty() || !flags.config) {
        const auto all = builtin_games();
        if (gen_games.empty()) {
          games = all;
        } else {
          for (const auto& n : gen_games) games.push_back(find_game(all, n));
        }
      } else {
        games = resolve_games(config_from_flags(flags));
      }
      std::string out;
      for (const auto& g : games) {
        if (gen_word != "negative") out += to_jsonl(expand(g, g.positive_word));
        if (gen_word != "positive") out += to_jsonl(expand(g, g.negative_word));
      }
      if (flags.out) {
        fs::create_directories(*flags.out);
        detail::write_file(fs::path(*flags.out) / "prompts.jsonl", out);
      } else {
        std::cout << out;
      }
      return 0;
    }
    if (*run) {
      const auto config = config_from_flags(flags);
      RunOptions options;
      options.overwrite = overwrite;
      options.log = &std::cerr;
      const auto r = run_experiment(config, options);
      std::cout << "wrote " << r.dir.string() << " (" << r.records << " records, config " << r.config_hash
                << ")\n";
      if (r.analysis.species) {
        const auto& s = *r.analysis.species;
        std::cout << "base rho_pos " << format_number(s.base_verdict.rho_pos) << ", has_vbp "
                  << s.base_verdict.has_vbp << ", self_consistent " << s.base_verdict.self_consistent
                  << ", brittle " << s.brittle << ", label p " << format_number(s.label_sensitivity.p_value)
                  << '\n';
      }
      for (const auto& g : r.analysis.preferences) {
        for (const auto& o : g.outcomes) {
          std::cout << g.game << ": " << o.left << " vs " << o.right << " -> " << to_string(o.relation) << '\n';
        }
      }
      return 0;
    }
    if (*stats_cmd) {
      const fs::path dir = resolve_dir(stats_dir, flags);
      const Manifest m = read_manifest(dir);
      const auto records = MeasurementStore::load(dir / "measurements.jsonl").records();
      const TestKind test = stats_test.empty() ? m.test : parse_test_kind(stats_test);
      const double alpha = flags.alpha.value_or(m.alpha);
      const double threshold = flags.threshold.value_or(m.threshold);
      if (!(alpha > 0 && alpha < 1)) throw ValidationError("alpha must lie in (0, 1)");
      if (!(threshold > 0 && threshold < 1)) throw ValidationError("threshold must lie in (0, 1)");
      const auto a = analyze(records, m.games, m.model, alpha, threshold, test);
      nlohmann::ordered_json j;
      j["experiment_id"] = m.experiment_id;
      j["species_report"] = a.species ? to_ordered_json(*a.species) : nlohmann::ordered_json(nullptr);
      j["preferences"] = preferences_json(a, test);
      std::cout << j.dump(2) << '\n';
      return 0;
    }
    if (*report) {
      std::vector<SpeciesRegistryEntry> registry;
      double threshold = kDefaultThreshold;
      for (const auto& d : report_dirs) {
        const auto a = write_reports(d);
        threshold = read_manifest(d).threshold;
        if (a.species) registry.push_back(registry_entry(*a.species));
        std::cout << "reports written to " << d << '\n';
      }
      if (report_dirs.size() >= 3) {
        const fs::path out = flags.out ? fs::path(*flags.out) : fs::path(".");
        fs::create_directories(out);
        const auto sc = size_correlation(registry);
        nlohmann::ordered_json j;
        j["species"] = sc.species;
        j["rho_size_vbp"] = sc.rho_size_vbp;
        j["rho_size_label"] = sc.rho_size_label;
        j["rho_size_population"] = std::isnan(sc.rho_size_population) ? nlohmann::ordered_json(nullptr)
                                                                         : nlohmann::ordered_json(sc.rho_size_population);
        detail::write_file(out / "size_correlation.json", j.dump(2) + "\n");
        detail::write_file(out / "registry.csv", registry_csv(registry));
        detail::write_file(out / "species_rho.svg", species_rho_svg(registry, threshold));
        detail::write_file(out / "size_vbp.svg", size_scatter_svg(registry, false, sc.rho_size_vbp));
        detail::write_file(out / "size_label.svg", size_scatter_svg(registry, true, sc.rho_size_label));
        std::cout << j.dump(2) << '\n';
      }
      return 0;
    }
    if (*game) return cmd_game(game_name, game_format);
    if (*oracle) {
      const auto a = parse_sample(sample_a);
      const auto b = parse_sample(sample_b);
      const auto fast = stats::rank_sum(a, b);
      nlohmann::ordered_json j;
      j["rank_sum"] = to_ordered_json(fast);
      if (a.size() + b.size() <= stats::kOracleLimit) {
        const auto slow = stats::exact_perm_oracle(a, b);
        j["oracle"] = to_ordered_json(slow);
        j["agree"] = slow.p_value == fast.p_value;
      } else {
        j["oracle"] = nullptr;
      }
      std::cout << j.dump(2) << '\n';
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
