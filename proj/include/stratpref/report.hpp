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

// Reporting views over committed measurement stores: CSV tables, SVG
// scatter plots, the cross-species registry and the size correlations.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <locale>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "stratpref/error.hpp"
#include "stratpref/preference.hpp"
#include "stratpref/stats.hpp"

namespace stratpref {

// Shortest round-trip decimal, locale independent.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  return nlohmann::json(x).dump();
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string member_rho_csv(const SpeciesReport& r) {
  std::ostringstream out;
  out << "model_name,member_id,rho_pos,rho_neg,has_vbp,self_consistent\n";
  const auto row = [&](int member, const VBPVerdict& v) {
    out << csv_escape(r.model_name) << ',' << member << ',' << format_number(v.rho_pos) << ','
        << format_number(v.rho_neg) << ',' << (v.has_vbp ? "true" : "false") << ','
        << (v.self_consistent ? "true" : "false") << '\n';
  };
  row(0, r.base_verdict);
  for (std::size_t i = 0; i < r.member_verdicts.size(); ++i) row(static_cast<int>(i + 1), r.member_verdicts[i]);
  return out.str();
}

struct GamePreferences {
  std::string game;
  std::vector<PreferenceOutcome> outcomes;
};

inline std::string preferences_csv(const std::vector<GamePreferences>& games) {
  std::ostringstream out;
  out << "game,left,right,relation,best_decision,worst_decision,pos_statistic,pos_p_value,neg_statistic,"
         "neg_p_value,alpha\n";
  for (const auto& g : games) {
    for (const auto& o : g.outcomes) {
      out << csv_escape(g.game) << ',' << csv_escape(o.left) << ',' << csv_escape(o.right) << ','
          << to_string(o.relation) << ',' << to_string(o.best_decision) << ',' << to_string(o.worst_decision)
          << ',' << format_number(o.pos_test.statistic) << ',' << format_number(o.pos_test.p_value) << ','
          << format_number(o.neg_test.statistic) << ',' << format_number(o.neg_test.p_value) << ','
          << format_number(o.alpha) << '\n';
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Registry and size correlation

struct SpeciesRegistryEntry {
  std::string model_name;
  std::int64_t param_count = 0;
  double base_rho_pos = 0;
  std::vector<double> member_rho_pos;
  double label_statistic = 0;
  double label_p_value = 1;
};

inline SpeciesRegistryEntry registry_entry(const SpeciesReport& r) {
  if (r.param_count <= 0) throw ValidationError("registry entry '" + r.model_name + "' needs param_count > 0");
  SpeciesRegistryEntry e;
  e.model_name = r.model_name;
  e.param_count = r.param_count;
  e.base_rho_pos = r.base_verdict.rho_pos;
  for (const auto& v : r.member_verdicts) e.member_rho_pos.push_back(v.rho_pos);
  e.label_statistic = r.label_sensitivity.statistic;
  e.label_p_value = r.label_sensitivity.p_value;
  return e;
}

struct SizeCorrelation {
  double rho_size_vbp = 0;       // log10 size vs base rho_pos
  double rho_size_label = 0;     // log10 size vs Kruskal-Wallis H of the base model
  double rho_size_population = std::numeric_limits<double>::quiet_NaN();  // pooled (size, member rho) pairs
  std::size_t species = 0;
};

inline SizeCorrelation size_correlation(std::span<const SpeciesRegistryEntry> registry) {
  if (registry.size() < 3) throw ValidationError("size correlation needs at least 3 species");
  std::vector<double> size, vbp, label, pooled_size, pooled_rho;
  for (const auto& e : registry) {
    if (e.param_count <= 0) throw ValidationError("species '" + e.model_name + "' has param_count <= 0");
    const double s = std::log10(static_cast<double>(e.param_count));
    size.push_back(s);
    vbp.push_back(e.base_rho_pos);
    label.push_back(e.label_statistic);
    for (double r : e.member_rho_pos) {
      pooled_size.push_back(s);
      pooled_rho.push_back(r);
    }
  }
  if (std::all_of(size.begin(), size.end(), [&](double s) { return s == size[0]; })) {
    throw ValidationError("size correlation is degenerate: all species have the same size");
  }
  SizeCorrelation out;
  out.species = registry.size();
  out.rho_size_vbp = stats::spearman(size, vbp).rho;
  out.rho_size_label = stats::spearman(size, label).rho;
  if (pooled_rho.size() >= 3 &&
      std::any_of(pooled_rho.begin(), pooled_rho.end(), [&](double r) { return r != pooled_rho[0]; })) {
    out.rho_size_population = stats::spearman(pooled_size, pooled_rho).rho;
  }
  return out;
}

inline std::string registry_csv(std::span<const SpeciesRegistryEntry> registry) {
  std::ostringstream out;
  out << "model_name,param_count,log10_params,base_rho_pos,median_member_rho_pos,members,label_statistic,"
         "label_p_value\n";
  for (const auto& e : registry) {
    const double med = e.member_rho_pos.empty() ? std::numeric_limits<double>::quiet_NaN() : median(e.member_rho_pos);
    out << csv_escape(e.model_name) << ',' << e.param_count << ','
        << format_number(std::log10(static_cast<double>(e.param_count))) << ',' << format_number(e.base_rho_pos)
        << ',' << format_number(med) << ',' << e.member_rho_pos.size() << ',' << format_number(e.label_statistic)
        << ',' << format_number(e.label_p_value) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// SVG

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fixed(double x, int digits = 2) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss << std::fixed << std::setprecision(digits) << x;
  return ss.str();
}

struct Frame {
  double width = 640, height = 400, left = 60, right = 20, top = 30, bottom = 70;
  double x0 = 0, x1 = 1, y0 = -1, y1 = 1;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return top + (y1 - y) / (y1 - y0) * (height - top - bottom); }
};

inline void open_svg(std::ostringstream& out, const Frame& f, const std::string& title, const std::string& ylabel) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << f.width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
      << xml_escape(title) << "</text>\n";
  out << "<line x1=\"" << f.left << "\" y1=\"" << f.top << "\" x2=\"" << f.left << "\" y2=\""
      << f.height - f.bottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << f.left << "\" y1=\"" << f.height - f.bottom << "\" x2=\"" << f.width - f.right
      << "\" y2=\"" << f.height - f.bottom << "\" stroke=\"black\"/>\n";
  for (double y : {f.y0, (f.y0 + f.y1) / 2, f.y1}) {
    out << "<text x=\"" << f.left - 6 << "\" y=\"" << fixed(f.py(y) + 4) << "\" text-anchor=\"end\">" << fixed(y)
        << "</text>\n";
  }
  out << "<text x=\"14\" y=\"" << f.height / 2 << "\" transform=\"rotate(-90 14 " << f.height / 2
      << ")\" text-anchor=\"middle\">" << xml_escape(ylabel) << "</text>\n";
}

inline void hline(std::ostringstream& out, const Frame& f, double y, const std::string& style) {
  out << "<line x1=\"" << f.left << "\" y1=\"" << fixed(f.py(y)) << "\" x2=\"" << f.width - f.right << "\" y2=\""
      << fixed(f.py(y)) << "\" " << style << "/>\n";
}

inline std::string star(double cx, double cy, double r) {
  std::ostringstream pts;
  for (int i = 0; i < 10; ++i) {
    const double a = -std::numbers::pi / 2 + i * std::numbers::pi / 5;
    const double rr = i % 2 ? r * 0.45 : r;
    pts << (i ? " " : "") << fixed(cx + rr * std::cos(a)) << ',' << fixed(cy + rr * std::sin(a));
  }
  return "<polygon points=\"" + pts.str() + "\" fill=\"gold\" stroke=\"black\"/>";
}

}  // namespace detail

// Member rho_pos per species, one column each, base model drawn as a star,
// with the VBP threshold as a dashed guide.
inline std::string species_rho_svg(std::span<const SpeciesRegistryEntry> species, double threshold) {
  detail::Frame f;
  f.width = std::max(320.0, 90.0 * static_cast<double>(species.size()) + 100);
  f.x0 = -0.5;
  f.x1 = static_cast<double>(species.size()) - 0.5;
  std::ostringstream out;
  detail::open_svg(out, f, "Value-preference correlation per member", "Spearman rho (best word)");
  detail::hline(out, f, threshold, "stroke=\"red\" stroke-dasharray=\"4 3\"");
  detail::hline(out, f, 0.0, "stroke=\"#bbb\"");
  for (std::size_t i = 0; i < species.size(); ++i) {
    const auto& e = species[i];
    const double cx = f.px(static_cast<double>(i));
    const std::size_t n = e.member_rho_pos.size();
    for (std::size_t m = 0; m < n; ++m) {
      // Deterministic horizontal spread so overlapping members stay visible.
      const double dx = n > 1 ? (static_cast<double>(m) / static_cast<double>(n - 1) - 0.5) * 30.0 : 0.0;
      out << "<circle cx=\"" << detail::fixed(cx + dx) << "\" cy=\"" << detail::fixed(f.py(e.member_rho_pos[m]))
          << "\" r=\"2.5\" fill=\"steelblue\" fill-opacity=\"0.6\"/>\n";
    }
    out << detail::star(cx, f.py(e.base_rho_pos), 7) << '\n';
    out << "<text x=\"" << detail::fixed(cx) << "\" y=\"" << f.height - f.bottom + 16
        << "\" text-anchor=\"middle\">" << detail::xml_escape(e.model_name) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

// Scatter of one statistic against log10 model size.
inline std::string size_scatter_svg(std::span<const SpeciesRegistryEntry> species, bool label_axis, double rho) {
  std::vector<double> xs, ys;
  for (const auto& e : species) {
    xs.push_back(std::log10(static_cast<double>(e.param_count)));
    ys.push_back(label_axis ? e.label_statistic : e.base_rho_pos);
  }
  detail::Frame f;
  f.x0 = xs.empty() ? 0 : std::floor(*std::min_element(xs.begin(), xs.end()));
  f.x1 = xs.empty() ? 1 : std::ceil(*std::max_element(xs.begin(), xs.end()));
  if (f.x1 <= f.x0) f.x1 = f.x0 + 1;
  if (label_axis) {
    f.y0 = 0;
    f.y1 = ys.empty() ? 1 : std::max(1.0, *std::max_element(ys.begin(), ys.end()) * 1.1);
  }
  std::ostringstream out;
  const std::string what = label_axis ? "Label sensitivity (Kruskal-Wallis H)" : "Base-model rho (best word)";
  detail::open_svg(out, f, what + " vs size, rho = " + detail::fixed(rho), what);
  for (double x = f.x0; x <= f.x1 + 1e-9; x += 1) {
    out << "<text x=\"" << detail::fixed(f.px(x)) << "\" y=\"" << f.height - f.bottom + 16
        << "\" text-anchor=\"middle\">1e" << static_cast<int>(x) << "</text>\n";
  }
  out << "<text x=\"" << f.width / 2 << "\" y=\"" << f.height - 20
      << "\" text-anchor=\"middle\">parameters (log scale)</text>\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out << "<circle cx=\"" << detail::fixed(f.px(xs[i])) << "\" cy=\"" << detail::fixed(f.py(ys[i]))
        << "\" r=\"4\" fill=\"steelblue\"><title>" << detail::xml_escape(species[i].model_name)
        << "</title></circle>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace stratpref
