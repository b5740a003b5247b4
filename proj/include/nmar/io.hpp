#ifndef NMAR_IO_HPP
#define NMAR_IO_HPP

// Count-table CSV ingestion and JSON reports.
//
// CSV layout: header `group,sequence,count`, one row per observed pattern.
// `sequence` is over {0,1,x}; 'x' marks a missing wave and may only appear
// as a suffix. Two distinct group labels become covariate levels 0 and 1 in
// sorted label order; a single label means no covariate.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nmar/error.hpp"
#include "nmar/estimation.hpp"
#include "nmar/identifiability.hpp"
#include "nmar/model.hpp"
#include "nmar/selection.hpp"

namespace nmar::io {

using Json = nlohmann::ordered_json;

namespace detail {

inline std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

[[noreturn]] inline void fail(std::size_t line, const std::string& what) {
  throw DataError(what + " at line " + std::to_string(line));
}

}  // namespace detail

inline Dataset parse_counts(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  struct Row {
    std::string group;
    Bits y;
    std::int64_t count;
  };
  std::vector<Row> rows;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto s = detail::trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto cols = detail::split(s, ',');
    if (!header) {
      if (cols != std::vector<std::string>{"group", "sequence", "count"})
        detail::fail(lineno, "expected header 'group,sequence,count'");
      header = true;
      continue;
    }
    if (cols.size() != 3) detail::fail(lineno, "expected 3 columns");
    const auto& seq = cols[1];
    if (seq.empty()) detail::fail(lineno, "empty sequence");
    if (width == 0) width = seq.size();
    if (seq.size() != width) detail::fail(lineno, "sequence length mismatch");
    Row r{cols[0], {}, 0};
    bool missing = false;
    for (char c : seq) {
      if (c == 'x' || c == 'X') {
        missing = true;
      } else if (c == '0' || c == '1') {
        if (missing) detail::fail(lineno, "non-monotone missingness");
        r.y.push_back(c - '0');
      } else {
        detail::fail(lineno, std::string("unknown character '") + c + "'");
      }
    }
    if (r.y.empty()) detail::fail(lineno, "no observed wave");
    try {
      std::size_t pos = 0;
      const long long n = std::stoll(cols[2], &pos);
      if (pos != cols[2].size()) throw std::invalid_argument("trailing");
      r.count = n;
    } catch (const std::exception&) {
      detail::fail(lineno, "invalid count '" + cols[2] + "'");
    }
    if (r.count < 0) detail::fail(lineno, "negative count");
    rows.push_back(std::move(r));
  }
  if (!header) throw DataError("missing header 'group,sequence,count'");
  if (rows.empty()) throw DataError("no data rows");
  if (width < 2) throw DataError("sequences need at least two waves");

  std::set<std::string> label_set;
  for (const auto& r : rows) label_set.insert(r.group);
  if (label_set.size() > 2) throw DataError("at most two groups are supported, found " + std::to_string(label_set.size()));
  const std::vector<std::string> labels(label_set.begin(), label_set.end());
  const bool cov = labels.size() == 2;
  std::vector<ObservedRecord> recs;
  for (auto& r : rows) {
    std::optional<int> x;
    if (cov) x = r.group == labels[0] ? 0 : 1;
    recs.push_back({x, std::move(r.y), r.count});
  }
  return Dataset(static_cast<int>(width), std::move(recs), labels);
}

inline Dataset parse_counts_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return parse_counts(in);
}

inline std::string sequence_string(const Bits& y, int horizon) {
  std::string s;
  for (int b : y) s += static_cast<char>('0' + b);
  s.append(static_cast<std::size_t>(horizon) - y.size(), 'x');
  return s;
}

/// Canonical CSV (merged, sorted by covariate level, length, prefix).
inline void write_counts(const Dataset& data, std::ostream& out) {
  const auto canon = data.canonical();
  const auto& labels = canon.group_labels();
  out << "group,sequence,count\n";
  for (const auto& r : canon.records()) {
    std::string g;
    if (r.x)
      g = static_cast<std::size_t>(*r.x) < labels.size() ? labels[static_cast<std::size_t>(*r.x)] : std::to_string(*r.x);
    else
      g = labels.empty() ? "all" : labels.front();
    out << g << ',' << sequence_string(r.y, canon.horizon()) << ',' << r.count << '\n';
  }
}

// --- names -------------------------------------------------------------------

/// Accepts "tau[2,1]" or the compact "tau21" (single-digit times).
inline SlopeId parse_slope(const std::string& text, int horizon) {
  static const std::regex bracket(R"(tau\[(\d+),(\d+)\])");
  static const std::regex compact(R"(tau(\d)(\d))");
  std::smatch m;
  const auto s = detail::trim(text);
  if (!std::regex_match(s, m, bracket) && !std::regex_match(s, m, compact))
    throw std::invalid_argument("cannot parse slope '" + s + "'");
  const int t = std::stoi(m[1]);
  const int s2 = std::stoi(m[2]);
  if (t < 2 || t > horizon || (s2 != t && s2 != t - 1))
    throw std::invalid_argument("slope '" + s + "' is not a mechanism slope for T=" + std::to_string(horizon));
  return {t, t - s2};
}

inline std::set<SlopeId> parse_slopes(const std::string& list, int horizon) {
  std::set<SlopeId> out;
  for (const auto& part : detail::split(list, ','))
    if (!part.empty()) out.insert(parse_slope(part, horizon));
  return out;
}

// --- JSON ----------------------------------------------------------------------

/// Non-finite doubles have no JSON literal; they are written as null.
inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline double read_number(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

inline Json spec_json(const ModelSpec& spec) {
  Json j;
  j["T"] = spec.horizon();
  j["p"] = spec.order();
  j["covariate"] = spec.has_covariate();
  Json slopes = Json::array();
  for (const auto& s : spec.free_slopes()) slopes.push_back(s.name());
  j["free_slopes"] = slopes;
  Json lags = Json::object();
  for (int t = 2; t <= spec.horizon(); ++t) lags[std::to_string(t)] = spec.lags(t);
  j["lags"] = lags;
  return j;
}

inline ModelSpec spec_from_json(const Json& j) {
  ModelSpec spec(j.at("T").get<int>(), j.at("p").get<int>(), j.at("covariate").get<bool>());
  std::set<SlopeId> free;
  for (const auto& s : j.at("free_slopes")) free.insert(parse_slope(s.get<std::string>(), spec.horizon()));
  spec = spec.with_free_slopes(free);
  if (j.contains("lags"))
    for (int t = 2; t <= spec.horizon(); ++t) spec = spec.with_lags(t, j.at("lags").at(std::to_string(t)).get<std::vector<int>>());
  return spec;
}

/// name -> value over the full flat layout.
inline Json params_json(const ModelSpec& spec, const ParamSet& p) {
  Json j = Json::object();
  const auto coords = coordinates(spec);
  const auto flat = flatten(spec, p);
  for (std::size_t i = 0; i < coords.size(); ++i) j[coords[i].name] = flat[i];
  return j;
}

/// Missing names default to 0; unknown names are an error.
inline ParamSet params_from_json(const ModelSpec& spec, const Json& j) {
  const auto coords = coordinates(spec);
  std::vector<double> flat(coords.size(), 0.0);
  for (const auto& [name, value] : j.items()) {
    auto it = std::find_if(coords.begin(), coords.end(), [&](const Coordinate& c) { return c.name == name; });
    if (it == coords.end()) throw std::invalid_argument("unknown parameter '" + name + "'");
    flat[static_cast<std::size_t>(it - coords.begin())] = value.get<double>();
  }
  auto p = unflatten(spec, flat);
  if (!conforms(spec, p)) throw std::invalid_argument("a fixed slope has a nonzero value");
  return p;
}

/// "name=value,name=value" inline form.
inline Json params_assignments(const std::string& text) {
  Json j = Json::object();
  // names contain commas, so match assignments rather than splitting
  static const std::regex item(R"(([A-Za-z]+\[[0-9,]+\])\s*=\s*([-+0-9.eE]+))");
  std::size_t pos = 0;
  auto only_separators = [&](std::size_t from, std::size_t to) {
    return text.substr(from, to - from).find_first_not_of(" ,\t") == std::string::npos;
  };
  for (auto it = std::sregex_iterator(text.begin(), text.end(), item); it != std::sregex_iterator(); ++it) {
    const auto at = static_cast<std::size_t>(it->position());
    if (!only_separators(pos, at)) break;
    j[(*it)[1].str()] = std::stod((*it)[2].str());
    pos = at + static_cast<std::size_t>(it->length());
  }
  if (j.empty() || !only_separators(pos, text.size()))
    throw std::invalid_argument("cannot parse parameters '" + text + "'");
  return j;
}

inline Json covariate_map_json(const Dataset& data) {
  Json j = Json::object();
  if (data.has_covariate())
    for (std::size_t i = 0; i < data.group_labels().size(); ++i) j[data.group_labels()[i]] = static_cast<int>(i);
  return j;
}

inline Json fit_json(const FitResult& f) {
  Json j;
  j["model"] = spec_json(f.spec);
  j["n_obs"] = f.n_obs;
  j["loglik"] = number(f.loglik);
  j["params"] = params_json(f.spec, f.params);
  Json est = Json::array();
  for (std::size_t i = 0; i < f.names.size(); ++i) {
    Json e;
    e["name"] = f.names[i];
    e["mle"] = f.estimate[i];
    e["se"] = number(f.se[i]);
    e["pvalue"] = number(f.pvalues[i]);
    est.push_back(e);
  }
  j["estimates"] = est;
  j["information_singular"] = f.info_singular;
  Json conv;
  conv["converged"] = f.converged;
  conv["grad_norm"] = number(f.grad_norm);
  conv["iterations"] = f.iterations;
  conv["n_starts_used"] = f.n_starts_used;
  conv["best_start"] = f.best_start;
  Json hist = Json::array();
  for (double v : f.best_objective_history) hist.push_back(number(v));
  conv["best_objective_history"] = hist;
  j["convergence"] = conv;
  return j;
}

struct FitSummary {
  ModelSpec spec{2, 1};
  ParamSet params;
  double loglik = 0.0;
  std::vector<std::string> names;
  std::vector<double> estimate, se, pvalues;
  bool converged = false;
};

inline FitSummary read_fit_json(const Json& j) {
  FitSummary s;
  s.spec = spec_from_json(j.at("model"));
  s.params = params_from_json(s.spec, j.at("params"));
  s.loglik = read_number(j.at("loglik"));
  for (const auto& e : j.at("estimates")) {
    s.names.push_back(e.at("name").get<std::string>());
    s.estimate.push_back(e.at("mle").get<double>());
    s.se.push_back(read_number(e.at("se")));
    s.pvalues.push_back(read_number(e.at("pvalue")));
  }
  s.converged = j.at("convergence").at("converged").get<bool>();
  return s;
}

inline Json ident_json(const ModelSpec& spec, const ParamSet& at, const ident::IdentReport& rep) {
  Json j;
  j["model"] = spec_json(spec);
  j["at"] = params_json(spec, at);
  Json rows = Json::array();
  for (const auto& c : rep.per_time)
    rows.push_back(Json{{"t", c.t}, {"n_params", c.n_params}, {"n_constraints", c.n_constraints}, {"pass", c.pass}});
  j["per_time"] = rows;
  if (rep.rank) {
    j["jacobian_rank"] = rep.rank->rank;
    j["n_free"] = rep.rank->n_free;
    Json sv = Json::array();
    for (double v : rep.rank->singular_values) sv.push_back(v);
    j["singular_values"] = sv;
  } else {
    j["jacobian_rank"] = nullptr;
    j["n_free"] = static_cast<int>(n_free(spec));
  }
  if (rep.witness) {
    j["witness"] = params_json(spec, *rep.witness);
    j["witness_gap"] = rep.witness_gap;
  }
  j["verdict"] = ident::to_string(rep.verdict);
  return j;
}

inline Json selection_json(const select::SelectionTable& table) {
  Json j;
  j["full"] = fit_json(table.full);
  Json rows = Json::array();
  for (const auto& r : table.rows) {
    Json row;
    row["index"] = r.index;
    Json est = Json::array();
    for (const auto& s : r.estimated) est.push_back(s.name());
    row["estimated"] = est;
    row["deviance"] = number(r.deviance);
    row["df"] = r.df;
    row["loglik"] = number(r.loglik);
    row["converged"] = r.converged;
    if (!r.error.empty()) row["error"] = r.error;
    rows.push_back(row);
  }
  j["rows"] = rows;
  return j;
}

inline void write_json(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed for " + path);
}

}  // namespace nmar::io

#endif  // NMAR_IO_HPP
