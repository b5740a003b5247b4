#ifndef NMAR_SELECTION_HPP
#define NMAR_SELECTION_HPP

// Likelihood-ratio comparison of dropout mechanisms and the sweep over
// small mechanism-slope subsets.

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nmar/distributions.hpp"
#include "nmar/error.hpp"
#include "nmar/estimation.hpp"
#include "nmar/model.hpp"

namespace nmar::select {

struct SubmodelSpec {
  std::vector<SlopeId> estimated;  // canonical slope order
  ModelSpec spec;

  std::string label() const {
    std::string s;
    for (const auto& id : estimated) s += (s.empty() ? "" : ",") + id.name();
    return s.empty() ? "none" : s;
  }
};

/// Every subset of the base model's mechanism slopes of size 1..max_size,
/// ordered by size and then lexicographically in canonical slope order
/// (tau[2,1], tau[2,2], tau[3,2], ...).
inline std::vector<SubmodelSpec> enumerate_submodels(const ModelSpec& base, int max_size = 3) {
  const auto universe = base.all_slopes();
  const int n = static_cast<int>(universe.size());
  if (max_size < 0) throw std::invalid_argument("negative subset size");
  std::vector<SubmodelSpec> out;
  for (int k = 1; k <= std::min(max_size, n); ++k) {
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
      SubmodelSpec sm{{}, base};
      std::set<SlopeId> free;
      for (int i : idx) {
        sm.estimated.push_back(universe[static_cast<std::size_t>(i)]);
        free.insert(universe[static_cast<std::size_t>(i)]);
      }
      sm.spec = base.with_free_slopes(free);
      out.push_back(std::move(sm));
      int pos = k - 1;
      while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
      if (pos < 0) break;
      ++idx[static_cast<std::size_t>(pos)];
      for (int i = pos + 1; i < k; ++i) idx[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i - 1)] + 1;
    }
  }
  return out;
}

namespace detail {

inline bool nested(const ModelSpec& sub, const ModelSpec& full) {
  if (sub.horizon() != full.horizon() || sub.has_covariate() != full.has_covariate()) return false;
  for (int t = 2; t <= sub.horizon(); ++t)
    if (sub.lags(t) != full.lags(t)) return false;
  return std::includes(full.free_slopes().begin(), full.free_slopes().end(), sub.free_slopes().begin(),
                       sub.free_slopes().end());
}

inline void check_nested(const FitResult& sub, const FitResult& full) {
  if (sub.data_fingerprint != full.data_fingerprint) throw std::invalid_argument("fits use different datasets");
  if (!nested(sub.spec, full.spec)) throw std::invalid_argument("models are not nested");
}

}  // namespace detail

/// 2 * (loglik_full - loglik_sub).
inline double deviance(const FitResult& sub, const FitResult& full) {
  detail::check_nested(sub, full);
  return 2.0 * (full.loglik - sub.loglik);
}

struct LrtResult {
  double stat = 0.0;
  int df = 0;
  double critical = 0.0;
  bool reject = false;
};

inline LrtResult lrt(const FitResult& sub, const FitResult& full, double alpha = 0.05) {
  detail::check_nested(sub, full);
  const int df = static_cast<int>(n_free(full.spec)) - static_cast<int>(n_free(sub.spec));
  if (df <= 0) throw std::invalid_argument("likelihood-ratio test needs df > 0");
  LrtResult r;
  r.stat = deviance(sub, full);
  r.df = df;
  r.critical = dist::chisq_quantile(1.0 - alpha, df);
  r.reject = r.stat > r.critical;
  return r;
}

struct SelectionRow {
  int index = 0;  // 1-based
  std::vector<SlopeId> estimated;
  std::string label;
  double deviance = 0.0;
  int df = 0;
  double loglik = 0.0;
  bool converged = false;
  std::string error;  // non-empty when the row's fit failed
};

struct SelectionTable {
  FitResult full;
  std::vector<SelectionRow> rows;
};

struct SelectionOptions {
  int max_size = 3;
  FitOptions fit;
  unsigned threads = 0;  // concurrent row fits; 0 means hardware concurrency
};

/// Fits the base model once, then every submodel warm-started from the full
/// MLE (slopes outside the subset zeroed) on top of the usual start schedule.
inline SelectionTable selection_table(const Dataset& data, const ModelSpec& base, const SelectionOptions& opt = {}) {
  SelectionTable table;
  table.full = fit(data, base, opt.fit);
  const auto subs = enumerate_submodels(base, opt.max_size);
  const int full_free = static_cast<int>(n_free(base));

  auto run = [&](std::size_t i) {
    const auto& sm = subs[i];
    SelectionRow row;
    row.index = static_cast<int>(i) + 1;
    row.estimated = sm.estimated;
    row.label = sm.label();
    row.df = full_free - static_cast<int>(n_free(sm.spec));
    try {
      FitOptions fo = opt.fit;
      fo.threads = 1;
      fo.warm_starts.push_back(table.full.params);
      const auto f = fit(data, sm.spec, fo);
      row.loglik = f.loglik;
      row.converged = f.converged;
      row.deviance = deviance(f, table.full);
    } catch (const std::exception& e) {
      row.error = e.what();
      row.deviance = std::nan("");
    }
    return row;
  };

  table.rows.resize(subs.size());
  const unsigned width = opt.threads ? opt.threads : std::max(1U, std::thread::hardware_concurrency());
  for (std::size_t base_i = 0; base_i < subs.size(); base_i += width) {
    const std::size_t end = std::min(subs.size(), base_i + width);
    if (width == 1) {
      table.rows[base_i] = run(base_i);
      continue;
    }
    std::vector<std::future<SelectionRow>> jobs;
    for (std::size_t i = base_i; i < end; ++i) jobs.push_back(std::async(std::launch::async, run, i));
    for (std::size_t i = base_i; i < end; ++i) table.rows[i] = jobs[i - base_i].get();
  }
  return table;
}

}  // namespace nmar::select

#endif  // NMAR_SELECTION_HPP
