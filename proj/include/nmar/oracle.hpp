#ifndef NMAR_ORACLE_HPP
#define NMAR_ORACLE_HPP

// Brute-force ground truth. Builds the complete-data joint of (M, Y) by the
// chain rule and sums out unobserved responses exhaustively. Deliberately
// shares nothing with pattern_prob beyond the two conditional primitives.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "nmar/model.hpp"

namespace nmar::oracle {

inline constexpr int kMaxHorizon = 20;

struct CompleteOutcome {
  int t = 1;  // last observed wave
  Bits y;     // all T responses
  std::optional<int> x;
};

/// Pairwise (cascade) summation; fixed association order, so results are
/// reproducible bit for bit.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double d : v) s += d;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double complete_joint(const ModelSpec& spec, const ParamSet& p, const CompleteOutcome& o) {
  const int T = spec.horizon();
  if (o.t < 1 || o.t > T) throw std::invalid_argument("dropout index out of range");
  if (o.y.size() != static_cast<std::size_t>(T)) throw std::invalid_argument("outcome length != T");
  for (int b : o.y)
    if (b != 0 && b != 1) throw std::invalid_argument("responses must be 0 or 1");
  const std::span<const int> y(o.y);

  double py = outcome_prob(spec, p, 1, {}, y[0], o.x);
  for (int s = 2; s <= T; ++s) py *= outcome_prob(spec, p, s, y, y[static_cast<std::size_t>(s - 1)], o.x);

  double pm = 1.0;
  for (int s = 2; s <= o.t; ++s)
    pm *= 1.0 - dropout_hazard(spec, p, s, y[static_cast<std::size_t>(s - 2)], y[static_cast<std::size_t>(s - 1)]);
  if (o.t < T)
    pm *= dropout_hazard(spec, p, o.t + 1, y[static_cast<std::size_t>(o.t - 1)], y[static_cast<std::size_t>(o.t)]);
  return py * pm;
}

inline double marginalize(const ModelSpec& spec, const ParamSet& p, const ObservedRecord& r) {
  const int T = spec.horizon();
  if (T > kMaxHorizon) throw std::invalid_argument("horizon exceeds enumeration guard");
  validate_record(spec, r);
  const int t = r.t();
  const int free_bits = T - t;
  std::vector<double> terms;
  terms.reserve(std::size_t{1} << free_bits);
  CompleteOutcome o{t, Bits(static_cast<std::size_t>(T)), r.x};
  std::copy(r.y.begin(), r.y.end(), o.y.begin());
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << free_bits); ++code) {
    for (int i = 0; i < free_bits; ++i)
      o.y[static_cast<std::size_t>(t + i)] = static_cast<int>((code >> i) & 1U);
    terms.push_back(complete_joint(spec, p, o));
  }
  return pairwise_sum(terms);
}

/// Sum of complete_joint over every (t, y) and covariate level; each level's
/// distribution is separately normalized, so the result is the number of levels.
inline double total_mass(const ModelSpec& spec, const ParamSet& p) {
  const int T = spec.horizon();
  if (T > kMaxHorizon) throw std::invalid_argument("horizon exceeds enumeration guard");
  std::vector<double> terms;
  const int levels = spec.has_covariate() ? 2 : 1;
  for (int xi = 0; xi < levels; ++xi) {
    CompleteOutcome o{1, Bits(static_cast<std::size_t>(T)),
                      spec.has_covariate() ? std::optional<int>(xi) : std::nullopt};
    for (int t = 1; t <= T; ++t) {
      o.t = t;
      for (std::uint64_t code = 0; code < (std::uint64_t{1} << T); ++code) {
        for (int i = 0; i < T; ++i) o.y[static_cast<std::size_t>(i)] = static_cast<int>((code >> i) & 1U);
        terms.push_back(complete_joint(spec, p, o));
      }
    }
  }
  return pairwise_sum(terms);
}

struct PopulationLogLik {
  double value = 0.0;
  bool neg_inf = false;  // model gives zero mass where the truth does not
};

/// Expected observed-data log-likelihood of `params` under data drawn from
/// `truth`. Covariate levels are mixed with `covariate_weights`.
inline PopulationLogLik population_loglik(const ModelSpec& spec, const ParamSet& params,
                                          const ParamSet& truth,
                                          std::array<double, 2> covariate_weights = {0.5, 0.5}) {
  std::vector<double> terms;
  PopulationLogLik out;
  for (const auto& r : all_patterns(spec)) {
    const double w = r.x ? covariate_weights[static_cast<std::size_t>(*r.x)] : 1.0;
    const double mass = w * marginalize(spec, truth, r);
    if (mass == 0.0) continue;
    const double model = marginalize(spec, params, r);
    if (!(model > 0.0)) {
      out.neg_inf = true;
      continue;
    }
    terms.push_back(mass * std::log(model));
  }
  out.value = out.neg_inf ? -std::numeric_limits<double>::infinity() : pairwise_sum(terms);
  return out;
}

/// L(truth) - L(params); nonnegative by Gibbs' inequality. Summed termwise
/// as mass * -log1p((model - truth) / truth) so that equal distributions give
/// an exact zero rather than the difference of two large sums.
inline double kl_gap(const ModelSpec& spec, const ParamSet& params, const ParamSet& truth,
                     std::array<double, 2> covariate_weights = {0.5, 0.5}) {
  std::vector<double> terms;
  for (const auto& r : all_patterns(spec)) {
    const double w = r.x ? covariate_weights[static_cast<std::size_t>(*r.x)] : 1.0;
    const double g_truth = marginalize(spec, truth, r);
    if (w * g_truth == 0.0) continue;
    const double g_model = marginalize(spec, params, r);
    if (!(g_model > 0.0)) return std::numeric_limits<double>::infinity();
    terms.push_back(-w * g_truth * std::log1p((g_model - g_truth) / g_truth));
  }
  return pairwise_sum(terms);
}

}  // namespace nmar::oracle

#endif  // NMAR_ORACLE_HPP
