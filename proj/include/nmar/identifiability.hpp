#ifndef NMAR_IDENTIFIABILITY_HPP
#define NMAR_IDENTIFIABILITY_HPP

// Identifiability audits: the per-time counting condition, the explicit
// AR(1) equivalence witness, the AR(2) lag-2 condition, and a numerical
// Jacobian rank of the parameter -> observed-pattern map.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nmar/error.hpp"
#include "nmar/model.hpp"
#include "nmar/oracle.hpp"

namespace nmar::ident {

struct TimeCount {
  int t = 1;
  int n_params = 0;       // dim(xi_t)
  int n_constraints = 0;  // 2^{dim h} per covariate level
  bool pass = false;
};

/// Necessary condition per time: parameters at t must not outnumber the
/// cells of the response window they act on.
inline std::vector<TimeCount> counting_check(const ModelSpec& spec) {
  const int levels = spec.has_covariate() ? 2 : 1;
  const int cov = spec.has_covariate() ? 1 : 0;
  std::vector<TimeCount> out;
  out.push_back({1, 1 + cov, 2 * levels, 1 + cov <= 2 * levels});
  for (int t = 2; t <= spec.horizon(); ++t) {
    std::set<int> positions{t, t - 1};
    for (int k : spec.lags(t)) positions.insert(t - k);
    int n = 1 + static_cast<int>(spec.lags(t).size()) + cov + 1;
    n += spec.slope_free({t, 1}) ? 1 : 0;
    n += spec.slope_free({t, 0}) ? 1 : 0;
    const int c = (1 << static_cast<int>(positions.size())) * levels;
    out.push_back({t, n, c, n <= c});
  }
  return out;
}

/// Exponentiated AR(1) slice at one time t: a0 = e^{theta_t0},
/// a1 = e^{theta_{t,t-1}}, b0 = e^{tau_t0}, b1 = e^{tau_{t,t-1}},
/// b2 = e^{tau_{t,t}}, with tau on the dropout-hazard logit scale (so the
/// retention probability at y_{t-1} = y_t = 0 is 1 / (1 + b0)).
struct Ar1Slice {
  double a0 = 1.0, a1 = 1.0, b0 = 1.0, b1 = 1.0, b2 = 1.0;

  bool valid() const {
    for (double v : {a0, a1, b0, b1, b2})
      if (!(v > 0.0) || !std::isfinite(v)) return false;
    return true;
  }
  bool operator==(const Ar1Slice&) const = default;
};

/// Reciprocals of the four cell probabilities f_t(y_{t-1}, y_t) in the order
/// (0,0), (0,1), (1,0), (1,1). Two slices are observationally equivalent at t
/// iff these agree.
inline std::array<double, 4> cell_products(const Ar1Slice& s) {
  const double a01 = s.a0 * s.a1;
  return {(1.0 + s.a0) * (1.0 + s.b0), (1.0 + 1.0 / s.a0) * (1.0 + s.b0 * s.b2),
          (1.0 + a01) * (1.0 + s.b0 * s.b1), (1.0 + 1.0 / a01) * (1.0 + s.b0 * s.b1 * s.b2)};
}

/// Max relative difference of the four cell products.
inline double witness_residual(const Ar1Slice& truth, const Ar1Slice& cand) {
  const auto p = cell_products(truth);
  const auto q = cell_products(cand);
  double r = 0.0;
  for (std::size_t i = 0; i < 4; ++i) r = std::max(r, std::abs(p[i] - q[i]) / p[i]);
  return r;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return lo < v && v < hi; }
};

/// Values of a0 for which an equivalent slice with positive b0, b2 exists.
inline Interval witness_interval(const Ar1Slice& truth) {
  if (!truth.valid()) throw std::invalid_argument("slice entries must be positive and finite");
  return {truth.a0 / (1.0 + truth.b0 * truth.b2 * (1.0 + truth.a0)),
          (1.0 + truth.a0) * (1.0 + truth.b0) - 1.0};
}

/// The unique slice with a0 = a_tilde matching all four cells of `truth`.
///
/// b0 and b2 follow from the (0,0) and (0,1) cells. Writing A = a0 * a1 and
/// eliminating b0 * b1 = C3 / (1 + A) - 1 through the (1,0) cell turns the
/// (1,1) cell into a linear equation in A:
///   A * (C4 - 1 + b2) = 1 - b2 + b2 * C3.
inline Ar1Slice ar1_witness(const Ar1Slice& truth, double a_tilde) {
  const auto iv = witness_interval(truth);
  if (!iv.contains(a_tilde))
    throw std::invalid_argument("a_tilde outside (" + std::to_string(iv.lo) + ", " + std::to_string(iv.hi) + ")");
  if (a_tilde == truth.a0) return truth;
  const auto c = cell_products(truth);
  Ar1Slice w;
  w.a0 = a_tilde;
  const double d0 = c[0] - 1.0 - a_tilde;  // b0 * (1 + a_tilde)
  w.b0 = d0 / (1.0 + a_tilde);
  w.b2 = (c[1] * a_tilde - 1.0 - a_tilde) / d0;
  const double A = (1.0 - w.b2 + w.b2 * c[2]) / (c[3] - 1.0 + w.b2);
  w.a1 = A / a_tilde;
  w.b1 = (c[2] - 1.0 - A) * (1.0 + a_tilde) / ((1.0 + A) * d0);
  if (!w.valid()) throw NumericalError("witness solution is not strictly positive");
  return w;
}

namespace detail {

inline void require_ar1_slice(const ModelSpec& spec, int t) {
  if (spec.has_covariate()) throw std::invalid_argument("AR(1) slice needs a model without covariate");
  if (spec.lags(t) != std::vector<int>{1}) throw std::invalid_argument("AR(1) slice needs lag set {1}");
}

}  // namespace detail

inline Ar1Slice ar1_slice(const ModelSpec& spec, const ParamSet& p, int t) {
  detail::require_ar1_slice(spec, t);
  const auto& o = p.outcome_at(t);
  const auto& m = p.mech_at(t);
  return {std::exp(o.intercept), std::exp(o.lag_coef[0]), std::exp(m.intercept), std::exp(m.prev),
          std::exp(m.current)};
}

/// Replaces slice t of `p` by `s` (taking logs).
inline ParamSet embed_ar1_slice(const ModelSpec& spec, ParamSet p, int t, const Ar1Slice& s) {
  detail::require_ar1_slice(spec, t);
  if (!spec.slope_free({t, 1}) || !spec.slope_free({t, 0}))
    throw std::invalid_argument("AR(1) witness needs both mechanism slopes free at t");
  auto& o = p.outcome_at(t);
  auto& m = p.mech_at(t);
  o.intercept = std::log(s.a0);
  o.lag_coef[0] = std::log(s.a1);
  m.intercept = std::log(s.b0);
  m.prev = std::log(s.b1);
  m.current = std::log(s.b2);
  return p;
}

/// max |g(xi) - g(xi')| over every observable pattern and covariate level.
inline double verify_equivalence(const ModelSpec& spec, const ParamSet& a, const ParamSet& b) {
  if (spec.horizon() > oracle::kMaxHorizon) throw std::invalid_argument("horizon exceeds enumeration guard");
  double d = 0.0;
  for (const auto& r : all_patterns(spec)) d = std::max(d, std::abs(pattern_prob(spec, a, r) - pattern_prob(spec, b, r)));
  return d;
}

struct Ar2Verdict {
  int t = 2;
  double lag2_coef = 0.0;  // theta_{t,t-2}; 0 at t = 2
  bool identified = false;
};

/// Slice t >= 3 of an AR(2) model is identified iff |theta_{t,t-2}| > tol.
/// Slice t = 2 has no lag-2 term and is reported as not identified.
inline std::vector<Ar2Verdict> ar2_condition(const ModelSpec& spec, const ParamSet& p, double tol = 1e-8) {
  if (spec.order() != 2) throw std::invalid_argument("ar2_condition needs an AR(2) model");
  std::vector<Ar2Verdict> out;
  out.push_back({2, 0.0, false});
  for (int t = 3; t <= spec.horizon(); ++t) {
    const auto& l = spec.lags(t);
    if (std::find(l.begin(), l.end(), 2) == l.end())
      throw std::invalid_argument("lag 2 missing at time " + std::to_string(t));
    const double c = ParamSet(p).lag(spec, t, 2);
    out.push_back({t, c, std::abs(c) > tol});
  }
  return out;
}

struct RankDiagnostic {
  int rank = 0;
  int n_free = 0;
  std::vector<double> singular_values;  // descending
};

/// Numerical rank of d(pattern probabilities) / d(free coordinates),
/// counting singular values above rel_tol * sigma_max. Derivatives use the
/// five-point central stencil.
inline RankDiagnostic jacobian_rank(const ModelSpec& spec, const ParamSet& p, double rel_tol = 1e-8) {
  if (spec.horizon() > oracle::kMaxHorizon) throw std::invalid_argument("horizon exceeds enumeration guard");
  const auto patterns = all_patterns(spec);
  const auto x = pack_free(spec, p);
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd J(static_cast<Eigen::Index>(patterns.size()), n);
  auto eval = [&](std::vector<double> v) {
    const auto q = unpack_free(spec, v);
    Eigen::VectorXd g(static_cast<Eigen::Index>(patterns.size()));
    for (std::size_t i = 0; i < patterns.size(); ++i) g[static_cast<Eigen::Index>(i)] = pattern_prob(spec, q, patterns[i]);
    return g;
  };
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    const double h = 1e-3 * std::max(1.0, std::abs(x[jj]));
    auto shifted = [&](double k) {
      auto v = x;
      v[jj] += k * h;
      return eval(std::move(v));
    };
    J.col(j) = (-shifted(2) + 8.0 * shifted(1) - 8.0 * shifted(-1) + shifted(-2)) / (12.0 * h);
  }
  RankDiagnostic d;
  d.n_free = static_cast<int>(n);
  if (n == 0) return d;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  const auto& sv = svd.singularValues();
  d.singular_values.assign(sv.data(), sv.data() + sv.size());
  const double cut = rel_tol * (sv.size() ? sv[0] : 0.0);
  for (double s : d.singular_values) d.rank += s > cut ? 1 : 0;
  return d;
}

enum class Verdict { identified, not_identified, inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::identified: return "identified";
    case Verdict::not_identified: return "not_identified";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

struct IdentReport {
  std::vector<TimeCount> per_time;
  std::optional<RankDiagnostic> rank;
  std::optional<ParamSet> witness;
  std::optional<Ar1Slice> witness_slice;
  double witness_gap = 0.0;
  Verdict verdict = Verdict::inconclusive;
};

struct IdentOptions {
  bool witness = false;
  double rank_tol = 1e-8;
};

/// Counting check, Jacobian rank at `p`, and optionally a slice-2 AR(1)
/// witness embedded into a full parameter set.
inline IdentReport audit(const ModelSpec& spec, const ParamSet& p, const IdentOptions& opt = {}) {
  IdentReport rep;
  rep.per_time = counting_check(spec);
  const bool counts_ok = std::all_of(rep.per_time.begin(), rep.per_time.end(), [](const TimeCount& c) { return c.pass; });
  if (spec.horizon() <= oracle::kMaxHorizon) rep.rank = jacobian_rank(spec, p, opt.rank_tol);

  if (opt.witness) {
    const auto truth = ar1_slice(spec, p, 2);
    const auto iv = witness_interval(truth);
    const double a_tilde = std::sqrt(iv.lo * truth.a0);
    rep.witness_slice = ar1_witness(truth, a_tilde);
    rep.witness = embed_ar1_slice(spec, p, 2, *rep.witness_slice);
    rep.witness_gap = verify_equivalence(spec, p, *rep.witness);
  }

  if (!counts_ok || (rep.rank && rep.rank->rank < rep.rank->n_free) || rep.witness)
    rep.verdict = Verdict::not_identified;
  else if (rep.rank)
    rep.verdict = Verdict::identified;
  return rep;
}

}  // namespace nmar::ident

#endif  // NMAR_IDENTIFIABILITY_HPP
