#ifndef NMAR_MODEL_HPP
#define NMAR_MODEL_HPP

// Conditional AR(p) models for binary longitudinal outcomes with monotone
// dropout. Everything here is a pure function of its arguments.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmar {

using Bits = std::vector<int>;

/// Identifies a dropout-mechanism slope: `lag == 1` is the coefficient on
/// y_{t-1}, `lag == 0` the coefficient on the (possibly unobserved) y_t.
struct SlopeId {
  int t = 2;
  int lag = 0;

  auto operator<=>(const SlopeId&) const = default;

  /// "tau[t,s]" with s the time index of the multiplied response.
  std::string name() const {
    return "tau[" + std::to_string(t) + "," + std::to_string(t - lag) + "]";
  }
};

/// Horizon, AR order, covariate presence, which mechanism slopes are
/// estimated, and the outcome lag set at each time.
class ModelSpec {
 public:
  /// Full NMAR model: every mechanism slope free, default lags.
  ModelSpec(int horizon, int order, bool has_covariate = false)
      : horizon_(horizon), order_(order), has_covariate_(has_covariate) {
    if (horizon < 2) throw std::invalid_argument("horizon must be >= 2");
    if (order < 1) throw std::invalid_argument("AR order must be >= 1");
    lags_.resize(static_cast<std::size_t>(horizon - 1));
    for (int t = 2; t <= horizon; ++t) {
      auto& l = lags_[static_cast<std::size_t>(t - 2)];
      for (int k = 1; k <= std::min(order, t - 1); ++k) l.push_back(k);
      free_.insert(SlopeId{t, 1});
      free_.insert(SlopeId{t, 0});
    }
  }

  int horizon() const { return horizon_; }
  int order() const { return order_; }
  bool has_covariate() const { return has_covariate_; }

  const std::vector<int>& lags(int t) const {
    check_time(t);
    return lags_[static_cast<std::size_t>(t - 2)];
  }

  const std::set<SlopeId>& free_slopes() const { return free_; }
  bool slope_free(SlopeId id) const { return free_.contains(id); }

  /// Every mechanism slope in canonical order (t ascending, y_{t-1} first).
  std::vector<SlopeId> all_slopes() const {
    std::vector<SlopeId> out;
    for (int t = 2; t <= horizon_; ++t) {
      out.push_back({t, 1});
      out.push_back({t, 0});
    }
    return out;
  }

  ModelSpec with_free_slopes(const std::set<SlopeId>& slopes) const {
    for (const auto& s : slopes) {
      if (s.t < 2 || s.t > horizon_ || (s.lag != 0 && s.lag != 1))
        throw std::invalid_argument("invalid mechanism slope " + s.name());
    }
    ModelSpec out = *this;
    out.free_ = slopes;
    return out;
  }

  ModelSpec with_fixed_slopes(const std::set<SlopeId>& fixed) const {
    std::set<SlopeId> keep;
    for (const auto& s : free_)
      if (!fixed.contains(s)) keep.insert(s);
    for (const auto& s : fixed) {
      if (s.t < 2 || s.t > horizon_ || (s.lag != 0 && s.lag != 1))
        throw std::invalid_argument("invalid mechanism slope " + s.name());
    }
    return with_free_slopes(keep);
  }

  ModelSpec with_lags(int t, std::vector<int> lags) const {
    check_time(t);
    std::sort(lags.begin(), lags.end());
    lags.erase(std::unique(lags.begin(), lags.end()), lags.end());
    for (int k : lags)
      if (k < 1 || k > t - 1)
        throw std::invalid_argument("lag " + std::to_string(k) + " invalid at time " +
                                    std::to_string(t));
    ModelSpec out = *this;
    out.lags_[static_cast<std::size_t>(t - 2)] = std::move(lags);
    return out;
  }

  /// Mechanism with no slopes (MCAR).
  ModelSpec mcar() const { return with_free_slopes({}); }

  /// Mechanism with only the y_{t-1} slopes (MAR).
  ModelSpec mar() const {
    std::set<SlopeId> s;
    for (int t = 2; t <= horizon_; ++t) s.insert({t, 1});
    return with_free_slopes(s);
  }

  bool operator==(const ModelSpec&) const = default;

 private:
  void check_time(int t) const {
    if (t < 2 || t > horizon_)
      throw std::out_of_range("time " + std::to_string(t) + " outside [2, " +
                              std::to_string(horizon_) + "]");
  }

  int horizon_;
  int order_;
  bool has_covariate_;
  std::vector<std::vector<int>> lags_;
  std::set<SlopeId> free_;
};

struct OutcomeSlice {
  double intercept = 0.0;
  std::vector<double> lag_coef;  // aligned with ModelSpec::lags(t)
  double covariate = 0.0;

  bool operator==(const OutcomeSlice&) const = default;
};

struct MechanismSlice {
  double intercept = 0.0;
  double prev = 0.0;     // tau_{t,t-1}
  double current = 0.0;  // tau_{t,t}

  bool operator==(const MechanismSlice&) const = default;
};

/// Logit-scale parameters. `outcome[i]` and `mech[i]` belong to time i + 2.
struct ParamSet {
  double theta1 = 0.0;
  double beta1 = 0.0;
  std::vector<OutcomeSlice> outcome;
  std::vector<MechanismSlice> mech;

  static ParamSet zeros(const ModelSpec& spec) {
    ParamSet p;
    for (int t = 2; t <= spec.horizon(); ++t) {
      OutcomeSlice o;
      o.lag_coef.assign(spec.lags(t).size(), 0.0);
      p.outcome.push_back(std::move(o));
      p.mech.emplace_back();
    }
    return p;
  }

  OutcomeSlice& outcome_at(int t) { return outcome.at(static_cast<std::size_t>(t - 2)); }
  const OutcomeSlice& outcome_at(int t) const {
    return outcome.at(static_cast<std::size_t>(t - 2));
  }
  MechanismSlice& mech_at(int t) { return mech.at(static_cast<std::size_t>(t - 2)); }
  const MechanismSlice& mech_at(int t) const { return mech.at(static_cast<std::size_t>(t - 2)); }

  /// Coefficient on y_{t-k} at time t; throws if k is not in the lag set.
  double& lag(const ModelSpec& spec, int t, int k) {
    const auto& l = spec.lags(t);
    auto it = std::find(l.begin(), l.end(), k);
    if (it == l.end()) throw std::out_of_range("lag not in model");
    return outcome_at(t).lag_coef[static_cast<std::size_t>(it - l.begin())];
  }

  double& slope(SlopeId id) { return id.lag == 1 ? mech_at(id.t).prev : mech_at(id.t).current; }
  double slope(SlopeId id) const {
    return id.lag == 1 ? mech_at(id.t).prev : mech_at(id.t).current;
  }

  bool operator==(const ParamSet&) const = default;
};

// --- flat layout -----------------------------------------------------------

/// One coordinate of the flat layout: theta1, [beta1], then per time t:
/// theta[t,0], lag coefficients, [beta[t]], tau[t,0], tau[t,t-1], tau[t,t].
struct Coordinate {
  std::string name;
  bool free = true;
};

inline std::vector<Coordinate> coordinates(const ModelSpec& spec) {
  std::vector<Coordinate> out;
  const bool cov = spec.has_covariate();
  out.push_back({"theta[1,0]", true});
  if (cov) out.push_back({"beta[1]", true});
  for (int t = 2; t <= spec.horizon(); ++t) {
    const auto ts = std::to_string(t);
    out.push_back({"theta[" + ts + ",0]", true});
    for (int k : spec.lags(t)) out.push_back({"theta[" + ts + "," + std::to_string(t - k) + "]", true});
    if (cov) out.push_back({"beta[" + ts + "]", true});
    out.push_back({"tau[" + ts + ",0]", true});
    for (SlopeId s : {SlopeId{t, 1}, SlopeId{t, 0}}) out.push_back({s.name(), spec.slope_free(s)});
  }
  return out;
}

inline std::size_t n_free(const ModelSpec& spec) {
  std::size_t n = 0;
  for (const auto& c : coordinates(spec)) n += c.free ? 1 : 0;
  return n;
}

inline std::vector<std::string> free_names(const ModelSpec& spec) {
  std::vector<std::string> out;
  for (const auto& c : coordinates(spec))
    if (c.free) out.push_back(c.name);
  return out;
}

inline std::vector<double> flatten(const ModelSpec& spec, const ParamSet& p) {
  std::vector<double> out;
  const bool cov = spec.has_covariate();
  out.push_back(p.theta1);
  if (cov) out.push_back(p.beta1);
  for (int t = 2; t <= spec.horizon(); ++t) {
    const auto& o = p.outcome_at(t);
    const auto& m = p.mech_at(t);
    out.push_back(o.intercept);
    out.insert(out.end(), o.lag_coef.begin(), o.lag_coef.end());
    if (cov) out.push_back(o.covariate);
    out.push_back(m.intercept);
    out.push_back(m.prev);
    out.push_back(m.current);
  }
  return out;
}

inline ParamSet unflatten(const ModelSpec& spec, std::span<const double> v) {
  const auto coords = coordinates(spec);
  if (v.size() != coords.size())
    throw std::invalid_argument("flat vector has " + std::to_string(v.size()) +
                                " entries, model needs " + std::to_string(coords.size()));
  ParamSet p = ParamSet::zeros(spec);
  std::size_t i = 0;
  const bool cov = spec.has_covariate();
  p.theta1 = v[i++];
  if (cov) p.beta1 = v[i++];
  for (int t = 2; t <= spec.horizon(); ++t) {
    auto& o = p.outcome_at(t);
    auto& m = p.mech_at(t);
    o.intercept = v[i++];
    for (auto& c : o.lag_coef) c = v[i++];
    if (cov) o.covariate = v[i++];
    m.intercept = v[i++];
    m.prev = v[i++];
    m.current = v[i++];
  }
  return p;
}

/// Free coordinates only, in flat-layout order.
inline std::vector<double> pack_free(const ModelSpec& spec, const ParamSet& p) {
  const auto coords = coordinates(spec);
  const auto flat = flatten(spec, p);
  std::vector<double> out;
  for (std::size_t i = 0; i < flat.size(); ++i)
    if (coords[i].free) out.push_back(flat[i]);
  return out;
}

/// Inverse of pack_free; fixed slopes come back as exact zeros.
inline ParamSet unpack_free(const ModelSpec& spec, std::span<const double> v) {
  const auto coords = coordinates(spec);
  std::vector<double> flat(coords.size(), 0.0);
  std::size_t j = 0;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (!coords[i].free) continue;
    if (j >= v.size()) throw std::invalid_argument("too few free coordinates");
    flat[i] = v[j++];
  }
  if (j != v.size()) throw std::invalid_argument("too many free coordinates");
  return unflatten(spec, flat);
}

/// Zeroes every slope the spec fixes.
inline ParamSet project(const ModelSpec& spec, ParamSet p) {
  for (SlopeId s : spec.all_slopes())
    if (!spec.slope_free(s)) p.slope(s) = 0.0;
  return p;
}

/// True when `p` has the right shape for `spec` and respects its fixed slopes.
inline bool conforms(const ModelSpec& spec, const ParamSet& p) {
  if (p.outcome.size() != static_cast<std::size_t>(spec.horizon() - 1) ||
      p.mech.size() != p.outcome.size())
    return false;
  for (int t = 2; t <= spec.horizon(); ++t)
    if (p.outcome_at(t).lag_coef.size() != spec.lags(t).size()) return false;
  for (SlopeId s : spec.all_slopes())
    if (!spec.slope_free(s) && p.slope(s) != 0.0) return false;
  if (!spec.has_covariate()) {
    if (p.beta1 != 0.0) return false;
    for (const auto& o : p.outcome)
      if (o.covariate != 0.0) return false;
  }
  return true;
}

// --- data records ------------------------------------------------------------

/// A monotone observed pattern: waves 1..t observed (t = y.size()), the rest
/// missing, seen `count` times.
struct ObservedRecord {
  std::optional<int> x;
  Bits y;
  std::int64_t count = 1;

  int t() const { return static_cast<int>(y.size()); }
  bool operator==(const ObservedRecord&) const = default;
};

struct HistoryWindow {
  Bits values;
  bool operator==(const HistoryWindow&) const = default;
};

// --- probability primitives --------------------------------------------------

inline double expit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// [y_{t-p}, ..., y_t], truncated at y_1. `t` is 1-based.
inline HistoryWindow history_window(std::span<const int> y, int t, int p) {
  if (t < 1 || static_cast<std::size_t>(t) > y.size())
    throw std::out_of_range("history window time out of range");
  if (p < 0) throw std::invalid_argument("negative window order");
  const int first = std::max(1, t - p);
  return HistoryWindow{Bits(y.begin() + (first - 1), y.begin() + t)};
}

namespace detail {

inline void require_covariate(const ModelSpec& spec, const std::optional<int>& x) {
  if (spec.has_covariate() && !x) throw std::invalid_argument("covariate value required");
  if (x && *x != 0 && *x != 1) throw std::invalid_argument("covariate must be 0 or 1");
}

inline double covariate_value(const ModelSpec& spec, const std::optional<int>& x) {
  return spec.has_covariate() ? static_cast<double>(*x) : 0.0;
}

inline double bernoulli(double p_one, int bit) { return bit ? p_one : 1.0 - p_one; }

inline double outcome_logit(const ModelSpec& spec, const ParamSet& p, int t,
                            std::span<const int> history, double x) {
  const auto& o = p.outcome_at(t);
  const auto& l = spec.lags(t);
  double z = o.intercept + o.covariate * x;
  for (std::size_t i = 0; i < l.size(); ++i)
    z += o.lag_coef[i] * history[static_cast<std::size_t>(t - 1 - l[i])];
  return z;
}

}  // namespace detail

/// P(Y_t = y_t | history, x). For t >= 2, `history` holds at least y_1..y_{t-1}.
inline double outcome_prob(const ModelSpec& spec, const ParamSet& p, int t,
                           std::span<const int> history, int y_t, std::optional<int> x = {}) {
  detail::require_covariate(spec, x);
  const double xv = detail::covariate_value(spec, x);
  if (t == 1) return detail::bernoulli(expit(p.theta1 + p.beta1 * xv), y_t);
  if (history.size() < static_cast<std::size_t>(t - 1))
    throw std::invalid_argument("history shorter than t - 1");
  return detail::bernoulli(expit(detail::outcome_logit(spec, p, t, history, xv)), y_t);
}

/// P(M_t = 1 | M_{t-1} = 0, y_{t-1}, y_t).
inline double dropout_hazard(const ModelSpec& spec, const ParamSet& p, int t, int y_prev,
                             int y_t) {
  if (t < 2 || t > spec.horizon()) throw std::out_of_range("hazard time out of range");
  const auto& m = p.mech_at(t);
  return expit(m.intercept + m.prev * y_prev + m.current * y_t);
}

/// f_t = P(M_t = 0 | M_{t-1} = 0, y_{t-1}, y_t) * P(Y_t = y_t | history).
/// `prefix` holds y_1..y_t (at least).
inline double f_slice(const ModelSpec& spec, const ParamSet& p, int t, std::span<const int> prefix,
                      std::optional<int> x = {}) {
  if (t < 2 || t > spec.horizon()) throw std::out_of_range("slice time out of range");
  if (prefix.size() < static_cast<std::size_t>(t)) throw std::invalid_argument("prefix too short");
  const auto ti = static_cast<std::size_t>(t);
  const double stay = 1.0 - dropout_hazard(spec, p, t, prefix[ti - 2], prefix[ti - 1]);
  return stay * outcome_prob(spec, p, t, prefix.first(ti - 1), prefix[ti - 1], x);
}

inline void validate_record(const ModelSpec& spec, const ObservedRecord& r) {
  if (r.y.empty() || r.t() > spec.horizon())
    throw std::invalid_argument("observed prefix length must be in [1, T]");
  for (int b : r.y)
    if (b != 0 && b != 1) throw std::invalid_argument("responses must be 0 or 1");
  if (r.count < 0) throw std::invalid_argument("negative count");
  detail::require_covariate(spec, r.x);
}

/// Probability of observing exactly the prefix `r.y` and then dropping out
/// (or completing, when t = T).
inline double pattern_prob(const ModelSpec& spec, const ParamSet& p, const ObservedRecord& r) {
  validate_record(spec, r);
  const int t = r.t();
  const std::span<const int> y(r.y);
  double g = outcome_prob(spec, p, 1, {}, y[0], r.x);
  for (int s = 2; s <= t; ++s) g *= f_slice(spec, p, s, y, r.x);
  if (t < spec.horizon()) {
    // 1 - sum_{y'} f_{t+1}(y') rewritten as sum_{y'} P(y') * hazard(y'),
    // which is the same quantity without cancellation.
    const int last = y[static_cast<std::size_t>(t - 1)];
    double leave = 0.0;
    for (int b = 0; b <= 1; ++b)
      leave += outcome_prob(spec, p, t + 1, y, b, r.x) * dropout_hazard(spec, p, t + 1, last, b);
    g *= leave;
  }
  return g;
}

/// Every observable (x, prefix) pattern with count 1, ordered by covariate
/// level, prefix length, then binary value of the prefix.
inline std::vector<ObservedRecord> all_patterns(const ModelSpec& spec) {
  std::vector<ObservedRecord> out;
  const int levels = spec.has_covariate() ? 2 : 1;
  for (int xi = 0; xi < levels; ++xi) {
    const std::optional<int> x = spec.has_covariate() ? std::optional<int>(xi) : std::nullopt;
    for (int t = 1; t <= spec.horizon(); ++t) {
      for (std::uint64_t code = 0; code < (std::uint64_t{1} << t); ++code) {
        ObservedRecord r{x, Bits(static_cast<std::size_t>(t)), 1};
        for (int i = 0; i < t; ++i) r.y[static_cast<std::size_t>(i)] = static_cast<int>((code >> (t - 1 - i)) & 1U);
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

/// Upper bound on the number of estimable parameters: cells minus one.
inline std::int64_t param_budget(int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  return (std::int64_t{1} << (horizon + 1)) - 3;
}

/// Parameters in the logistic AR(1) model without covariates.
inline std::int64_t ar1_param_count(int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  return 5 * static_cast<std::int64_t>(horizon) - 4;
}

}  // namespace nmar

#endif  // NMAR_MODEL_HPP
