#ifndef NMAR_ESTIMATION_HPP
#define NMAR_ESTIMATION_HPP

// Full-information maximum likelihood over grouped monotone-dropout counts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nmar/distributions.hpp"
#include "nmar/error.hpp"
#include "nmar/model.hpp"
#include "nmar/optimize.hpp"
#include "nmar/rng.hpp"

namespace nmar {

/// Grouped observed records sharing one horizon. Either every record carries
/// a covariate value or none does.
class Dataset {
 public:
  Dataset(int horizon, std::vector<ObservedRecord> records,
          std::vector<std::string> group_labels = {})
      : horizon_(horizon), records_(std::move(records)), labels_(std::move(group_labels)) {
    if (horizon < 2) throw DataError("horizon must be >= 2");
    if (records_.empty()) throw DataError("dataset has no records");
    has_cov_ = records_.front().x.has_value();
    std::int64_t total = 0;
    for (const auto& r : records_) {
      if (r.y.empty() || r.t() > horizon) throw DataError("record length outside [1, T]");
      for (int b : r.y)
        if (b != 0 && b != 1) throw DataError("responses must be 0 or 1");
      if (r.count < 0) throw DataError("negative count");
      if (r.x.has_value() != has_cov_) throw DataError("covariate present on some records only");
      if (r.x && *r.x != 0 && *r.x != 1) throw DataError("covariate must be 0 or 1");
      total += r.count;
    }
    if (total <= 0) throw DataError("dataset total count must be positive");
    total_ = total;
  }

  int horizon() const { return horizon_; }
  bool has_covariate() const { return has_cov_; }
  const std::vector<ObservedRecord>& records() const { return records_; }
  std::int64_t total_count() const { return total_; }
  /// Group label for covariate level i (or the single pooled label).
  const std::vector<std::string>& group_labels() const { return labels_; }

  std::vector<int> covariate_levels() const {
    std::vector<int> lv;
    for (const auto& r : records_)
      if (r.x && std::find(lv.begin(), lv.end(), *r.x) == lv.end()) lv.push_back(*r.x);
    std::sort(lv.begin(), lv.end());
    return lv;
  }

  /// Duplicates merged, zero counts dropped, sorted by (x, t, y).
  Dataset canonical() const {
    std::map<std::pair<int, std::pair<int, Bits>>, std::int64_t> acc;
    for (const auto& r : records_) acc[{r.x.value_or(-1), {r.t(), r.y}}] += r.count;
    std::vector<ObservedRecord> out;
    for (const auto& [key, n] : acc) {
      if (n == 0) continue;
      const std::optional<int> x = key.first < 0 ? std::nullopt : std::optional<int>(key.first);
      out.push_back({x, key.second.second, n});
    }
    return Dataset(horizon_, std::move(out), labels_);
  }

  /// Same data with the covariate marginalized out.
  Dataset pooled() const {
    std::vector<ObservedRecord> out = records_;
    for (auto& r : out) r.x.reset();
    std::string label;
    for (const auto& l : labels_) label += (label.empty() ? "" : "+") + l;
    return Dataset(horizon_, std::move(out), label.empty() ? std::vector<std::string>{} : std::vector<std::string>{label})
        .canonical();
  }

  /// FNV-1a over the canonical records; equal data gives equal fingerprints.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xFFU;
        h *= 0x100000001b3ULL;
      }
    };
    feed(static_cast<std::uint64_t>(horizon_));
    for (const auto& r : canonical().records_) {
      feed(static_cast<std::uint64_t>(r.x.value_or(-1)));
      feed(static_cast<std::uint64_t>(r.t()));
      for (int b : r.y) feed(static_cast<std::uint64_t>(b));
      feed(static_cast<std::uint64_t>(r.count));
    }
    return h;
  }

  bool operator==(const Dataset&) const = default;

 private:
  int horizon_;
  std::vector<ObservedRecord> records_;
  std::vector<std::string> labels_;
  bool has_cov_ = false;
  std::int64_t total_ = 0;
};

inline void check_compatible(const Dataset& data, const ModelSpec& spec) {
  if (data.horizon() != spec.horizon())
    throw DataError("dataset horizon " + std::to_string(data.horizon()) + " != model horizon " +
                    std::to_string(spec.horizon()));
  if (data.has_covariate() != spec.has_covariate())
    throw DataError(spec.has_covariate() ? "model needs a covariate the data lack"
                                         : "data carry a covariate the model ignores");
}

/// Sum of count * log g_t. Returns -inf when a positive-count pattern has
/// zero probability.
inline double loglik(const Dataset& data, const ModelSpec& spec, const ParamSet& params) {
  check_compatible(data, spec);
  double ll = 0.0;
  for (const auto& r : data.records()) {
    if (r.count == 0) continue;
    const double g = pattern_prob(spec, params, r);
    if (!(g > 0.0)) return -std::numeric_limits<double>::infinity();
    ll += static_cast<double>(r.count) * std::log(g);
  }
  return ll;
}

/// Step base for the observed-information Hessian. Larger than the gradient
/// step because the four-point stencil divides rounding error by h^2.
inline constexpr double kHessianStep = 1e-4;

inline optim::Vector gradient(const Dataset& data, const ModelSpec& spec, const ParamSet& params) {
  const auto x = pack_free(spec, params);
  const optim::Objective f = [&](const optim::Vector& v) {
    return loglik(data, spec, unpack_free(spec, std::span<const double>(v.data(), static_cast<std::size_t>(v.size()))));
  };
  return optim::central_gradient(f, Eigen::Map<const optim::Vector>(x.data(), static_cast<Eigen::Index>(x.size())));
}

/// Negative Hessian of the log-likelihood over the free coordinates.
inline optim::Matrix observed_info(const Dataset& data, const ModelSpec& spec, const ParamSet& params) {
  const auto x = pack_free(spec, params);
  const optim::Objective f = [&](const optim::Vector& v) {
    return -loglik(data, spec, unpack_free(spec, std::span<const double>(v.data(), static_cast<std::size_t>(v.size()))));
  };
  return optim::central_hessian(f, Eigen::Map<const optim::Vector>(x.data(), static_cast<Eigen::Index>(x.size())),
                                kHessianStep);
}

struct WaldResult {
  std::vector<double> se;
  std::vector<double> pvalues;
  bool singular = false;
};

/// Standard errors from the inverse information diagonal; a singular or
/// indefinite information matrix gives se = +inf.
inline WaldResult wald(std::span<const double> mle, const optim::Matrix& info) {
  const auto n = static_cast<std::size_t>(info.rows());
  if (mle.size() != n) throw std::invalid_argument("estimate/information size mismatch");
  WaldResult w;
  w.se.assign(n, std::numeric_limits<double>::infinity());
  w.pvalues.assign(n, 1.0);
  if (n == 0) return w;
  Eigen::SelfAdjointEigenSolver<optim::Matrix> eig(info);
  const auto& ev = eig.eigenvalues();
  if (!(ev.minCoeff() > 1e-12 * std::max(ev.maxCoeff(), 0.0))) {
    w.singular = true;
    return w;
  }
  const optim::Matrix inv = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    w.se[i] = v > 0.0 ? std::sqrt(v) : std::numeric_limits<double>::infinity();
    w.pvalues[i] = dist::wald_pvalue(mle[i], w.se[i]);
  }
  return w;
}

struct FitOptions {
  int n_starts = 10;
  std::uint64_t seed = 1;
  double tol = 1e-6;
  int max_iter = 1000;
  /// Extra starting points tried after the standard schedule; projected onto
  /// the model's fixed slopes.
  std::vector<ParamSet> warm_starts;
  /// Upper bound on concurrent starts; 0 means hardware concurrency.
  unsigned threads = 0;
};

struct StartOutcome {
  double loglik = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
};

struct FitResult {
  ModelSpec spec{2, 1};
  ParamSet params;
  double loglik = -std::numeric_limits<double>::infinity();
  std::vector<std::string> names;  // free coordinates
  std::vector<double> estimate;    // free coordinates
  optim::Matrix observed_info;
  std::vector<double> se;
  std::vector<double> pvalues;
  bool info_singular = false;
  bool converged = false;
  double grad_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int n_starts_used = 0;
  int best_start = -1;
  std::vector<StartOutcome> starts;
  std::vector<double> best_objective_history;  // running best loglik per start
  std::uint64_t data_fingerprint = 0;
  std::int64_t n_obs = 0;
};

/// Start k of the standard schedule: zeros for k = 0, otherwise each free
/// coordinate uniform on [-2, 2] from stream k of the seed.
inline std::vector<double> start_point(const ModelSpec& spec, std::uint64_t seed, int k) {
  std::vector<double> x(n_free(spec), 0.0);
  if (k == 0) return x;
  auto rng = CounterRng::stream(seed, static_cast<std::uint64_t>(k));
  for (auto& v : x) v = rng.uniform(-2.0, 2.0);
  return x;
}

inline FitResult fit(const Dataset& data, const ModelSpec& spec, const FitOptions& opt = {}) {
  check_compatible(data, spec);
  if (opt.n_starts < 1 && opt.warm_starts.empty()) throw std::invalid_argument("need at least one start");

  std::vector<std::vector<double>> starts;
  for (int k = 0; k < opt.n_starts; ++k) starts.push_back(start_point(spec, opt.seed, k));
  for (const auto& w : opt.warm_starts) starts.push_back(pack_free(spec, project(spec, w)));

  const optim::Objective objective = [&](const optim::Vector& v) {
    return -loglik(data, spec, unpack_free(spec, std::span<const double>(v.data(), static_cast<std::size_t>(v.size()))));
  };
  optim::BfgsOptions bo;
  bo.tol = opt.tol;
  bo.max_iter = opt.max_iter;

  auto run = [&](std::size_t k) {
    const auto& s = starts[k];
    return optim::bfgs(objective, Eigen::Map<const optim::Vector>(s.data(), static_cast<Eigen::Index>(s.size())), bo);
  };

  std::vector<optim::BfgsResult> runs(starts.size());
  unsigned width = opt.threads ? opt.threads : std::max(1U, std::thread::hardware_concurrency());
  for (std::size_t base = 0; base < starts.size(); base += width) {
    const std::size_t end = std::min(starts.size(), base + width);
    if (width == 1) {
      runs[base] = run(base);
      continue;
    }
    std::vector<std::future<optim::BfgsResult>> jobs;
    for (std::size_t k = base; k < end; ++k) jobs.push_back(std::async(std::launch::async, run, k));
    for (std::size_t k = base; k < end; ++k) runs[k] = jobs[k - base].get();
  }

  FitResult res;
  res.spec = spec;
  res.names = free_names(spec);
  res.data_fingerprint = data.fingerprint();
  res.n_obs = data.total_count();
  res.n_starts_used = static_cast<int>(starts.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const double ll = -runs[k].f;
    res.starts.push_back({ll, runs[k].converged, runs[k].iterations});
    // strict comparison keeps the lowest index on ties
    if (ll > best) {
      best = ll;
      res.best_start = static_cast<int>(k);
    }
    res.best_objective_history.push_back(best);
  }
  if (res.best_start < 0) throw NumericalError("likelihood is zero at every start");

  const auto& win = runs[static_cast<std::size_t>(res.best_start)];
  res.estimate.assign(win.x.data(), win.x.data() + win.x.size());
  res.params = unpack_free(spec, res.estimate);
  res.loglik = best;
  res.converged = win.converged && std::isfinite(best);
  res.grad_norm = win.grad.size() ? win.grad.norm() : std::numeric_limits<double>::infinity();
  res.iterations = win.iterations;
  res.observed_info = observed_info(data, spec, res.params);
  auto w = wald(res.estimate, res.observed_info);
  res.se = std::move(w.se);
  res.pvalues = std::move(w.pvalues);
  res.info_singular = w.singular;
  return res;
}

}  // namespace nmar

#endif  // NMAR_ESTIMATION_HPP
