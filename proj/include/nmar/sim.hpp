#ifndef NMAR_SIM_HPP
#define NMAR_SIM_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nmar/estimation.hpp"
#include "nmar/model.hpp"
#include "nmar/rng.hpp"

namespace nmar::sim {

struct SimConfig {
  std::int64_t n_subjects = 1000;
  std::uint64_t seed = 1;
  double covariate_prob = 0.5;
};

/// Draws one subject from stream `index` of `seed`. Draw order: covariate
/// (if any), y_1, then for t = 2..T the response y_t followed by the dropout
/// indicator M_t. Returns the observed record (count 1).
inline ObservedRecord simulate_subject(const ModelSpec& spec, const ParamSet& p, std::uint64_t seed,
                                       std::uint64_t index, double covariate_prob) {
  auto rng = CounterRng::stream(seed, index);
  ObservedRecord r;
  if (spec.has_covariate()) r.x = rng.bernoulli(covariate_prob) ? 1 : 0;
  r.y.push_back(rng.bernoulli(outcome_prob(spec, p, 1, {}, 1, r.x)) ? 1 : 0);
  for (int t = 2; t <= spec.horizon(); ++t) {
    const int yt = rng.bernoulli(outcome_prob(spec, p, t, r.y, 1, r.x)) ? 1 : 0;
    const bool drop = rng.bernoulli(dropout_hazard(spec, p, t, r.y.back(), yt));
    if (drop) break;
    r.y.push_back(yt);
  }
  return r;
}

inline Dataset simulate(const ModelSpec& spec, const ParamSet& p, const SimConfig& cfg) {
  if (cfg.n_subjects <= 0) throw std::invalid_argument("n_subjects must be positive");
  if (!(cfg.covariate_prob >= 0.0 && cfg.covariate_prob <= 1.0))
    throw std::invalid_argument("covariate_prob must be in [0, 1]");
  std::map<std::pair<int, Bits>, std::int64_t> counts;
  for (std::int64_t i = 0; i < cfg.n_subjects; ++i) {
    auto r = simulate_subject(spec, p, cfg.seed, static_cast<std::uint64_t>(i), cfg.covariate_prob);
    ++counts[{r.x.value_or(-1), std::move(r.y)}];
  }
  std::vector<ObservedRecord> recs;
  for (auto& [key, n] : counts) {
    const std::optional<int> x = key.first < 0 ? std::nullopt : std::optional<int>(key.first);
    recs.push_back({x, key.second, n});
  }
  std::vector<std::string> labels = spec.has_covariate() ? std::vector<std::string>{"0", "1"}
                                                         : std::vector<std::string>{"all"};
  return Dataset(spec.horizon(), std::move(recs), std::move(labels)).canonical();
}

}  // namespace nmar::sim

#endif  // NMAR_SIM_HPP
