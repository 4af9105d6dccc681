#include "qgame/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qgame {

std::vector<double> sample_means(const ObservationSet& obs) {
  if (obs.counts.empty()) throw std::invalid_argument("sample_means: no observations");
  std::vector<double> mean(obs.schedule.times.size(), 0.0);
  for (const auto& row : obs.counts)
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += row[i];
  for (double& m : mean) m /= static_cast<double>(obs.counts.size());
  return mean;
}

SupportEstimate estimate_support(const ObservationSet& obs, bool atom_at_zero) {
  const auto& times = obs.schedule.times;
  const int m = obs.schedule.size();
  if (m < 3) throw std::invalid_argument("estimate_support: needs at least 3 instants");

  const auto eligible = [&](int i) { return !atom_at_zero || times[i] > 0.0; };
  SupportEstimate sup;
  for (const auto& row : obs.counts) {
    for (int i = 1; i < m; ++i) {
      if (row[i] - row[i - 1] < 1) continue;
      // increase over (t_{i-1}, t_i]: right endpoint bounds t_a from above,
      // left endpoint bounds t_b from below
      if (eligible(i) && (sup.a_hat < 0 || i < sup.a_hat)) sup.a_hat = i;
      if (eligible(i - 1) && i - 1 > sup.b_hat) sup.b_hat = i - 1;
    }
  }
  return sup;
}

void attach_grid_truth(SupportEstimate& sup, const SamplingSchedule& schedule,
                       const EquilibriumDistribution& fe) {
  const auto& times = schedule.times;
  sup.a_tilde = sup.b_tilde = -1;
  for (int i = 0; i < schedule.size(); ++i) {
    if (sup.a_tilde < 0 && times[i] >= fe.support_start) sup.a_tilde = i;
    if (times[i] <= fe.support_end) sup.b_tilde = i;
  }
}

double farthest_partner(double t, const std::vector<double>& candidates) {
  if (candidates.size() < 2)
    throw std::invalid_argument("farthest_partner: needs at least two candidates");
  // the argmax of |s - t| over a sorted set sits at an extreme; ties break low
  const double lo = candidates.front(), hi = candidates.back();
  return std::abs(t - lo) >= std::abs(hi - t) ? lo : hi;
}

double pair_estimate(double t_i, double q_i, double t_j, double q_j, double mu) {
  if (t_i == t_j) throw std::invalid_argument("pair_estimate: equal times");
  if (t_j == 0.0) return -(q_i - q_j / 2.0) / (mu * t_i);
  if (t_i == 0.0) return -(q_j - q_i / 2.0) / (mu * t_j);
  return -(q_i - q_j) / (mu * (t_i - t_j));
}

double pair_estimate_early_birds(double s, double q_s, double t, double q_t, double mu) {
  if (s == t) throw std::invalid_argument("pair_estimate_early_birds: equal times");
  if (s > t) return pair_estimate_early_birds(t, q_t, s, q_s, mu);  // symmetric
  const double slope = (q_s - q_t) / (mu * (s - t));
  if (t <= 0.0) return 1.0 - slope;            // both before opening
  if (s <= 0.0) return s / (s - t) - slope;    // straddling the opening
  return -slope;                               // both after opening
}

Weights pairing_weights(const std::vector<double>& times, double mu) {
  if (times.size() < 2)
    throw std::invalid_argument("pairing_weights: needs at least two times");
  const int m = static_cast<int>(times.size());
  Weights w;
  w.times = times;
  w.k.resize(m);
  w.g.assign(m, 0.0);
  std::vector<double> partner(m);
  for (int i = 0; i < m; ++i) {
    partner[i] = farthest_partner(times[i], times);
    w.k[i] = m * (times[i] - partner[i]) * mu;
  }
  for (int i = 0; i < m; ++i) {
    double acc = -1.0 / w.k[i];
    for (int j = 0; j < m; ++j)
      if (j != i && partner[j] == times[i]) acc += 1.0 / w.k[j];
    w.g[i] = acc;
  }
  return w;
}

namespace {

EstimationResult failure(SupportEstimate sup, std::string reason) {
  EstimationResult res;
  res.success = false;
  res.support = sup;
  res.failure_reason = std::move(reason);
  return res;
}

// Shared aggregation: farthest pairing over tset, mean of the per-pair
// estimates, linear-combination weights over weight_times.
EstimationResult aggregate(const SupportEstimate& sup, const std::vector<double>& tset,
                           const std::vector<double>& weight_times,
                           const std::vector<double>& times,
                           const std::vector<double>& means, double mu, bool early_birds) {
  auto q_of = [&](double t) {
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    return means[static_cast<std::size_t>(it - times.begin())];
  };
  EstimationResult res;
  res.success = true;
  res.support = sup;
  res.estimation_times = tset;
  double sum = 0.0;
  for (double t : tset) {
    PairEstimate pe;
    pe.t = t;
    pe.partner = farthest_partner(t, tset);
    pe.value = early_birds
                   ? pair_estimate_early_birds(t, q_of(t), pe.partner, q_of(pe.partner), mu)
                   : pair_estimate(t, q_of(t), pe.partner, q_of(pe.partner), mu);
    res.pairs.push_back(pe);
    sum += pe.value;
  }
  res.theta_hat = sum / static_cast<double>(tset.size());
  res.weights = pairing_weights(weight_times, mu);
  return res;
}

}  // namespace

EstimationResult mean_estimator(const ObservationSet& obs, double mu, bool include_zero) {
  const auto& times = obs.schedule.times;
  const auto means = sample_means(obs);
  SupportEstimate sup = estimate_support(obs, /*atom_at_zero=*/true);
  if (!sup.found()) return failure(sup, "no increase observed");
  const double t_lo = times[sup.a_hat], t_hi = times[sup.b_hat];
  if (t_lo > t_hi)
    return failure(sup, "estimated support degenerate: t_a_hat > t_b_hat");

  std::vector<double> inside;
  for (double t : times)
    if (t >= t_lo && t <= t_hi) inside.push_back(t);
  if (inside.size() < 2)
    return failure(sup, "fewer than two sampling instants inside the estimated support");

  std::vector<double> tset = inside;
  const bool has_zero = std::binary_search(times.begin(), times.end(), 0.0);
  if (include_zero && has_zero) tset.insert(tset.begin(), 0.0);

  // The CLT weights are defined for supports excluding time zero, so the
  // variance coefficients always come from the positive-time instants.
  return aggregate(sup, tset, inside, times, means, mu, /*early_birds=*/false);
}

EstimationResult estimator_early_birds(const ObservationSet& obs, double mu) {
  const auto& times = obs.schedule.times;
  const auto means = sample_means(obs);
  SupportEstimate sup = estimate_support(obs, /*atom_at_zero=*/false);
  if (!sup.found()) return failure(sup, "no increase observed");
  const double t_lo = times[sup.a_hat], t_hi = times[sup.b_hat];
  if (t_lo > t_hi)
    return failure(sup, "estimated support degenerate: t_a_hat > t_b_hat");

  std::vector<double> inside;
  for (double t : times)
    if (t >= t_lo && t <= t_hi) inside.push_back(t);
  if (inside.size() < 2)
    return failure(sup, "fewer than two sampling instants inside the estimated support");

  return aggregate(sup, inside, inside, times, means, mu, /*early_birds=*/true);
}

double asymptotic_variance(const std::vector<double>& g, const MomentSummary& sigma) {
  const std::size_t n = g.size();
  if (sigma.variance.size() != n || sigma.covariance.size() != n)
    throw std::invalid_argument("asymptotic_variance: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += g[i] * g[i] * sigma.variance[i];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) acc += 2.0 * g[i] * g[j] * sigma.covariance[i][j];
  return acc;
}

}  // namespace qgame
