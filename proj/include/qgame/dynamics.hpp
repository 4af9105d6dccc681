#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qgame/equilibrium.hpp"
#include "qgame/model.hpp"

namespace qgame {

// Distribution of the queue length at one grid time: probs[k] = P(Q(t) = k),
// k = 0..K. Entries sum to one.
struct QueueStateDistribution {
  double time = 0.0;
  std::vector<double> probs;

  double mean() const;
  double second_moment() const;
};

struct MomentSummary {
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<std::vector<double>> covariance;  // symmetric, diag = variance
};

// Poisson(mean) truncated at K, tail mass folded into the top state.
QueueStateDistribution poisson_state(double mean, int truncation, double time);

// One explicit Euler step of the forward equations with the complementarity
// closure for the top state. arrival_rate = lambda * f(t). Service is off
// before time zero (early-birds pre-opening interval). Rejects
// delta*(arrival_rate + mu) >= 1, which would produce negative probabilities.
QueueStateDistribution step(const QueueStateDistribution& state, double arrival_rate,
                            const ModelParams& params);

// Queue-length distributions on the grid under F_e, from the first support
// time until the system is empty (P0 > 1 - 1e-8) or the horizon.
std::vector<QueueStateDistribution> propagate(const EquilibriumDistribution& fe,
                                              const ModelParams& params);

// (mean, variance) per grid slot.
std::pair<std::vector<double>, std::vector<double>> moments(
    const std::vector<QueueStateDistribution>& series);

// Cov[Q(s), Q(t)] by conditional re-propagation from every source state with
// P_k(s) > 1e-12, using the same arrival rates. Requires s <= t.
double covariance(const EquilibriumDistribution& fe, const ModelParams& params,
                  double s, double t, const std::vector<QueueStateDistribution>& series);

// Full moment summary over sorted grid-aligned times.
MomentSummary covariance_matrix(const EquilibriumDistribution& fe,
                                const ModelParams& params,
                                const std::vector<double>& times);

// Columns: time, p0, mean, var.
void write_dynamics_csv(const std::vector<QueueStateDistribution>& series,
                        const std::string& path);

// Series lookup by grid time; throws if t is outside the propagated range.
const QueueStateDistribution& state_at(const std::vector<QueueStateDistribution>& series,
                                       double t);

// Number of steps (this thread) whose complementarity closure went below
// -1e-9 before clamping; stays zero for well-posed runs.
long dynamics_clamp_events();

}  // namespace qgame
