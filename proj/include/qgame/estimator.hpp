#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qgame/dynamics.hpp"
#include "qgame/simulator.hpp"

namespace qgame {

// Support boundary estimates as 0-based indices into the sampling schedule;
// -1 when no increase was observed. a/b_tilde hold the grid-truth boundaries
// (first instant >= t_a, last instant <= t_b) when filled by
// attach_grid_truth; only meaningful when the true support is known.
struct SupportEstimate {
  int a_hat = -1;
  int b_hat = -1;
  int a_tilde = -1;
  int b_tilde = -1;
  bool found() const { return a_hat >= 0 && b_hat >= 0; }
};

struct PairEstimate {
  double t = 0.0;
  double partner = 0.0;
  double value = 0.0;
};

// Linear-combination coefficients of a farthest-point pairing, written so
// that the mean estimator is sum_i g_i qhat(t_i):
// k_i = m (t_i - d(t_i)) mu,  g_i = sum_{j != i} 1{d(t_j)=t_i}/k_j - 1/k_i.
// They satisfy sum g_i = 0 and mu * sum g_i t_i = -1.
struct Weights {
  std::vector<double> times;
  std::vector<double> g;
  std::vector<double> k;
};

struct EstimationResult {
  bool success = false;
  std::string failure_reason;
  double theta_hat = std::numeric_limits<double>::quiet_NaN();
  SupportEstimate support;
  std::vector<double> estimation_times;  // T-hat as used for theta_hat
  std::vector<PairEstimate> pairs;
  Weights weights;  // over the positive-time instants of the support
  std::optional<double> asymptotic_variance;
};

std::vector<double> sample_means(const ObservationSet& obs);

// First/last observed queue-length increase across all days. With
// atom_at_zero (the no-early-birds variants) instants at times <= 0 cannot
// mark a support boundary; time zero is the atom, not part of [t_a, t_b].
SupportEstimate estimate_support(const ObservationSet& obs, bool atom_at_zero = true);

// Fill a_tilde/b_tilde from the true support (test/oracle mode).
void attach_grid_truth(SupportEstimate& sup, const SamplingSchedule& schedule,
                       const EquilibriumDistribution& fe);

// Element of candidates farthest from t; ties break toward the smaller time.
// candidates must be sorted with at least two elements; never returns t.
double farthest_partner(double t, const std::vector<double>& candidates);

// Pairwise moment estimate of theta (no-early-birds cost structure). A time
// equal to zero uses the half-queue branch; pass q at zero unhalved.
double pair_estimate(double t_i, double q_i, double t_j, double q_j, double mu);

// Early-birds branches keyed on the signs of the pair.
double pair_estimate_early_birds(double s, double q_s, double t, double q_t, double mu);

Weights pairing_weights(const std::vector<double>& times, double mu);

// Farthest-point mean estimator. Success requires at least two positive-time
// sampling instants inside the estimated support; with include_zero an
// observed time 0 joins the estimation set through the half-queue branch.
// Weights (and so the asymptotic variance) always refer to the positive-time
// instants. Failure is a first-class result, never an exception.
EstimationResult mean_estimator(const ObservationSet& obs, double mu,
                                bool include_zero = true);

// Same aggregation with the early-birds pair branches; time zero is an
// ordinary support point here (no atom).
EstimationResult estimator_early_birds(const ObservationSet& obs, double mu);

// g' Sigma g via the double-sum form of the CLT variance.
double asymptotic_variance(const std::vector<double>& g, const MomentSummary& sigma);

}  // namespace qgame
