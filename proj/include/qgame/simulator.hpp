#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qgame/equilibrium.hpp"
#include "qgame/model.hpp"
#include "qgame/rng.hpp"

namespace qgame {

// Daily sampling instants; identical every day. At least three instants
// (support estimation needs more than two), strictly increasing, negatives
// allowed for early-birds observation.
struct SamplingSchedule {
  std::vector<double> times;
  std::optional<double> spacing_hint;

  static SamplingSchedule from_times(std::vector<double> times);
  static SamplingSchedule equidistant(double start, double spacing, double end);
  int size() const { return static_cast<int>(times.size()); }
};

// One day's arrivals and departures, both sorted, FCFS-paired by index.
struct DayRealization {
  std::vector<double> arrivals;
  std::vector<double> departures;
};

struct ObservationSet {
  SamplingSchedule schedule;
  std::vector<std::vector<int>> counts;  // n days x m instants
  int days() const { return static_cast<int>(counts.size()); }
};

// Inverse-CDF sampler over the equilibrium distribution: atom, early-birds
// plateau and grid density cells (uniform jitter within a cell, so arrivals
// do not snap to grid boundaries). Build once, draw many.
class ArrivalSampler {
 public:
  explicit ArrivalSampler(const EquilibriumDistribution& fe);
  double draw(rng::Engine& eng) const;

 private:
  double atom_;
  double pre_mass_;
  double pre_width_;
  double grid_step_;
  double total_;
  std::vector<double> cumulative_;  // running sum of grid cell masses
};

// One day under F_e: Poisson(lambda) customers, arrival times i.i.d. from
// F_e, Exponential(mu) services, FCFS departures D_i = max(A_i, D_{i-1}, 0) + S_i.
// The time-zero batch order is exchangeable, so the queue-length path is
// unaffected by how its ties are broken.
DayRealization sample_day(const EquilibriumDistribution& fe, const ModelParams& params,
                          rng::Engine& eng);
DayRealization sample_day(const ArrivalSampler& sampler, const ModelParams& params,
                          rng::Engine& eng);

// Number in system at each sampling instant, right-continuous: an arrival
// exactly at t_i is counted, a departure exactly at t_i has left.
std::vector<int> observe(const DayRealization& day, const SamplingSchedule& schedule);

// n independent days; day l draws from the substream derive({seed, l}) so
// each day is reproducible regardless of evaluation order.
ObservationSet simulate(const EquilibriumDistribution& fe, const ModelParams& params,
                        const SamplingSchedule& schedule, int days, std::uint64_t seed);

// Header row of sampling times, then one integer row per day.
void write_observations_csv(const ObservationSet& obs, const std::string& path);
ObservationSet read_observations_csv(const std::string& path);

}  // namespace qgame
