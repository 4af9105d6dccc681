#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qgame/equilibrium.hpp"
#include "qgame/model.hpp"
#include "qgame/simulator.hpp"

namespace qgame {

namespace defaults {
// Default master seed for replication studies (see experiment CLI).
inline constexpr std::uint64_t master_seed = 44;
}  // namespace defaults

// Either an equidistant grid {0, spacing, ..., (m-1) spacing} or an explicit
// time list.
struct ScheduleSpec {
  int m = 0;
  double spacing = 0.0;
  std::vector<double> explicit_times;

  SamplingSchedule build() const;
  std::string label() const;
  std::uint64_t seed_key() const;  // value-based, so new plan axes do not reshuffle cells
};

struct ExperimentPlan {
  ModelParams params;
  std::vector<int> n_values;
  std::vector<ScheduleSpec> schedules;
  int replications = 20;  // kappa
  std::uint64_t master_seed = defaults::master_seed;
  bool include_zero = true;
};

ExperimentPlan load_plan(const std::string& path);

// One (n, schedule) cell: per-replication estimates with failures kept as
// nullopt, and AE/STD/MSE over the successful replications only.
struct ExperimentSummary {
  int n = 0;
  ScheduleSpec schedule;
  int kappa = 0;
  int eta = 0;
  std::optional<double> ae;
  std::optional<double> stddev;  // absent when eta < 2
  std::optional<double> mse;     // against theta from the plan parameters
  std::vector<std::optional<double>> estimates;
};

struct ExperimentResults {
  EquilibriumDistribution fe;  // solved once, shared by every replication
  std::vector<ExperimentSummary> cells;  // row-major over (n, schedule)
};

// Replication seed = derive({master_seed, n, schedule key, k}); deterministic
// given the plan, independent of evaluation order.
ExperimentResults run_experiment(const ExperimentPlan& plan);

// Tables 1-3 style CSVs: a formatted grid (AE (STD), "N/A | eta = 0" cells)
// plus a numeric long-form file.
void emit_tables(const ExperimentPlan& plan, const ExperimentResults& results,
                 const std::string& out_dir);

// Plot-ready CSVs: (t, f_e, q), three sample-mean replications against the
// exact mean, per-pair estimates, and box-plot quartile summaries per cell.
void emit_figures(const ExperimentPlan& plan, const ExperimentResults& results,
                  const std::string& out_dir);

}  // namespace qgame
