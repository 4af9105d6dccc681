#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qgame/model.hpp"

namespace qgame {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Equilibrium puts everyone at time zero: no arrival instant after opening
// ever reaches the time-zero cost within the horizon.
struct NoInteriorArrivals : SolverError {
  using SolverError::SolverError;
};
// Bisection exhausted its iteration budget without closing the bracket.
struct NonConvergence : SolverError {
  using SolverError::SolverError;
};
// Closing time falls before the unconstrained support start; the equilibrium
// degenerates to a point mass at zero, which this solver rejects.
struct ClosingTimeTooEarly : SolverError {
  using SolverError::SolverError;
};

// Nash-equilibrium arrival distribution on the grid {0, delta, 2 delta, ...}.
// density[r] is the arrival density at time r*grid_step, zero outside the
// support. Early-birds solutions additionally carry a constant density
// pre_density over [-pre_width, 0).
struct EquilibriumDistribution {
  Variant variant = Variant::NoEarlyBirds;
  double atom = 0.0;         // p_e, mass at time zero (zero for early birds)
  double pre_width = 0.0;    // w (early birds only)
  double pre_density = 0.0;  // (mu/lambda)(1-theta) on [-w,0) (early birds only)
  double support_start = 0.0;  // t_a, or -w for early birds
  double support_end = 0.0;    // t_b, T when the closing time binds, or t_w
  double equilibrium_cost = 0.0;  // c, constant expected cost on the support
  double grid_step = defaults::grid_step;
  std::vector<double> density;

  double density_at_slot(int r) const {
    return (r >= 0 && r < static_cast<int>(density.size())) ? density[r] : 0.0;
  }
  // Arrival density at grid time t (t < 0 reads the early-birds plateau).
  double density_at(double t) const;
  double pre_mass() const { return pre_width * pre_density; }
  double total_mass() const;
};

EquilibriumDistribution solve_no_early_birds(const ModelParams& params);
EquilibriumDistribution solve_closing_time(const ModelParams& params);
EquilibriumDistribution solve_early_birds(const ModelParams& params);
EquilibriumDistribution solve(const ModelParams& params);  // dispatch on variant

struct QueueStateDistribution;  // dynamics.hpp

// Expected cost of arriving at grid time t when everyone else follows F_e and
// the queue-length distribution follows `series` (from propagate()). At t = 0
// the cost uses the Poisson batch mean lambda * atom.
double expected_cost(double t, const EquilibriumDistribution& fe,
                     const std::vector<QueueStateDistribution>& series,
                     const ModelParams& params);

// Versioned JSON artifact; the interchange format between solve, simulate,
// estimate and variance.
void save_artifact(const EquilibriumDistribution& fe, const ModelParams& params,
                   const std::string& path);
std::pair<EquilibriumDistribution, ModelParams> load_artifact(const std::string& path);

// Two columns (t, f_e(t)) over the stored grid, for plotting.
void write_density_csv(const EquilibriumDistribution& fe, const std::string& path);

}  // namespace qgame
