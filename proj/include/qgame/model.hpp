#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace qgame {

enum class Variant { NoEarlyBirds, ClosingTime, EarlyBirds };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

namespace defaults {
// Grid step and tolerances used throughout; overridable via config.
inline constexpr double grid_step = 0.001;
inline constexpr double bisection_tolerance = 1e-6;
inline constexpr int bisection_max_iter = 64;
inline constexpr double truncation_tail = 1e-6;   // Poisson tail mass beyond K
inline constexpr double emptying_threshold = 1e-8;  // P0 > 1 - this ends propagation
}  // namespace defaults

// Game and discretization parameters. Validate with validated(); treat as
// immutable afterwards (freely shareable across threads).
struct ModelParams {
  double lambda = 0.0;  // mean daily population size
  double mu = 0.0;      // service rate
  double alpha = 0.0;   // waiting cost rate
  double beta = 0.0;    // tardiness cost rate
  double delta = defaults::grid_step;
  Variant variant = Variant::NoEarlyBirds;
  double closing_time = std::numeric_limits<double>::infinity();  // T
  double horizon = 0.0;  // simulation stopping time T_s
  int truncation = 0;    // queue-length cap K; 0 = derive from lambda

  double theta() const { return beta / (alpha + beta); }
  int horizon_slots() const { return static_cast<int>(horizon / delta + 0.5); }
};

// Smallest m with Poisson(lambda) CDF at m >= 1 - truncation_tail.
// Recursive pmf evaluation; safe for lambda up to ~1e4.
int default_truncation(double lambda);

// Checks invariants, fills truncation when unset. Throws std::invalid_argument.
ModelParams validated(ModelParams p);

struct ModelConfig {
  ModelParams params;
  std::optional<std::uint64_t> seed;
};

// JSON config with keys lambda, mu, alpha, beta, delta, variant,
// closing_time, horizon, truncation, seed. Unknown keys rejected.
ModelConfig load_config(const std::string& path);

}  // namespace qgame
