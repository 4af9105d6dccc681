#include "qgame/model.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "params_json.hpp"

namespace qgame {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::NoEarlyBirds: return "no_early_birds";
    case Variant::ClosingTime: return "closing_time";
    case Variant::EarlyBirds: return "early_birds";
  }
  throw std::logic_error("unknown variant");
}

Variant variant_from_string(const std::string& s) {
  if (s == "no_early_birds") return Variant::NoEarlyBirds;
  if (s == "closing_time") return Variant::ClosingTime;
  if (s == "early_birds") return Variant::EarlyBirds;
  throw std::invalid_argument("unknown variant '" + s +
                              "' (expected no_early_birds, closing_time or early_birds)");
}

int default_truncation(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const double target = 1.0 - defaults::truncation_tail;
  // Recursion kept in log space so exp(-lambda) underflow (lambda > ~745)
  // cannot stall the accumulation.
  double log_pmf = -lambda;
  double cdf = std::exp(log_pmf);
  int k = 0;
  while (cdf < target) {
    ++k;
    log_pmf += std::log(lambda) - std::log(static_cast<double>(k));
    cdf += std::exp(log_pmf);
    if (k > 1000000) throw std::overflow_error("default_truncation: lambda too large");
  }
  return k;
}

ModelParams validated(ModelParams p) {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  require(p.lambda > 0.0, "lambda must be positive");
  require(p.mu > 0.0, "mu must be positive");
  require(p.alpha > 0.0, "alpha must be positive");
  require(p.beta > 0.0, "beta must be positive");
  require(p.delta > 0.0, "delta must be positive");
  require(p.horizon > 0.0, "horizon must be positive");
  require(p.theta() > 0.0 && p.theta() < 1.0, "theta must lie in (0,1)");
  if (p.variant == Variant::ClosingTime) {
    require(std::isfinite(p.closing_time) && p.closing_time > 0.0,
            "closing_time variant requires a finite positive closing_time");
  } else {
    require(std::isinf(p.closing_time),
            "closing_time must be infinite unless variant is closing_time");
  }
  if (p.truncation == 0) p.truncation = std::max(1, default_truncation(p.lambda));
  require(p.truncation >= 1, "truncation must be >= 1");
  return p;
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;

  ModelConfig cfg;
  cfg.params = detail::params_from_json(j, /*allowed_extra=*/{"seed"});
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

}  // namespace qgame
