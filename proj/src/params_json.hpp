#pragma once

// Internal JSON (de)serialization of ModelParams, shared by the config
// loader, the equilibrium artifact and the experiment plan.

#include <cmath>
#include <set>
#include <string>

#include "json.hpp"
#include "qgame/model.hpp"

namespace qgame::detail {

inline nlohmann::json params_to_json(const ModelParams& p) {
  nlohmann::json j;
  j["lambda"] = p.lambda;
  j["mu"] = p.mu;
  j["alpha"] = p.alpha;
  j["beta"] = p.beta;
  j["delta"] = p.delta;
  j["variant"] = to_string(p.variant);
  if (std::isfinite(p.closing_time)) j["closing_time"] = p.closing_time;
  else j["closing_time"] = "inf";
  j["horizon"] = p.horizon;
  j["truncation"] = p.truncation;
  return j;
}

// allowed_extra: keys tolerated besides the parameter keys (e.g. "seed").
inline ModelParams params_from_json(const nlohmann::json& j,
                                    const std::set<std::string>& allowed_extra = {}) {
  static const std::set<std::string> known = {"lambda", "mu",   "alpha",      "beta",
                                              "delta",  "variant", "closing_time",
                                              "horizon", "truncation"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key) && !allowed_extra.count(key))
      throw std::runtime_error("unknown config key: " + key);
  }
  ModelParams p;
  p.lambda = j.at("lambda").get<double>();
  p.mu = j.at("mu").get<double>();
  p.alpha = j.at("alpha").get<double>();
  p.beta = j.at("beta").get<double>();
  p.horizon = j.at("horizon").get<double>();
  p.variant = variant_from_string(j.at("variant").get<std::string>());
  if (j.contains("delta")) p.delta = j.at("delta").get<double>();
  if (j.contains("closing_time")) {
    const auto& ct = j.at("closing_time");
    if (ct.is_string()) {
      if (ct.get<std::string>() != "inf")
        throw std::runtime_error("closing_time must be a number or \"inf\"");
    } else {
      p.closing_time = ct.get<double>();
    }
  }
  if (j.contains("truncation")) p.truncation = j.at("truncation").get<int>();
  return validated(p);
}

}  // namespace qgame::detail
