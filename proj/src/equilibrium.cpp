#include "qgame/equilibrium.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "params_json.hpp"
#include "qgame/dynamics.hpp"

namespace qgame {

double EquilibriumDistribution::density_at(double t) const {
  if (t < 0.0) return t >= -pre_width - grid_step / 2 ? pre_density : 0.0;
  return density_at_slot(static_cast<int>(std::llround(t / grid_step)));
}

double EquilibriumDistribution::total_mass() const {
  double m = atom + pre_mass();
  for (double f : density) m += grid_step * f;
  return m;
}

namespace {

struct ForwardPass {
  double mass = 0.0;
  bool started = false;  // cost has reached the time-zero cost (t >= t_a)
  int first_slot = -1;   // r_a
  int cutoff_slot = -1;  // first slot with f <= 0 (r_b); -1 if never reached
  std::vector<double> density;
};

// One evaluation of the no-early-birds dynamics for a candidate atom p_e:
// propagate, hold f = 0 while the expected cost exceeds the time-zero cost,
// then read the density off the P0 path until it hits zero / the slot cap /
// total mass one (when mass_stop).
// Cost comparisons are scaled by 1/(alpha+beta) so the pass depends on the
// cost rates only through theta.
ForwardPass atom_pass(const ModelParams& p, double pe, int cap_slot, bool mass_stop) {
  const double theta = p.theta();
  const double c_scaled = p.lambda * pe / (2.0 * p.mu);
  ForwardPass out;
  out.mass = pe;
  out.density.reserve(cap_slot + 1);
  out.density.push_back(0.0);  // slot 0 carries the atom, not density

  QueueStateDistribution state = poisson_state(p.lambda * pe, p.truncation, 0.0);
  for (int r = 1; r <= cap_slot; ++r) {
    state = step(state, p.lambda * out.density[r - 1], p);
    if (!out.started) {
      const double cost_scaled = state.mean() / p.mu + theta * (r * p.delta);
      if (cost_scaled <= c_scaled) {
        out.started = true;
        out.first_slot = r;
      }
    }
    if (out.started) {
      const double f = (p.mu / p.lambda) * (1.0 - state.probs[0] - theta);
      if (f <= 0.0) {
        out.cutoff_slot = r;
        out.density.push_back(0.0);
        break;
      }
      out.density.push_back(f);
      out.mass += p.delta * f;
      if (mass_stop && out.mass >= 1.0) break;
    } else {
      out.density.push_back(0.0);
    }
  }
  return out;
}

// Early-birds pass for a candidate pre-opening width w. Density is positive
// from time zero onward (no cost test); the pre-opening plateau enters as the
// Poisson initial state and as mass w * (mu/lambda)(1-theta).
ForwardPass early_birds_pass(const ModelParams& p, double w, int cap_slot,
                             bool mass_stop) {
  const double theta = p.theta();
  const double plateau = (p.mu / p.lambda) * (1.0 - theta);
  ForwardPass out;
  out.mass = w * plateau;

  QueueStateDistribution state = poisson_state(p.lambda * w * plateau, p.truncation, 0.0);
  const double f0 = (p.mu / p.lambda) * (1.0 - state.probs[0] - theta);
  if (f0 <= 0.0) {
    out.cutoff_slot = 0;
    out.density.push_back(0.0);
    return out;
  }
  out.started = true;
  out.first_slot = 0;
  out.density.push_back(f0);
  out.mass += p.delta * f0;

  for (int r = 1; r <= cap_slot; ++r) {
    state = step(state, p.lambda * out.density[r - 1], p);
    const double f = (p.mu / p.lambda) * (1.0 - state.probs[0] - theta);
    if (f <= 0.0) {
      out.cutoff_slot = r;
      out.density.push_back(0.0);
      break;
    }
    out.density.push_back(f);
    out.mass += p.delta * f;
    if (mass_stop && out.mass >= 1.0) break;
  }
  return out;
}

// Total mass is monotone increasing in the bisected parameter, so a pass with
// mass >= 1 moves the upper end down. Tolerance and iteration cap from
// defaults; the cap turns a non-bracketing pathology into a diagnosable error.
template <typename Pass>
double bisect(double lo, double hi, Pass&& evaluate) {
  int iter = 0;
  while (hi - lo > defaults::bisection_tolerance) {
    if (++iter > defaults::bisection_max_iter)
      throw NonConvergence("bisection failed to close the bracket");
    const double mid = 0.5 * (lo + hi);
    (evaluate(mid) >= 1.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

EquilibriumDistribution solve_no_early_birds(const ModelParams& params) {
  if (params.variant != Variant::NoEarlyBirds)
    throw std::invalid_argument("solve_no_early_birds: wrong variant");
  const int cap = params.horizon_slots();
  const double pe = bisect(0.0, 1.0, [&](double cand) {
    return atom_pass(params, cand, cap, true).mass;
  });
  ForwardPass pass = atom_pass(params, pe, cap, false);
  if (!pass.started)
    throw NoInteriorArrivals(
        "no arrival instant after opening reaches the time-zero cost within the horizon");

  EquilibriumDistribution fe;
  fe.variant = params.variant;
  fe.atom = pe;
  fe.support_start = pass.first_slot * params.delta;
  // cutoff_slot < 0 means the density was still positive at the horizon
  // (theta -> 0 regime); the horizon then truncates the support and the
  // returned density ends with a positive value.
  fe.support_end = (pass.cutoff_slot < 0 ? cap : pass.cutoff_slot) * params.delta;
  fe.equilibrium_cost = (params.alpha + params.beta) * params.lambda * pe / (2.0 * params.mu);
  fe.grid_step = params.delta;
  fe.density = std::move(pass.density);
  return fe;
}

EquilibriumDistribution solve_closing_time(const ModelParams& params) {
  if (params.variant != Variant::ClosingTime)
    throw std::invalid_argument("solve_closing_time: wrong variant");
  const int cap =
      static_cast<int>(std::llround(std::ceil(params.closing_time / params.delta - 1e-9)));
  const double pe = bisect(0.0, 1.0, [&](double cand) {
    return atom_pass(params, cand, cap, true).mass;
  });
  ForwardPass pass = atom_pass(params, pe, cap, false);
  if (!pass.started)
    throw ClosingTimeTooEarly(
        "closing time precedes the support start; equilibrium degenerates to time zero");

  EquilibriumDistribution fe;
  fe.variant = params.variant;
  fe.atom = pe;
  fe.support_start = pass.first_slot * params.delta;
  // When the density never hits zero the closing time binds and f_e(T) > 0;
  // otherwise the solution coincides with the unconstrained one.
  fe.support_end = (pass.cutoff_slot < 0 ? cap : pass.cutoff_slot) * params.delta;
  fe.equilibrium_cost = (params.alpha + params.beta) * params.lambda * pe / (2.0 * params.mu);
  fe.grid_step = params.delta;
  fe.density = std::move(pass.density);
  return fe;
}

EquilibriumDistribution solve_early_birds(const ModelParams& params) {
  if (params.variant != Variant::EarlyBirds)
    throw std::invalid_argument("solve_early_birds: wrong variant");
  const int cap = params.horizon_slots();
  const double upper =
      params.lambda * (params.alpha + params.beta) / (params.mu * params.alpha);
  const double w = bisect(0.0, upper, [&](double cand) {
    return early_birds_pass(params, cand, cap, true).mass;
  });
  ForwardPass pass = early_birds_pass(params, w, cap, false);
  if (!pass.started) throw SolverError("early-birds density nonpositive at time zero");

  EquilibriumDistribution fe;
  fe.variant = params.variant;
  fe.pre_width = w;
  fe.pre_density = (params.mu / params.lambda) * (1.0 - params.theta());
  fe.support_start = -w;
  fe.support_end = (pass.cutoff_slot < 0 ? cap : pass.cutoff_slot) * params.delta;
  fe.equilibrium_cost = params.alpha * w;
  fe.grid_step = params.delta;
  fe.density = std::move(pass.density);
  return fe;
}

EquilibriumDistribution solve(const ModelParams& params) {
  switch (params.variant) {
    case Variant::NoEarlyBirds: return solve_no_early_birds(params);
    case Variant::ClosingTime: return solve_closing_time(params);
    case Variant::EarlyBirds: return solve_early_birds(params);
  }
  throw std::logic_error("unknown variant");
}

double expected_cost(double t, const EquilibriumDistribution& fe,
                     const std::vector<QueueStateDistribution>& series,
                     const ModelParams& params) {
  const double ab = params.alpha + params.beta;
  const double half = params.delta / 2;
  if (fe.variant != Variant::EarlyBirds && std::abs(t) < half) {
    // Random-order batch at time zero: wait for half the Poisson batch.
    return ab * params.lambda * fe.atom / (2.0 * params.mu);
  }
  const double q = state_at(series, t).mean();
  if (t < -half) return ab * q / params.mu - params.alpha * t;
  return ab * q / params.mu + params.beta * t;
}

namespace {
constexpr const char* kArtifactFormat = "qgame-equilibrium";
constexpr int kArtifactVersion = 1;
}  // namespace

void save_artifact(const EquilibriumDistribution& fe, const ModelParams& params,
                   const std::string& path) {
  nlohmann::json j;
  j["format"] = kArtifactFormat;
  j["version"] = kArtifactVersion;
  j["params"] = detail::params_to_json(params);
  j["variant"] = to_string(fe.variant);
  j["atom"] = fe.atom;
  j["pre_width"] = fe.pre_width;
  j["pre_density"] = fe.pre_density;
  j["support_start"] = fe.support_start;
  j["support_end"] = fe.support_end;
  j["equilibrium_cost"] = fe.equilibrium_cost;
  j["grid_step"] = fe.grid_step;
  j["density"] = fe.density;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump() << "\n";
}

std::pair<EquilibriumDistribution, ModelParams> load_artifact(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open artifact: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != kArtifactFormat)
    throw std::runtime_error("not an equilibrium artifact: " + path);
  if (j.value("version", -1) != kArtifactVersion)
    throw std::runtime_error("unsupported artifact version in " + path);

  EquilibriumDistribution fe;
  fe.variant = variant_from_string(j.at("variant").get<std::string>());
  fe.atom = j.at("atom").get<double>();
  fe.pre_width = j.at("pre_width").get<double>();
  fe.pre_density = j.at("pre_density").get<double>();
  fe.support_start = j.at("support_start").get<double>();
  fe.support_end = j.at("support_end").get<double>();
  fe.equilibrium_cost = j.at("equilibrium_cost").get<double>();
  fe.grid_step = j.at("grid_step").get<double>();
  fe.density = j.at("density").get<std::vector<double>>();
  return {std::move(fe), detail::params_from_json(j.at("params"))};
}

void write_density_csv(const EquilibriumDistribution& fe, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.imbue(std::locale::classic());
  out << "time,density\n";
  char line[80];
  if (fe.variant == Variant::EarlyBirds) {
    const int pre_slots = static_cast<int>(std::llround(fe.pre_width / fe.grid_step));
    for (int r = -pre_slots; r < 0; ++r) {
      std::snprintf(line, sizeof line, "%.10g,%.10g\n", r * fe.grid_step, fe.pre_density);
      out << line;
    }
  }
  for (std::size_t r = 0; r < fe.density.size(); ++r) {
    std::snprintf(line, sizeof line, "%.10g,%.10g\n", r * fe.grid_step, fe.density[r]);
    out << line;
  }
}

}  // namespace qgame
