// qgame: equilibrium arrival distributions for the arrival-timing queueing
// game, daily queue-length simulation, and estimation of the cost ratio
// theta = beta/(alpha+beta) from queue-length observations.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "qgame/dynamics.hpp"
#include "qgame/equilibrium.hpp"
#include "qgame/estimator.hpp"
#include "qgame/experiments.hpp"
#include "qgame/model.hpp"
#include "qgame/simulator.hpp"

namespace {

std::vector<double> parse_time_list(const std::string& csv) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    std::size_t next = csv.find(',', pos);
    if (next == std::string::npos) next = csv.size();
    out.push_back(std::stod(csv.substr(pos, next - pos)));
    pos = next + 1;
  }
  return out;
}

int cmd_solve(const std::string& config_path, const std::string& out_path,
              const std::string& csv_path, const std::string& dynamics_csv) {
  const auto cfg = qgame::load_config(config_path);
  const auto fe = qgame::solve(cfg.params);
  qgame::save_artifact(fe, cfg.params, out_path);
  std::printf("variant        %s\n", qgame::to_string(fe.variant).c_str());
  std::printf("atom p_e       %.6f\n", fe.atom);
  if (fe.variant == qgame::Variant::EarlyBirds)
    std::printf("pre width w    %.6f\n", fe.pre_width);
  std::printf("support        [%.4f, %.4f]\n", fe.support_start, fe.support_end);
  std::printf("cost c         %.6f\n", fe.equilibrium_cost);
  std::printf("total mass     %.8f\n", fe.total_mass());
  std::printf("artifact       %s\n", out_path.c_str());
  if (!csv_path.empty()) qgame::write_density_csv(fe, csv_path);
  if (!dynamics_csv.empty())
    qgame::write_dynamics_csv(qgame::propagate(fe, cfg.params), dynamics_csv);
  return 0;
}

int cmd_simulate(const std::string& artifact_path, const std::string& schedule_arg,
                 const std::string& times_arg, int days,
                 std::optional<std::uint64_t> seed_arg, const std::string& out_path) {
  const auto [fe, params] = qgame::load_artifact(artifact_path);
  qgame::SamplingSchedule schedule;
  if (!times_arg.empty()) {
    schedule = qgame::SamplingSchedule::from_times(parse_time_list(times_arg));
  } else if (!schedule_arg.empty()) {
    const auto parts = parse_time_list(schedule_arg);  // start,spacing,end
    if (parts.size() != 3)
      throw std::runtime_error("--schedule expects start,spacing,end");
    schedule = qgame::SamplingSchedule::equidistant(parts[0], parts[1], parts[2]);
  } else {
    throw std::runtime_error("one of --times or --schedule is required");
  }
  const std::uint64_t seed = seed_arg.value_or(qgame::defaults::master_seed);
  const auto obs = qgame::simulate(fe, params, schedule, days, seed);
  qgame::write_observations_csv(obs, out_path);
  std::printf("wrote %d days x %d instants to %s (seed %llu)\n", obs.days(),
              schedule.size(), out_path.c_str(), static_cast<unsigned long long>(seed));
  return 0;
}

nlohmann::json result_to_json(const qgame::EstimationResult& res,
                              const qgame::SamplingSchedule& schedule) {
  nlohmann::json j;
  j["success"] = res.success;
  if (!res.success) {
    j["failure_reason"] = res.failure_reason;
    return j;
  }
  j["theta_hat"] = res.theta_hat;
  j["support"]["a_hat_index"] = res.support.a_hat;
  j["support"]["b_hat_index"] = res.support.b_hat;
  j["support"]["t_a_hat"] = schedule.times[res.support.a_hat];
  j["support"]["t_b_hat"] = schedule.times[res.support.b_hat];
  if (res.support.a_tilde >= 0) {
    j["support"]["a_tilde_index"] = res.support.a_tilde;
    j["support"]["b_tilde_index"] = res.support.b_tilde;
  }
  j["estimation_times"] = res.estimation_times;
  for (const auto& p : res.pairs)
    j["pairs"].push_back({{"t", p.t}, {"partner", p.partner}, {"theta", p.value}});
  j["weights"]["times"] = res.weights.times;
  j["weights"]["g"] = res.weights.g;
  j["weights"]["k"] = res.weights.k;
  if (res.asymptotic_variance) j["asymptotic_variance"] = *res.asymptotic_variance;
  return j;
}

int cmd_estimate(const std::string& obs_path, double mu, const std::string& variant_str,
                 bool include_zero, const std::string& artifact_path,
                 const std::string& out_path) {
  const auto obs = qgame::read_observations_csv(obs_path);
  const auto variant = qgame::variant_from_string(variant_str);

  auto res = variant == qgame::Variant::EarlyBirds
                 ? qgame::estimator_early_birds(obs, mu)
                 : qgame::mean_estimator(obs, mu, include_zero);

  nlohmann::json j = nlohmann::json::object();
  if (!artifact_path.empty() && res.success) {
    const auto [fe, params] = qgame::load_artifact(artifact_path);
    qgame::attach_grid_truth(res.support, obs.schedule, fe);
    if (res.weights.times.size() > 500)
      throw std::runtime_error(
          "covariance matrix over " + std::to_string(res.weights.times.size()) +
          " instants is impractical; estimate on a coarser schedule or use the "
          "variance subcommand on a subset");
    const auto sigma = qgame::covariance_matrix(fe, params, res.weights.times);
    res.asymptotic_variance = qgame::asymptotic_variance(res.weights.g, sigma);
    const double half_width =
        1.96 * std::sqrt(*res.asymptotic_variance / obs.days());
    j["confidence_interval_95"] = {res.theta_hat - half_width, res.theta_hat + half_width};
  }
  auto out = result_to_json(res, obs.schedule);
  out.update(j);

  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!f) throw std::runtime_error("cannot open for writing: " + out_path);
    f << out.dump(2) << "\n";
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_variance(const std::string& artifact_path, const std::string& times_arg,
                 const std::string& out_path) {
  const auto [fe, params] = qgame::load_artifact(artifact_path);
  const auto times = parse_time_list(times_arg);
  const auto sigma = qgame::covariance_matrix(fe, params, times);
  const auto weights = qgame::pairing_weights(times, params.mu);
  const double avar = qgame::asymptotic_variance(weights.g, sigma);

  nlohmann::json j;
  j["times"] = times;
  j["mean"] = sigma.mean;
  j["variance"] = sigma.variance;
  j["covariance"] = sigma.covariance;
  j["g"] = weights.g;
  j["k"] = weights.k;
  j["asymptotic_variance"] = avar;
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!f) throw std::runtime_error("cannot open for writing: " + out_path);
    f << j.dump(2) << "\n";
  }
  std::printf("g Sigma g^T = %.8g\n", avar);
  return 0;
}

int cmd_experiment(const std::string& plan_path, const std::string& out_dir,
                   bool tables, bool figures, std::optional<std::uint64_t> seed) {
  auto plan = qgame::load_plan(plan_path);
  if (seed) plan.master_seed = *seed;
  const auto results = qgame::run_experiment(plan);
  if (!tables && !figures) tables = figures = true;
  if (tables) qgame::emit_tables(plan, results, out_dir);
  if (figures) qgame::emit_figures(plan, results, out_dir);
  for (const auto& cell : results.cells) {
    std::printf("n=%-6d %-22s eta=%2d/%d", cell.n, cell.schedule.label().c_str(),
                cell.eta, cell.kappa);
    if (cell.ae) std::printf("  AE=%.4f", *cell.ae);
    if (cell.stddev) std::printf("  STD=%.4f", *cell.stddev);
    if (cell.mse) std::printf("  MSE=%.3g", *cell.mse);
    std::printf("\n");
  }
  std::printf("outputs in %s\n", out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Arrival-timing queueing game: equilibrium, simulation, estimation"};
  app.require_subcommand(1);

  std::string config_path, artifact_path, out_path, csv_path, dynamics_csv;
  auto* solve = app.add_subcommand("solve", "compute the equilibrium arrival distribution");
  solve->add_option("--config", config_path, "model config JSON")->required();
  solve->add_option("--out", out_path, "equilibrium artifact output")->required();
  solve->add_option("--csv", csv_path, "optional density CSV (t, f_e)");
  solve->add_option("--dynamics-csv", dynamics_csv, "optional dynamics CSV (t, p0, mean, var)");

  std::string schedule_arg, times_arg, obs_out;
  int days = 1;
  std::optional<std::uint64_t> seed;
  auto* simulate = app.add_subcommand("simulate", "sample daily queue-length observations");
  simulate->add_option("--artifact", artifact_path, "equilibrium artifact")->required();
  simulate->add_option("--schedule", schedule_arg, "equidistant schedule start,spacing,end");
  simulate->add_option("--times", times_arg, "explicit sampling times t1,t2,...");
  simulate->add_option("--days", days, "number of observation days")->required();
  simulate->add_option("--seed", seed, "RNG seed");
  simulate->add_option("--out", obs_out, "observations CSV output")->required();

  std::string obs_path, variant_str = "no_early_birds", est_out, est_artifact;
  double mu = 0.0;
  bool no_zero = false;
  auto* estimate = app.add_subcommand("estimate", "estimate theta from observations");
  estimate->add_option("--obs", obs_path, "observations CSV")->required();
  estimate->add_option("--mu", mu, "service rate (known to the manager)")->required();
  estimate->add_option("--variant", variant_str, "model variant");
  estimate->add_flag("--no-include-zero", no_zero,
                     "exclude the time-0 instant from the estimation set");
  estimate->add_option("--artifact", est_artifact,
                       "oracle mode: artifact for grid truth, Sigma and a CI");
  estimate->add_option("--out", est_out, "result JSON output");

  std::string var_times, var_out;
  auto* variance = app.add_subcommand("variance", "moment summary and g'Sigma g at given times");
  variance->add_option("--artifact", artifact_path, "equilibrium artifact")->required();
  variance->add_option("--times", var_times, "times t1,t2,...")->required();
  variance->add_option("--out", var_out, "JSON output");

  std::string plan_path, exp_dir;
  bool tables = false, figures = false;
  auto* experiment = app.add_subcommand("experiment", "replication study (AE/STD/MSE, eta)");
  experiment->add_option("--plan", plan_path, "experiment plan JSON")->required();
  experiment->add_option("--out", exp_dir, "output directory")->required();
  experiment->add_flag("--tables", tables, "emit table CSVs");
  experiment->add_flag("--figures", figures, "emit figure CSVs");
  experiment->add_option("--seed", seed, "override the plan master seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(config_path, out_path, csv_path, dynamics_csv);
    if (simulate->parsed())
      return cmd_simulate(artifact_path, schedule_arg, times_arg, days, seed, obs_out);
    if (estimate->parsed())
      return cmd_estimate(obs_path, mu, variant_str, !no_zero, est_artifact, est_out);
    if (variance->parsed()) return cmd_variance(artifact_path, var_times, var_out);
    if (experiment->parsed())
      return cmd_experiment(plan_path, exp_dir, tables, figures, seed);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
