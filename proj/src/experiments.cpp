#include "qgame/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "params_json.hpp"
#include "qgame/dynamics.hpp"
#include "qgame/estimator.hpp"
#include "qgame/rng.hpp"

namespace qgame {

SamplingSchedule ScheduleSpec::build() const {
  if (!explicit_times.empty()) return SamplingSchedule::from_times(explicit_times);
  if (m < 3) throw std::invalid_argument("schedule spec: m must be >= 3");
  std::vector<double> ts(m);
  for (int i = 0; i < m; ++i) ts[i] = i * spacing;
  auto s = SamplingSchedule::from_times(std::move(ts));
  s.spacing_hint = spacing;
  return s;
}

std::string ScheduleSpec::label() const {
  char buf[64];
  if (!explicit_times.empty()) {
    std::snprintf(buf, sizeof buf, "explicit m=%d", static_cast<int>(explicit_times.size()));
  } else {
    std::snprintf(buf, sizeof buf, "m=%d (spacing=%g)", m, spacing);
  }
  return buf;
}

std::uint64_t ScheduleSpec::seed_key() const {
  if (explicit_times.empty())
    return rng::derive({static_cast<std::uint64_t>(m), rng::bits_of(spacing)});
  std::uint64_t key = 0x5c7e1e5u;
  for (double t : explicit_times) key = rng::derive({key, rng::bits_of(t)});
  return key;
}

ExperimentPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open plan: " + path);
  nlohmann::json j;
  in >> j;

  for (const auto& [key, _] : j.items()) {
    static const std::set<std::string> known = {"model",        "n_values",
                                                "schedules",    "replications",
                                                "master_seed",  "include_zero"};
    if (!known.count(key)) throw std::runtime_error("unknown plan key: " + key);
  }

  ExperimentPlan plan;
  plan.params = detail::params_from_json(j.at("model"));
  plan.n_values = j.at("n_values").get<std::vector<int>>();
  for (const auto& js : j.at("schedules")) {
    ScheduleSpec spec;
    if (js.contains("times")) {
      spec.explicit_times = js.at("times").get<std::vector<double>>();
    } else {
      spec.m = js.at("m").get<int>();
      spec.spacing = js.at("spacing").get<double>();
    }
    (void)spec.build();  // validate early
    plan.schedules.push_back(std::move(spec));
  }
  if (j.contains("replications")) plan.replications = j.at("replications").get<int>();
  if (j.contains("master_seed")) plan.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("include_zero")) plan.include_zero = j.at("include_zero").get<bool>();
  if (plan.replications < 1) throw std::runtime_error("replications must be >= 1");
  if (plan.n_values.empty() || plan.schedules.empty())
    throw std::runtime_error("plan needs n_values and schedules");
  return plan;
}

ExperimentResults run_experiment(const ExperimentPlan& plan) {
  ExperimentResults results;
  results.fe = solve(plan.params);
  const double theta = plan.params.theta();
  const bool early_birds = plan.params.variant == Variant::EarlyBirds;

  for (int n : plan.n_values) {
    for (const auto& spec : plan.schedules) {
      ExperimentSummary cell;
      cell.n = n;
      cell.schedule = spec;
      cell.kappa = plan.replications;
      const auto schedule = spec.build();
      for (int k = 0; k < plan.replications; ++k) {
        const std::uint64_t seed =
            rng::derive({plan.master_seed, static_cast<std::uint64_t>(n),
                         spec.seed_key(), static_cast<std::uint64_t>(k)});
        const auto obs = simulate(results.fe, plan.params, schedule, n, seed);
        const auto est = early_birds
                             ? estimator_early_birds(obs, plan.params.mu)
                             : mean_estimator(obs, plan.params.mu, plan.include_zero);
        cell.estimates.push_back(est.success ? std::optional<double>(est.theta_hat)
                                             : std::nullopt);
      }

      double sum = 0.0, sq = 0.0, err = 0.0;
      for (const auto& e : cell.estimates) {
        if (!e) continue;
        ++cell.eta;
        sum += *e;
        err += (*e - theta) * (*e - theta);
      }
      if (cell.eta > 0) {
        cell.ae = sum / cell.eta;
        cell.mse = err / cell.eta;
        if (cell.eta > 1) {
          for (const auto& e : cell.estimates)
            if (e) sq += (*e - *cell.ae) * (*e - *cell.ae);
          cell.stddev = std::sqrt(sq / (cell.eta - 1));
        }
      }
      results.cells.push_back(std::move(cell));
    }
  }
  return results;
}

namespace {

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.imbue(std::locale::classic());
  return out;
}

std::string fmt(double x, const char* spec = "%.6g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

// type-7 quantile (linear interpolation) on sorted data
double quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = p * (sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - lo;
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace

void emit_tables(const ExperimentPlan& plan, const ExperimentResults& results,
                 const std::string& out_dir) {
  auto grid = open_out(out_dir, "table_summary.csv");
  grid << "n";
  for (const auto& spec : plan.schedules) grid << ",\"" << spec.label() << "\"";
  grid << "\n";
  std::size_t idx = 0;
  for (int n : plan.n_values) {
    grid << n;
    for (std::size_t s = 0; s < plan.schedules.size(); ++s, ++idx) {
      const auto& cell = results.cells[idx];
      if (cell.eta == 0) {
        grid << ",\"N/A | eta = 0\"";
      } else {
        std::string text = fmt(*cell.ae, "%.4f");
        if (cell.stddev) text += " (" + fmt(*cell.stddev, "%.4f") + ")";
        if (cell.eta < cell.kappa) text += " | eta = " + std::to_string(cell.eta);
        grid << ",\"" << text << "\"";
      }
    }
    grid << "\n";
  }

  auto metrics = open_out(out_dir, "table_metrics.csv");
  metrics << "n,schedule,kappa,eta,ae,std,mse\n";
  for (const auto& cell : results.cells) {
    metrics << cell.n << ",\"" << cell.schedule.label() << "\"," << cell.kappa << ","
            << cell.eta << ",";
    metrics << (cell.ae ? fmt(*cell.ae, "%.8g") : "") << ",";
    metrics << (cell.stddev ? fmt(*cell.stddev, "%.8g") : "") << ",";
    metrics << (cell.mse ? fmt(*cell.mse, "%.8g") : "") << "\n";
  }

  auto reps = open_out(out_dir, "replications.csv");
  reps << "n,schedule,replication,theta_hat,success\n";
  for (const auto& cell : results.cells) {
    for (std::size_t k = 0; k < cell.estimates.size(); ++k) {
      reps << cell.n << ",\"" << cell.schedule.label() << "\"," << k << ",";
      if (cell.estimates[k]) reps << fmt(*cell.estimates[k], "%.8g") << ",1\n";
      else reps << ",0\n";
    }
  }
}

void emit_figures(const ExperimentPlan& plan, const ExperimentResults& results,
                  const std::string& out_dir) {
  const auto& fe = results.fe;
  const auto& params = plan.params;
  const auto series = propagate(fe, params);

  {  // equilibrium density and expected queue length on the grid
    auto out = open_out(out_dir, "fig_equilibrium.csv");
    out << "time,density,mean_queue\n";
    for (const auto& st : series) {
      out << fmt(st.time, "%.10g") << "," << fmt(fe.density_at(st.time), "%.10g") << ","
          << fmt(st.mean(), "%.10g") << "\n";
    }
  }

  // densest schedule and largest n in the plan drive the sample-mean figures
  const auto densest = std::max_element(
      plan.schedules.begin(), plan.schedules.end(),
      [](const ScheduleSpec& a, const ScheduleSpec& b) {
        return a.build().size() < b.build().size();
      });
  const int n_max = *std::max_element(plan.n_values.begin(), plan.n_values.end());
  const auto schedule = densest->build();

  {  // three independent sample-mean curves against the exact mean
    auto out = open_out(out_dir, "fig_mean_estimates.csv");
    out << "time,qhat_rep1,qhat_rep2,qhat_rep3,mean_queue\n";
    std::vector<std::vector<double>> qhats;
    for (int rep = 0; rep < 3; ++rep) {
      const std::uint64_t seed = rng::derive(
          {plan.master_seed, 0xf190002ull, static_cast<std::uint64_t>(rep)});
      qhats.push_back(sample_means(simulate(fe, params, schedule, n_max, seed)));
    }
    for (std::size_t i = 0; i < schedule.times.size(); ++i) {
      const double t = schedule.times[i];
      double q = std::numeric_limits<double>::quiet_NaN();
      if (t >= series.front().time && t <= series.back().time) q = state_at(series, t).mean();
      out << fmt(t, "%.10g") << "," << fmt(qhats[0][i], "%.10g") << ","
          << fmt(qhats[1][i], "%.10g") << "," << fmt(qhats[2][i], "%.10g") << ","
          << fmt(q, "%.10g") << "\n";
    }
  }

  {  // per-pair estimates from one replication
    auto out = open_out(out_dir, "fig_pair_estimates.csv");
    out << "time,partner,theta_pair\n";
    const std::uint64_t seed = rng::derive({plan.master_seed, 0xf190004ull});
    const auto obs = simulate(fe, params, schedule, n_max, seed);
    const auto est = params.variant == Variant::EarlyBirds
                         ? estimator_early_birds(obs, params.mu)
                         : mean_estimator(obs, params.mu, plan.include_zero);
    if (est.success) {
      for (const auto& pe : est.pairs)
        out << fmt(pe.t, "%.10g") << "," << fmt(pe.partner, "%.10g") << ","
            << fmt(pe.value, "%.10g") << "\n";
    }
  }

  {  // box-plot quartile summaries per cell
    auto out = open_out(out_dir, "fig_box_summary.csv");
    out << "n,schedule,eta,median,q1,q3,whisker_lo,whisker_hi,outliers\n";
    for (const auto& cell : results.cells) {
      std::vector<double> ok;
      for (const auto& e : cell.estimates)
        if (e) ok.push_back(*e);
      std::sort(ok.begin(), ok.end());
      out << cell.n << ",\"" << cell.schedule.label() << "\"," << cell.eta << ",";
      if (ok.empty()) {
        out << ",,,,,\n";
        continue;
      }
      const double q1 = quantile(ok, 0.25), med = quantile(ok, 0.5), q3 = quantile(ok, 0.75);
      const double iqr = q3 - q1;
      double lo = ok.front(), hi = ok.back();
      std::string outliers;
      for (double x : ok) {
        if (x < q1 - 1.5 * iqr || x > q3 + 1.5 * iqr) {
          if (!outliers.empty()) outliers += ";";
          outliers += fmt(x, "%.6g");
        }
      }
      for (double x : ok)
        if (x >= q1 - 1.5 * iqr) { lo = x; break; }
      for (auto it = ok.rbegin(); it != ok.rend(); ++it)
        if (*it <= q3 + 1.5 * iqr) { hi = *it; break; }
      out << fmt(med, "%.8g") << "," << fmt(q1, "%.8g") << "," << fmt(q3, "%.8g") << ","
          << fmt(lo, "%.8g") << "," << fmt(hi, "%.8g") << ",\"" << outliers << "\"\n";
    }
  }
}

}  // namespace qgame
