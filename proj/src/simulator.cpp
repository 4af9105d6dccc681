#include "qgame/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qgame {

SamplingSchedule SamplingSchedule::from_times(std::vector<double> times) {
  if (times.size() < 3)
    throw std::invalid_argument("sampling schedule needs at least three instants");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw std::invalid_argument("sampling instants must be strictly increasing");
  SamplingSchedule s;
  s.times = std::move(times);
  return s;
}

SamplingSchedule SamplingSchedule::equidistant(double start, double spacing, double end) {
  if (!(spacing > 0.0)) throw std::invalid_argument("spacing must be positive");
  std::vector<double> ts;
  for (int i = 0;; ++i) {
    const double t = start + i * spacing;
    if (t > end + spacing * 1e-9) break;
    ts.push_back(t);
  }
  auto s = from_times(std::move(ts));
  s.spacing_hint = spacing;
  return s;
}

ArrivalSampler::ArrivalSampler(const EquilibriumDistribution& fe)
    : atom_(fe.atom),
      pre_mass_(fe.pre_mass()),
      pre_width_(fe.pre_width),
      grid_step_(fe.grid_step),
      cumulative_(fe.density.size()) {
  double run = 0.0;
  for (std::size_t r = 0; r < fe.density.size(); ++r) {
    run += grid_step_ * fe.density[r];
    cumulative_[r] = run;
  }
  total_ = atom_ + pre_mass_ + run;
}

double ArrivalSampler::draw(rng::Engine& eng) const {
  const double u = rng::uniform01(eng) * total_;
  if (u < atom_) return 0.0;
  if (u < atom_ + pre_mass_) {
    // constant plateau over [-w, 0)
    return -pre_width_ + (u - atom_) / pre_mass_ * pre_width_;
  }
  const double z = u - atom_ - pre_mass_;
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), z);
  const std::size_t r =
      it == cumulative_.end() ? cumulative_.size() - 1 : static_cast<std::size_t>(it - cumulative_.begin());
  const double lo = r == 0 ? 0.0 : cumulative_[r - 1];
  const double cell = cumulative_[r] - lo;
  const double frac = cell > 0.0 ? (z - lo) / cell : 0.0;
  return (static_cast<double>(r) + std::min(frac, 1.0)) * grid_step_;
}

DayRealization sample_day(const EquilibriumDistribution& fe, const ModelParams& params,
                          rng::Engine& eng) {
  return sample_day(ArrivalSampler(fe), params, eng);
}

DayRealization sample_day(const ArrivalSampler& sampler, const ModelParams& params,
                          rng::Engine& eng) {
  const int n = rng::poisson(eng, params.lambda);
  DayRealization day;
  day.arrivals.resize(n);
  for (int i = 0; i < n; ++i) day.arrivals[i] = sampler.draw(eng);
  std::sort(day.arrivals.begin(), day.arrivals.end());

  // Services drawn in service order after sorting; ties (the time-zero batch)
  // therefore get i.i.d. services in an exchangeable order.
  day.departures.resize(n);
  double prev = 0.0;
  for (int i = 0; i < n; ++i) {
    const double begin = std::max({day.arrivals[i], prev, 0.0});
    prev = begin + rng::exponential(eng, params.mu);
    day.departures[i] = prev;
  }
  return day;
}

std::vector<int> observe(const DayRealization& day, const SamplingSchedule& schedule) {
  std::vector<int> counts(schedule.times.size());
  for (std::size_t i = 0; i < schedule.times.size(); ++i) {
    const double t = schedule.times[i];
    const auto arrived =
        std::upper_bound(day.arrivals.begin(), day.arrivals.end(), t) - day.arrivals.begin();
    const auto departed =
        std::upper_bound(day.departures.begin(), day.departures.end(), t) -
        day.departures.begin();
    counts[i] = static_cast<int>(arrived - departed);
  }
  return counts;
}

ObservationSet simulate(const EquilibriumDistribution& fe, const ModelParams& params,
                        const SamplingSchedule& schedule, int days, std::uint64_t seed) {
  if (days < 1) throw std::invalid_argument("simulate: days must be >= 1");
  const ArrivalSampler sampler(fe);
  ObservationSet obs;
  obs.schedule = schedule;
  obs.counts.resize(days);
  for (int l = 0; l < days; ++l) {
    auto eng = rng::make_engine(rng::derive({seed, static_cast<std::uint64_t>(l)}));
    obs.counts[l] = observe(sample_day(sampler, params, eng), schedule);
  }
  return obs;
}

void write_observations_csv(const ObservationSet& obs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.imbue(std::locale::classic());
  char buf[48];
  for (std::size_t i = 0; i < obs.schedule.times.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g", obs.schedule.times[i]);
    out << (i ? "," : "") << buf;
  }
  out << "\n";
  for (const auto& row : obs.counts) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

ObservationSet read_observations_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open observations: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty observations file: " + path);

  auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    return parts;
  };

  std::vector<double> times;
  for (const auto& tok : split(line)) times.push_back(std::stod(tok));

  ObservationSet obs;
  obs.schedule = SamplingSchedule::from_times(std::move(times));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<int> row;
    for (const auto& tok : split(line)) row.push_back(std::stoi(tok));
    if (row.size() != obs.schedule.times.size())
      throw std::runtime_error("ragged observations row in " + path);
    obs.counts.push_back(std::move(row));
  }
  if (obs.counts.empty()) throw std::runtime_error("no observation rows in " + path);
  return obs;
}

}  // namespace qgame
