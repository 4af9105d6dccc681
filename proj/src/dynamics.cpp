#include "qgame/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace qgame {

namespace {

// Counts steps whose complementarity closure produced a probability below
// -1e-9 before clamping. Exposed for tests; stays zero in sane runs.
thread_local long clamp_events = 0;

void euler_step_inplace(std::vector<double>& probs, double arrival_rate,
                        double service_rate, double delta) {
  const int top = static_cast<int>(probs.size()) - 1;
  static thread_local std::vector<double> next;
  next.resize(probs.size());
  next[0] = probs[0] + delta * (probs[1] * service_rate - probs[0] * arrival_rate);
  for (int k = 1; k < top; ++k) {
    next[k] = probs[k] + delta * (probs[k - 1] * arrival_rate +
                                  probs[k + 1] * service_rate -
                                  probs[k] * (arrival_rate + service_rate));
  }
  double partial = 0.0;
  for (int k = 0; k < top; ++k) partial += next[k];
  next[top] = 1.0 - partial;  // complementarity closure for the capped state
  if (next[top] < -1e-9) ++clamp_events;

  double total = 0.0;
  for (double& x : next) {
    x = std::clamp(x, 0.0, 1.0);
    total += x;
  }
  if (total > 0.0) {
    for (double& x : next) x /= total;
  }
  probs.swap(next);
}

}  // namespace

double QueueStateDistribution::mean() const {
  double m = 0.0;
  for (std::size_t k = 1; k < probs.size(); ++k) m += static_cast<double>(k) * probs[k];
  return m;
}

double QueueStateDistribution::second_moment() const {
  double m = 0.0;
  for (std::size_t k = 1; k < probs.size(); ++k)
    m += static_cast<double>(k) * static_cast<double>(k) * probs[k];
  return m;
}

QueueStateDistribution poisson_state(double mean, int truncation, double time) {
  if (mean < 0.0) throw std::invalid_argument("poisson_state: negative mean");
  QueueStateDistribution s;
  s.time = time;
  s.probs.assign(truncation + 1, 0.0);
  double log_pmf = -mean;
  double cdf = 0.0;
  for (int k = 0; k < truncation; ++k) {
    s.probs[k] = std::exp(log_pmf);
    cdf += s.probs[k];
    log_pmf += std::log(mean) - std::log(static_cast<double>(k + 1));
  }
  s.probs[truncation] = std::max(0.0, 1.0 - cdf);  // fold the tail into K
  return s;
}

QueueStateDistribution step(const QueueStateDistribution& state, double arrival_rate,
                            const ModelParams& params) {
  if (arrival_rate < 0.0) throw std::invalid_argument("step: negative arrival rate");
  if (state.probs.size() < 2) throw std::invalid_argument("step: state needs K >= 1");
  // Service starts at the opening; before that (early birds) only arrivals act.
  const bool pre_opening =
      params.variant == Variant::EarlyBirds && state.time < -params.delta / 2;
  const double service_rate = pre_opening ? 0.0 : params.mu;
  if (params.delta * (arrival_rate + service_rate) >= 1.0)
    throw std::domain_error("step: delta*(arrival_rate + mu) >= 1; grid too coarse");

  QueueStateDistribution out = state;
  out.time = state.time + params.delta;
  euler_step_inplace(out.probs, arrival_rate, service_rate, params.delta);
  return out;
}

std::vector<QueueStateDistribution> propagate(const EquilibriumDistribution& fe,
                                              const ModelParams& params) {
  const double d = params.delta;
  int slot = 0;
  QueueStateDistribution cur;
  if (fe.variant == Variant::EarlyBirds) {
    slot = -static_cast<int>(std::llround(fe.pre_width / d));
    cur = poisson_state(0.0, params.truncation, slot * d);
  } else {
    cur = poisson_state(params.lambda * fe.atom, params.truncation, 0.0);
  }

  std::vector<QueueStateDistribution> series;
  series.push_back(cur);
  const int last_slot = params.horizon_slots();
  while (slot < last_slot) {
    const double f = slot < 0 ? fe.pre_density : fe.density_at_slot(slot);
    cur = step(cur, params.lambda * f, params);
    ++slot;
    series.push_back(cur);
    if (cur.probs[0] > 1.0 - defaults::emptying_threshold) break;
  }
  return series;
}

std::pair<std::vector<double>, std::vector<double>> moments(
    const std::vector<QueueStateDistribution>& series) {
  if (series.empty()) throw std::invalid_argument("moments: empty series");
  std::vector<double> mean(series.size()), var(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double m = series[i].mean();
    mean[i] = m;
    var[i] = std::max(0.0, series[i].second_moment() - m * m);
  }
  return {std::move(mean), std::move(var)};
}

const QueueStateDistribution& state_at(const std::vector<QueueStateDistribution>& series,
                                       double t) {
  if (series.empty()) throw std::out_of_range("state_at: empty series");
  const double d = series.size() > 1 ? series[1].time - series[0].time : 1.0;
  const auto idx = static_cast<std::ptrdiff_t>(std::llround((t - series.front().time) / d));
  if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(series.size()))
    throw std::out_of_range("state_at: time outside propagated range");
  if (std::abs(series[idx].time - t) > d / 2)
    throw std::invalid_argument("state_at: time not grid-aligned");
  return series[idx];
}

namespace {

// Conditional mean path: start from the deterministic state k at source_slot
// and run the same arrival rates forward, recording the mean at each
// requested slot offset. Offsets must be sorted ascending.
void conditional_means(const EquilibriumDistribution& fe, const ModelParams& params,
                       int source_slot, int k, const std::vector<int>& target_slots,
                       std::vector<double>& out) {
  std::vector<double> probs(params.truncation + 1, 0.0);
  probs[k] = 1.0;
  out.clear();
  int slot = source_slot;
  for (int target : target_slots) {
    while (slot < target) {
      const double f = slot < 0 ? fe.pre_density : fe.density_at_slot(slot);
      const bool pre_opening = fe.variant == Variant::EarlyBirds && slot < 0;
      euler_step_inplace(probs, params.lambda * f, pre_opening ? 0.0 : params.mu,
                         params.delta);
      ++slot;
    }
    double m = 0.0;
    for (std::size_t j = 1; j < probs.size(); ++j) m += static_cast<double>(j) * probs[j];
    out.push_back(m);
  }
}

}  // namespace

double covariance(const EquilibriumDistribution& fe, const ModelParams& params,
                  double s, double t, const std::vector<QueueStateDistribution>& series) {
  if (s > t) throw std::invalid_argument("covariance: requires s <= t");
  const auto& src = state_at(series, s);
  const auto& dst = state_at(series, t);

  // conditional_means indexes the grid by absolute slot (slot * delta = time)
  const int s_slot = static_cast<int>(std::llround(s / params.delta));
  const std::vector<int> targets = {static_cast<int>(std::llround(t / params.delta))};

  double acc = 0.0;
  std::vector<double> cm;
  for (int k = 1; k <= params.truncation; ++k) {
    const double pk = src.probs[k];
    if (pk <= 1e-12) continue;  // below this the contribution is < 1e-10 * K^2
    conditional_means(fe, params, s_slot, k, targets, cm);
    acc += static_cast<double>(k) * pk * cm[0];
  }
  return acc - src.mean() * dst.mean();
}

MomentSummary covariance_matrix(const EquilibriumDistribution& fe,
                                const ModelParams& params,
                                const std::vector<double>& times) {
  if (times.empty()) throw std::invalid_argument("covariance_matrix: no times");
  if (!std::is_sorted(times.begin(), times.end()))
    throw std::invalid_argument("covariance_matrix: times must be sorted");

  const auto series = propagate(fe, params);
  const std::size_t n = times.size();
  MomentSummary ms;
  ms.times = times;
  ms.mean.resize(n);
  ms.variance.resize(n);
  ms.covariance.assign(n, std::vector<double>(n, 0.0));

  std::vector<int> slots(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& st = state_at(series, times[i]);
    ms.mean[i] = st.mean();
    ms.variance[i] = std::max(0.0, st.second_moment() - ms.mean[i] * ms.mean[i]);
    ms.covariance[i][i] = ms.variance[i];
    slots[i] = static_cast<int>(std::llround(times[i] / params.delta));
  }

  std::vector<double> cm;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto& src = state_at(series, times[i]);
    std::vector<int> targets(slots.begin() + i + 1, slots.end());
    std::vector<double> acc(targets.size(), 0.0);
    for (int k = 1; k <= params.truncation; ++k) {
      const double pk = src.probs[k];
      if (pk <= 1e-12) continue;
      conditional_means(fe, params, slots[i], k, targets, cm);
      for (std::size_t j = 0; j < targets.size(); ++j)
        acc[j] += static_cast<double>(k) * pk * cm[j];
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      const double cov = acc[j - i - 1] - ms.mean[i] * ms.mean[j];
      ms.covariance[i][j] = cov;
      ms.covariance[j][i] = cov;
    }
  }
  return ms;
}

void write_dynamics_csv(const std::vector<QueueStateDistribution>& series,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.imbue(std::locale::classic());
  out << "time,p0,mean,var\n";
  char line[160];
  for (const auto& st : series) {
    const double m = st.mean();
    const double v = std::max(0.0, st.second_moment() - m * m);
    std::snprintf(line, sizeof line, "%.10g,%.10g,%.10g,%.10g\n", st.time, st.probs[0],
                  m, v);
    out << line;
  }
}

long dynamics_clamp_events() { return clamp_events; }

}  // namespace qgame
