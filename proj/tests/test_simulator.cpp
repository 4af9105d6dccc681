#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "qgame/dynamics.hpp"
#include "qgame/simulator.hpp"
#include "test_helpers.hpp"

using namespace qgame;
using testutil::config_a;
using testutil::solved;

TEST_CASE("schedules must be strictly increasing with at least three instants") {
  CHECK_THROWS_AS(SamplingSchedule::from_times({0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(SamplingSchedule::from_times({0.0, 1.0, 1.0}), std::invalid_argument);
  const auto s = SamplingSchedule::equidistant(0.0, 5.0, 20.0);
  CHECK(s.times == std::vector<double>{0, 5, 10, 15, 20});
  CHECK(s.spacing_hint == 5.0);
}

TEST_CASE("observing an empty day yields zeros") {
  DayRealization day;
  const auto counts = observe(day, SamplingSchedule::equidistant(0, 1, 5));
  for (int c : counts) CHECK(c == 0);
}

TEST_CASE("observe counts right-continuously") {
  DayRealization day;
  day.arrivals = {1.0};
  day.departures = {3.0};
  const auto sched = SamplingSchedule::from_times({0.5, 1.0, 1.5, 3.0, 3.5});
  const auto counts = observe(day, sched);
  CHECK(counts[0] == 0);
  CHECK(counts[1] == 1);  // an observation exactly at an arrival counts it
  CHECK(counts[2] == 1);
  CHECK(counts[3] == 0);  // a departure exactly at t has left
  CHECK(counts[4] == 0);

  DayRealization batch;
  batch.arrivals = {0.0, 0.0, 0.0};
  batch.departures = {0.4, 1.1, 2.0};
  CHECK(observe(batch, sched)[1] == 2);
  CHECK(observe(batch, SamplingSchedule::from_times({-1.0, 0.0, 1.0}))[1] == 3);
}

TEST_CASE("an atom-only distribution produces a pure death process") {
  const auto params = config_a();
  EquilibriumDistribution fe;
  fe.variant = params.variant;
  fe.atom = 1.0;
  fe.grid_step = params.delta;
  auto eng = rng::make_engine(11);
  for (int rep = 0; rep < 200; ++rep) {
    const auto day = sample_day(fe, params, eng);
    REQUIRE(day.arrivals.size() == day.departures.size());
    for (double a : day.arrivals) CHECK(a == 0.0);
    for (std::size_t i = 1; i < day.departures.size(); ++i)
      CHECK(day.departures[i] >= day.departures[i - 1]);
  }
}

TEST_CASE("realizations respect FCFS and time-zero service start") {
  const auto params = config_a();
  const auto& fe = solved(params);
  const ArrivalSampler sampler(fe);
  auto eng = rng::make_engine(5);
  for (int rep = 0; rep < 500; ++rep) {
    const auto day = sample_day(sampler, params, eng);
    REQUIRE(day.arrivals.size() == day.departures.size());
    for (std::size_t i = 0; i < day.arrivals.size(); ++i) {
      CHECK(day.departures[i] >= day.arrivals[i]);
      CHECK(day.departures[i] >= 0.0);
      if (i > 0) {
        CHECK(day.arrivals[i] >= day.arrivals[i - 1]);
        CHECK(day.departures[i] >= day.departures[i - 1]);
      }
    }
  }
}

TEST_CASE("a single day gives a single row") {
  const auto params = config_a();
  const auto& fe = solved(params);
  const auto obs = simulate(fe, params, SamplingSchedule::equidistant(0, 1, 20), 1, 3);
  CHECK(obs.days() == 1);
  CHECK_THROWS_AS(simulate(fe, params, SamplingSchedule::equidistant(0, 1, 20), 0, 3),
                  std::invalid_argument);
}

TEST_CASE("same seed reproduces the observation set bit for bit") {
  const auto params = config_a();
  const auto& fe = solved(params);
  const auto sched = SamplingSchedule::equidistant(0, 1, 20);
  const auto obs1 = simulate(fe, params, sched, 50, 123);
  const auto obs2 = simulate(fe, params, sched, 50, 123);
  CHECK(obs1.counts == obs2.counts);
  const auto obs3 = simulate(fe, params, sched, 50, 124);
  CHECK(obs1.counts != obs3.counts);
}

TEST_CASE("per-day substreams make day order irrelevant") {
  const auto params = config_a();
  const auto& fe = solved(params);
  const auto sched = SamplingSchedule::equidistant(0, 1, 20);
  const auto all = simulate(fe, params, sched, 10, 99);
  // day 7 of a 10-day run equals day 7 of an 8-day run
  const auto fewer = simulate(fe, params, sched, 8, 99);
  CHECK(all.counts[7] == fewer.counts[7]);
}

TEST_CASE("daily totals pass a chi-square test against Poisson(lambda)") {
  const auto params = config_a();
  const auto& fe = solved(params);
  const ArrivalSampler sampler(fe);
  auto eng = rng::make_engine(31337);
  const int days = 100000;
  std::vector<int> histogram(params.truncation + 2, 0);
  for (int l = 0; l < days; ++l) {
    const auto day = sample_day(sampler, params, eng);
    const int n = std::min<int>(static_cast<int>(day.arrivals.size()), params.truncation + 1);
    ++histogram[n];
  }
  // expected Poisson counts, tail pooled to keep cells >= 5
  std::vector<double> expected(histogram.size(), 0.0);
  double pmf = std::exp(-params.lambda);
  double used = 0.0;
  for (std::size_t k = 0; k + 1 < expected.size(); ++k) {
    expected[k] = days * pmf;
    used += pmf;
    pmf *= params.lambda / static_cast<double>(k + 1);
  }
  expected.back() = days * (1.0 - used);
  double chi2 = 0.0;
  int cells = 0;
  double pooled_obs = 0, pooled_exp = 0;
  for (std::size_t k = 0; k < expected.size(); ++k) {
    if (expected[k] < 5.0) {
      pooled_obs += histogram[k];
      pooled_exp += expected[k];
      continue;
    }
    chi2 += (histogram[k] - expected[k]) * (histogram[k] - expected[k]) / expected[k];
    ++cells;
  }
  if (pooled_exp > 0) {
    chi2 += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++cells;
  }
  CHECK(chi2 < testutil::chi_square_quantile(cells - 1, testutil::kZ999));
}

TEST_CASE("days are independent: lag-1 autocorrelation is negligible") {
  const auto params = config_a();
  const auto& fe = solved(params);
  const auto sched = SamplingSchedule::from_times({3.0, 6.0, 9.0});
  const int days = 20000;
  const auto obs = simulate(fe, params, sched, days, 2718);
  for (int col = 0; col < 3; ++col) {
    double mean = 0;
    for (const auto& row : obs.counts) mean += row[col];
    mean /= days;
    double num = 0, den = 0;
    for (int l = 0; l < days; ++l) {
      const double d = obs.counts[l][col] - mean;
      den += d * d;
      if (l + 1 < days) num += d * (obs.counts[l + 1][col] - mean);
    }
    CHECK(std::abs(num / den) < 3.0 / std::sqrt(static_cast<double>(days)));
  }
}

TEST_CASE("Monte Carlo means track the forward equations at spot times") {
  const auto params = config_a();
  const auto& fe = solved(params);
  const auto series = propagate(fe, params);
  const auto sched = SamplingSchedule::from_times({2.0, 4.0, 6.0, 9.0, 12.0});
  const int days = 100000;
  const auto obs = simulate(fe, params, sched, days, 555);
  for (int i = 0; i < sched.size(); ++i) {
    double mean = 0, sq = 0;
    for (const auto& row : obs.counts) {
      mean += row[i];
      sq += static_cast<double>(row[i]) * row[i];
    }
    mean /= days;
    const double se = std::sqrt((sq / days - mean * mean) / days);
    const double q = state_at(series, sched.times[i]).mean();
    CHECK(std::abs(mean - q) < 3.0 * se);
  }
}

TEST_CASE("per-day conservation: everyone who arrives departs") {
  const auto params = config_a();
  const auto& fe = solved(params);
  const ArrivalSampler sampler(fe);
  auto eng = rng::make_engine(404);
  for (int rep = 0; rep < 100; ++rep) {
    const auto day = sample_day(sampler, params, eng);
    CHECK(day.arrivals.size() == day.departures.size());
    if (!day.departures.empty()) {
      const auto counts = observe(
          day, SamplingSchedule::from_times({0.0, 1.0, day.departures.back() + 1.0}));
      CHECK(counts.back() == 0);
    }
  }
}

TEST_CASE("early-birds sampling covers the pre-opening plateau") {
  const auto params = testutil::config_early_birds();
  const auto& fe = solved(params);
  const ArrivalSampler sampler(fe);
  auto eng = rng::make_engine(8);
  int pre = 0, total = 0;
  for (int rep = 0; rep < 2000; ++rep) {
    const auto day = sample_day(sampler, params, eng);
    for (double a : day.arrivals) {
      CHECK(a >= -fe.pre_width - 1e-12);
      pre += a < 0.0;
      ++total;
    }
  }
  const double frac = static_cast<double>(pre) / total;
  const double want = fe.pre_mass();  // ~13% of customers arrive before opening
  CHECK(frac == doctest::Approx(want).epsilon(0.15));
}

TEST_CASE("observations CSV round trip") {
  const auto params = config_a();
  const auto& fe = solved(params);
  const auto obs = simulate(fe, params, SamplingSchedule::equidistant(0, 2.5, 20), 25, 77);
  const std::string path = "qgame_test_obs.csv";
  write_observations_csv(obs, path);
  const auto back = read_observations_csv(path);
  CHECK(back.schedule.times == obs.schedule.times);
  CHECK(back.counts == obs.counts);
  std::remove(path.c_str());
}
