#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "qgame/dynamics.hpp"
#include "qgame/estimator.hpp"
#include "qgame/rng.hpp"
#include "test_helpers.hpp"

using namespace qgame;
using testutil::config_a;
using testutil::solved;

namespace {
ObservationSet make_obs(std::vector<double> times, std::vector<std::vector<int>> counts) {
  ObservationSet obs;
  obs.schedule = SamplingSchedule::from_times(std::move(times));
  obs.counts = std::move(counts);
  return obs;
}
}  // namespace

TEST_CASE("sample means") {
  const auto single = make_obs({0, 1, 2}, {{2, 1, 0}});
  CHECK(sample_means(single) == std::vector<double>{2, 1, 0});
  const auto zeros = make_obs({0, 1, 2}, {{0, 0, 0}, {0, 0, 0}});
  CHECK(sample_means(zeros) == std::vector<double>{0, 0, 0});
  const auto two = make_obs({0, 1, 2}, {{1, 2, 3}, {3, 2, 1}});
  CHECK(sample_means(two) == std::vector<double>{2, 2, 2});
}

TEST_CASE("support scan marks the first and last increase") {
  // counts (0,0,1,2,1,0): both boundaries at the third instant (0-based 2)
  const auto obs = make_obs({0, 1, 2, 3, 4, 5}, {{0, 0, 1, 2, 1, 0}});
  const auto sup = estimate_support(obs);
  CHECK(sup.a_hat == 2);
  CHECK(sup.b_hat == 2);

  // atom-only days never show an increase
  const auto atom = make_obs({0, 1, 2, 3, 4, 5}, {{2, 1, 0, 0, 0, 0}, {3, 2, 1, 0, 0, 0}});
  CHECK_FALSE(estimate_support(atom).found());

  // an increase out of the time-0 instant bounds t_a but not t_b
  const auto early = make_obs({0, 5, 10, 15, 20}, {{0, 1, 0, 0, 0}});
  const auto sup_early = estimate_support(early);
  CHECK(sup_early.a_hat == 1);
  CHECK(sup_early.b_hat == -1);
  CHECK_FALSE(sup_early.found());

  // early-birds scan may use time zero and negative instants as boundaries
  const auto eb = make_obs({-1, 0, 1, 2}, {{0, 1, 2, 1}});
  const auto sup_eb = estimate_support(eb, /*atom_at_zero=*/false);
  CHECK(sup_eb.a_hat == 1);
  CHECK(sup_eb.b_hat == 1);
}

TEST_CASE("support estimates bracket the grid truth") {
  const auto params = config_a();
  const auto& fe = solved(params);
  const auto sched = SamplingSchedule::equidistant(0, 1, 20);
  const auto obs = simulate(fe, params, sched, 1000, 42);
  auto sup = estimate_support(obs);
  REQUIRE(sup.found());
  attach_grid_truth(sup, sched, fe);
  REQUIRE(sup.a_tilde >= 0);
  // t_a <= t_a-tilde <= t_a-hat and t_b-hat <= t_b-tilde <= t_b
  CHECK(fe.support_start <= sched.times[sup.a_tilde]);
  CHECK(sup.a_tilde <= sup.a_hat);
  CHECK(sup.b_hat <= sup.b_tilde);
  CHECK(sched.times[sup.b_tilde] <= fe.support_end);
}

TEST_CASE("fine-grid support estimates hug the true boundaries") {
  const auto params = config_a();
  const auto& fe = solved(params);
  const auto sched = SamplingSchedule::equidistant(0, params.delta, 20.0);  // m = 20001
  const auto obs = simulate(fe, params, sched, 1000, 92);
  auto sup = estimate_support(obs);
  REQUIRE(sup.found());
  const double t_a_hat = sched.times[sup.a_hat];
  const double t_b_hat = sched.times[sup.b_hat];
  CHECK(t_a_hat >= fe.support_start);
  CHECK(t_a_hat < fe.support_start + 0.05);
  CHECK(t_b_hat <= fe.support_end);
  CHECK(t_b_hat > fe.support_end - 0.7);
}

TEST_CASE("farthest partner with low tie-break") {
  const std::vector<double> t = {2, 7, 12};
  CHECK(farthest_partner(2, t) == 12);
  CHECK(farthest_partner(7, t) == 2);  // tie between 2 and 12 breaks low
  CHECK(farthest_partner(12, t) == 2);
  CHECK_THROWS_AS(farthest_partner(2, {2.0}), std::invalid_argument);
}

TEST_CASE("pair estimates follow the two branches") {
  CHECK(pair_estimate(4, 3.0, 9, 2.5, 1.0) == doctest::Approx(0.1));
  CHECK(pair_estimate(5, 1.5, 0, 4.0, 1.0) == doctest::Approx(0.1));  // half-queue branch
  CHECK(pair_estimate(0, 4.0, 5, 1.5, 1.0) == doctest::Approx(0.1));
  CHECK(pair_estimate(4, 3.0, 9, 2.5, 1.0) == pair_estimate(9, 2.5, 4, 3.0, 1.0));
  CHECK_THROWS_AS(pair_estimate(4, 3.0, 4, 2.5, 1.0), std::invalid_argument);
}

TEST_CASE("pair estimate on exact means recovers theta") {
  const auto params = config_a();
  const auto& fe = solved(params);
  const auto series = propagate(fe, params);
  const double s = fe.support_start + 1.0, t = fe.support_end - 1.0;
  const double est = pair_estimate(s, state_at(series, s).mean(), t,
                                   state_at(series, t).mean(), params.mu);
  CHECK(est == doctest::Approx(params.theta()).epsilon(1e-3 / params.theta()));
  CHECK(std::abs(est - params.theta()) < 1e-3);
}

TEST_CASE("worked weight example") {
  const auto w = pairing_weights({2, 7, 12}, 1.0);
  CHECK(w.k[0] == doctest::Approx(-30.0));
  CHECK(w.k[1] == doctest::Approx(15.0));
  CHECK(w.k[2] == doctest::Approx(30.0));
  CHECK(w.g[0] == doctest::Approx(2.0 / 15.0));
  CHECK(w.g[1] == doctest::Approx(-1.0 / 15.0));
  CHECK(w.g[2] == doctest::Approx(-1.0 / 15.0));
}

TEST_CASE("weight identities hold for random schedules") {
  auto eng = rng::make_engine(1234);
  for (int rep = 0; rep < 200; ++rep) {
    const int m = 2 + static_cast<int>(rng::uniform01(eng) * 48);
    const double mu = 0.25 + 4.0 * rng::uniform01(eng);
    std::vector<double> times;
    double t = rng::uniform01(eng) * 3.0 + 0.1;
    for (int i = 0; i < m; ++i) {
      times.push_back(t);
      t += 0.05 + rng::uniform01(eng) * 2.0;
    }
    const auto w = pairing_weights(times, mu);
    double sum_g = 0, sum_gt = 0;
    for (int i = 0; i < m; ++i) {
      sum_g += w.g[i];
      sum_gt += w.g[i] * times[i];
    }
    CHECK(std::abs(sum_g) < 1e-12);
    CHECK(std::abs(mu * sum_gt + 1.0) < 1e-12);
  }
}

TEST_CASE("noiseless linear means recover theta exactly") {
  auto eng = rng::make_engine(99);
  for (int rep = 0; rep < 100; ++rep) {
    const double theta = 0.02 + 0.9 * rng::uniform01(eng);
    const double mu = 0.5 + 2.0 * rng::uniform01(eng);
    const double c = 1.0 + 5.0 * rng::uniform01(eng);
    const int m = 2 + static_cast<int>(rng::uniform01(eng) * 20);
    std::vector<double> times, q;
    double t = 0.3;
    for (int i = 0; i < m; ++i) {
      times.push_back(t);
      q.push_back(c - theta * mu * t);
      t += 0.1 + rng::uniform01(eng);
    }
    // mean of farthest-pair estimates
    double acc = 0;
    for (int i = 0; i < m; ++i) {
      const double d = farthest_partner(times[i], times);
      const auto it = std::lower_bound(times.begin(), times.end(), d);
      acc += pair_estimate(times[i], q[i], d, q[it - times.begin()], mu);
    }
    CHECK(acc / m == doctest::Approx(theta).epsilon(1e-12));
    // equivalently, the weighted form sum_i g_i q(t_i)
    const auto w = pairing_weights(times, mu);
    double lin = 0;
    for (int i = 0; i < m; ++i) lin += w.g[i] * q[i];
    CHECK(lin == doctest::Approx(theta).epsilon(1e-12));
    // half-queue branch: the time-zero pair with q(0) = 2c
    CHECK(pair_estimate(times[0], q[0], 0.0, 2.0 * c, mu) == doctest::Approx(theta));
  }
}

TEST_CASE("early-birds branches recover theta exactly on linear means") {
  const double mu = 1.3, theta = 1.0 / 21.0, q0 = 1.4;
  const auto q = [&](double t) {
    return t <= 0 ? q0 + (1.0 - theta) * mu * t : q0 - theta * mu * t;
  };
  // both non-positive, straddling, both non-negative
  CHECK(pair_estimate_early_birds(-1.2, q(-1.2), -0.3, q(-0.3), mu) ==
        doctest::Approx(theta).epsilon(1e-12));
  CHECK(pair_estimate_early_birds(-1.0, q(-1.0), 2.0, q(2.0), mu) ==
        doctest::Approx(theta).epsilon(1e-12));
  CHECK(pair_estimate_early_birds(0.5, q(0.5), 3.5, q(3.5), mu) ==
        doctest::Approx(theta).epsilon(1e-12));
  // boundary cases sit on the same value
  CHECK(pair_estimate_early_birds(0.0, q(0.0), 2.0, q(2.0), mu) ==
        doctest::Approx(theta).epsilon(1e-12));
  CHECK(pair_estimate_early_birds(-1.0, q(-1.0), 0.0, q(0.0), mu) ==
        doctest::Approx(theta).epsilon(1e-12));
  // symmetry across the argument order
  CHECK(pair_estimate_early_birds(2.0, q(2.0), -1.0, q(-1.0), mu) ==
        doctest::Approx(pair_estimate_early_birds(-1.0, q(-1.0), 2.0, q(2.0), mu)));
}

TEST_CASE("mean estimator succeeds on simulated config A data") {
  const auto params = config_a();
  const auto& fe = solved(params);
  const auto sched = SamplingSchedule::equidistant(0, 1, 20);
  const auto obs = simulate(fe, params, sched, 1000, 7);

  const auto res = mean_estimator(obs, params.mu);
  REQUIRE(res.success);
  CHECK(res.theta_hat == doctest::Approx(params.theta()).epsilon(0.25));
  CHECK(res.estimation_times.front() == 0.0);  // include_zero default

  const auto res_nz = mean_estimator(obs, params.mu, /*include_zero=*/false);
  REQUIRE(res_nz.success);
  CHECK(res_nz.estimation_times.front() > 0.0);
  // theta_hat equals the weighted form when time zero is excluded
  const auto means = sample_means(obs);
  double lin = 0;
  for (std::size_t i = 0; i < res_nz.weights.times.size(); ++i) {
    const auto it = std::lower_bound(sched.times.begin(), sched.times.end(),
                                     res_nz.weights.times[i]);
    lin += res_nz.weights.g[i] * means[it - sched.times.begin()];
  }
  CHECK(res_nz.theta_hat == doctest::Approx(lin).epsilon(1e-12));
}

TEST_CASE("estimation failures are first-class results") {
  // no increase anywhere
  const auto flat = make_obs({0, 5, 10, 15, 20}, {{3, 2, 1, 0, 0}});
  const auto res1 = mean_estimator(flat, 1.0);
  CHECK_FALSE(res1.success);
  CHECK(res1.failure_reason == "no increase observed");
  CHECK(std::isnan(res1.theta_hat));

  // increases land on a single instant: fewer than two support points
  const auto narrow = make_obs({0, 5, 10, 15, 20}, {{0, 1, 0, 0, 0}, {1, 0, 1, 0, 0}});
  const auto res2 = mean_estimator(narrow, 1.0);
  CHECK_FALSE(res2.success);
  CHECK(res2.failure_reason ==
        "fewer than two sampling instants inside the estimated support");
}

TEST_CASE("asymptotic variance forms agree") {
  MomentSummary id2;
  id2.times = {1, 2};
  id2.variance = {1, 1};
  id2.covariance = {{1, 0}, {0, 1}};
  CHECK(asymptotic_variance({1, -1}, id2) == doctest::Approx(2.0));

  MomentSummary zero;
  zero.times = {1, 2, 3};
  zero.variance = {0, 0, 0};
  zero.covariance = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  CHECK(asymptotic_variance({0.3, -1.2, 4.0}, zero) == 0.0);

  // double-sum route agrees with the quadratic form on a random PSD matrix
  auto eng = rng::make_engine(314);
  const int n = 6;
  std::vector<std::vector<double>> a(n, std::vector<double>(n));
  for (auto& row : a)
    for (double& x : row) x = rng::uniform01(eng) - 0.5;
  MomentSummary ms;
  ms.covariance.assign(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0;
      for (int k = 0; k < n; ++k) s += a[k][i] * a[k][j];
      ms.covariance[i][j] = s;
    }
  ms.variance.resize(n);
  ms.times.resize(n);
  for (int i = 0; i < n; ++i) ms.variance[i] = ms.covariance[i][i];
  std::vector<double> g(n);
  for (double& x : g) x = rng::uniform01(eng) - 0.5;
  double quad = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) quad += g[i] * ms.covariance[i][j] * g[j];
  const double ds = asymptotic_variance(g, ms);
  CHECK(ds == doctest::Approx(quad).epsilon(1e-12));

  CHECK_THROWS_AS(asymptotic_variance({1.0}, id2), std::invalid_argument);
}

TEST_CASE("support estimate converges to the grid truth as days grow") {
  const auto params = config_a();
  const auto& fe = solved(params);
  const auto sched = SamplingSchedule::equidistant(0, 5, 20);
  SupportEstimate truth;
  attach_grid_truth(truth, sched, fe);

  const int reps = 100;
  double prev = -1.0;
  for (int n : {50, 200, 1000}) {
    int hits = 0;
    for (int k = 0; k < reps; ++k) {
      const auto obs =
          simulate(fe, params, sched, n, rng::derive({2024u, (std::uint64_t)n, (std::uint64_t)k}));
      const auto sup = estimate_support(obs);
      hits += sup.found() && sup.a_hat == truth.a_tilde;
    }
    const double p = static_cast<double>(hits) / reps;
    CHECK(p >= prev);
    prev = p;
  }
}

TEST_CASE("estimator error is asymptotically normal with the delta-method variance") {
  const auto params = config_a();
  const auto& fe = solved(params);
  std::vector<double> times;
  for (int t = 3; t <= 12; ++t) times.push_back(t);
  const auto schedule = SamplingSchedule::from_times(times);
  const auto weights = pairing_weights(times, params.mu);
  const auto sigma = covariance_matrix(fe, params, times);
  const double avar = asymptotic_variance(weights.g, sigma);

  const int reps = 500, n = 500;
  std::vector<double> scaled_errors;
  for (int k = 0; k < reps; ++k) {
    const auto obs = simulate(fe, params, schedule, n,
                              rng::derive({31415u, static_cast<std::uint64_t>(k)}));
    const auto means = sample_means(obs);
    double theta_hat = 0;
    for (std::size_t i = 0; i < times.size(); ++i) theta_hat += weights.g[i] * means[i];
    scaled_errors.push_back(std::sqrt(static_cast<double>(n)) *
                            (theta_hat - params.theta()));
  }
  CHECK(testutil::anderson_darling_pvalue(scaled_errors) > 1e-3);

  double mean = 0, var = 0;
  for (double x : scaled_errors) mean += x;
  mean /= reps;
  for (double x : scaled_errors) var += (x - mean) * (x - mean);
  var /= reps - 1;
  CHECK(var == doctest::Approx(avar).epsilon(0.25));
}

TEST_CASE("early-birds estimator on simulated data") {
  const auto params = testutil::config_early_birds();
  const auto& fe = solved(params);
  const auto sched = SamplingSchedule::equidistant(-2, 1, 26);
  const auto obs = simulate(fe, params, sched, 1000, 616);
  const auto res = estimator_early_birds(obs, params.mu);
  REQUIRE(res.success);
  // the estimated support reaches a negative instant, so the pre-opening
  // pair branches are in play
  CHECK(res.estimation_times.front() < 0.0);
  CHECK(res.theta_hat == doctest::Approx(params.theta()).epsilon(0.5));
  // weights for the early-birds pairing satisfy the same identities
  double sum_g = 0, sum_gt = 0;
  for (std::size_t i = 0; i < res.weights.g.size(); ++i) {
    sum_g += res.weights.g[i];
    sum_gt += res.weights.g[i] * res.weights.times[i];
  }
  CHECK(std::abs(sum_g) < 1e-12);
  CHECK(std::abs(params.mu * sum_gt + 1.0) < 1e-10);
}
