#include <cmath>
#include <random>
#include <sstream>

#include "cfsim/algorithms.hpp"
#include "cfsim/metrics.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cfsim;
using namespace cfsim::testing;

namespace {

RunTrace synthetic(std::size_t n, std::size_t steps, const std::function<Rating(std::size_t)>& fb) {
  RunTrace t;
  t.n_users = n;
  for (std::size_t k = 0; k < steps; ++k) {
    TraceRecord r;
    r.t = k + 1;
    r.user = static_cast<UserId>(k % n);
    r.item = static_cast<ItemId>(k);
    r.feedback = fb(k);
    t.records.push_back(r);
  }
  return t;
}

// Cubic search straight from the definition, grid restricted.
double brute_cold_start(const std::vector<double>& v, double step, double thr, std::size_t min_tail) {
  const std::size_t last = v.size() - 1;
  double best = -1;
  for (std::size_t i = 0; i <= last; ++i) {
    for (std::size_t e = i; e <= last; ++e) {
      if (last - e < std::max<std::size_t>(min_tail, 1)) break;
      bool ok = true;
      for (std::size_t j = e + 1; j <= last && ok; ++j) {
        ok = v[j] - v[i] <= thr * step * static_cast<double>(j - i) + 1e-12;
      }
      if (ok) {
        const double val = static_cast<double>(e) * step;
        if (best < 0 || val < best) best = val;
        break;
      }
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("regret of synthetic traces") {
    const auto liked = regret(synthetic(4, 40, [](std::size_t) { return Rating{1}; }));
    for (double v : liked.values) CHECK(v == 0);
    const auto hated = regret(synthetic(4, 40, [](std::size_t) { return Rating{-1}; }));
    CHECK(hated.step == 0.25);
    for (std::size_t k = 0; k < hated.values.size(); ++k) CHECK(hated.values[k] == doctest::Approx(0.25 * k));
    const auto first = regret(synthetic(5, 50, [](std::size_t k) { return Rating(k < 5 ? -1 : 1); }), 5);
    REQUIRE(first.values.size() == 11);
    CHECK(first.values[0] == 0);
    for (std::size_t k = 1; k < first.values.size(); ++k) CHECK(first.values[k] == 1);
    CHECK_THROWS_AS(RegretAccumulator(0, 1), ParameterError);
    CHECK_THROWS_AS(RegretAccumulator(3, 0), ParameterError);
  }

  TEST_CASE("offline regret matches the online counter at every grid point") {
    const auto cm = make_cluster_measure(4, 50, 0.15, 1, 1);
    const TheoryConstants k(1, 0.15, 50, ScaleFactors::desk());
    Environment env(cm.measure, 3);
    ItemItemRecommender algo(k, cm.measure, 3);
    RegretAccumulator online(50, 1);
    std::vector<double> counter{0.0};
    RunTrace trace;
    trace.n_users = 50;
    run(env, algo, 60, [&](const TraceRecord& r) {
      online.add(r);
      trace.records.push_back(r);
      counter.push_back(static_cast<double>(env.dislikes()) / 50.0);
    });
    const auto offline = regret(trace);
    CHECK(offline.values == online.curve().values);
    CHECK(offline.values == counter);
    for (std::size_t j = 1; j < offline.values.size(); ++j) {
      CHECK(offline.values[j] >= offline.values[j - 1]);
      CHECK(offline.values[j] <= offline.step * static_cast<double>(j) + 1e-12);
    }
  }

  TEST_CASE("mean curves and their bands") {
    RegretCurve a{3, 0.5, {0, 1, 2}, 0, "x"};
    const auto same = mean_regret({a, a, a});
    for (double s : same.stderr_) CHECK(s == 0);
    RegretCurve b{3, 0.5, {0, 0, 4}, 1, "x"};
    const auto mixed = mean_regret({a, b});
    CHECK(mixed.mean[2] == 3);
    CHECK(mixed.stderr_[2] == doctest::Approx(1.0));
    CHECK(mixed.horizon() == 1.0);
    RegretCurve shorter{3, 0.5, {0, 1}, 2, "x"};
    CHECK_THROWS_AS(mean_regret({a, shorter}), ParameterError);
    RegretCurve coarser{3, 1.0, {0, 1, 2}, 2, "x"};
    CHECK_THROWS_AS(mean_regret({a, coarser}), ParameterError);
    CHECK_THROWS_AS(mean_regret({a}), ParameterError);
    std::ostringstream out;
    write_curve_csv(mixed, out);
    const std::string text = out.str();
    CHECK(text.rfind("T,R_mean,R_stderr,n_seeds\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  }

  TEST_CASE("random curves averaged over seeds stay nondecreasing") {
    auto cube = std::make_shared<const UniformCube>(20);
    std::vector<RegretCurve> curves;
    for (std::uint64_t s = 0; s < 10; ++s) {
      Environment env(cube, s);
      RandomRecommender algo;
      curves.push_back(regret(run(env, algo, 20), 5));
    }
    const auto m = mean_regret(curves);
    for (std::size_t j = 1; j < m.mean.size(); ++j) CHECK(m.mean[j] >= m.mean[j - 1]);
  }

  TEST_CASE("cold start on synthetic curves") {
    std::vector<double> zero(101, 0.0);
    const auto z = cold_start_time(zero, 0.1);
    CHECK(z.found);
    CHECK(z.value == 0);

    std::vector<double> ramp(101);
    for (std::size_t k = 0; k <= 100; ++k) ramp[k] = 0.1 * static_cast<double>(k);
    const auto r = cold_start_time(ramp, 0.1);
    CHECK_FALSE(r.found);
    CHECK(r.trailing_slope == doctest::Approx(1.0));

    std::vector<double> kink(201);
    for (std::size_t k = 0; k <= 200; ++k) {
      const double t = 0.1 * static_cast<double>(k);
      kink[k] = t <= 5 ? t : 5 + 0.05 * (t - 5);
    }
    const auto c = cold_start_time(kink, 0.1);
    REQUIRE(c.found);
    CHECK(c.value == doctest::Approx(5.0));
    CHECK(c.trailing_slope == doctest::Approx(0.05));
    CHECK(c.to_json()["T_cold_start"] == c.value);
  }

  TEST_CASE("cold start agrees with a direct search and is monotone in the threshold") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> inc(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> v{0.0};
      const double knee = inc(rng);
      for (std::size_t k = 1; k <= 40; ++k) {
        const double x = static_cast<double>(k) / 40;
        v.push_back(v.back() + 0.1 * inc(rng) * (x < knee ? 2 : 0.3));
      }
      double prev = -1;
      for (double thr : {0.05, 0.1, 0.15, 0.2, 0.5}) {
        const auto est = cold_start_time(v, 0.1, thr, 0.1);
        const double ref = brute_cold_start(v, 0.1, thr, 4);
        CHECK(est.found == (ref >= 0));
        if (!est.found) continue;
        CHECK(est.value == doctest::Approx(ref));
        if (prev >= 0) CHECK(est.value <= prev + 1e-12);
        prev = est.value;
        for (std::size_t j = static_cast<std::size_t>(std::llround(est.value / 0.1)) + 1; j < v.size(); ++j) {
          const auto i = static_cast<std::size_t>(std::llround(est.t / 0.1));
          CHECK(v[j] - v[i] <= thr * 0.1 * static_cast<double>(j - i) + 1e-12);
        }
      }
    }
  }

  TEST_CASE("window slope") {
    const std::vector<double> v{0, 1, 2, 2, 2};
    CHECK(window_slope(v, 1.0, 0, 2) == 1);
    CHECK(window_slope(v, 1.0, 2, 4) == 0);
    CHECK(window_slope(v, 1.0, 1.5, 2.5) == doctest::Approx(0.5));
    CHECK_THROWS_AS(window_slope(v, 1.0, 2, 2), ParameterError);
  }

  TEST_CASE("linear lower bound") {
    CHECK(linear_lower_bound(0.25, 10) == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(linear_lower_bound(0.5, 10) == 0);
    CHECK(linear_lower_bound(0.4999999, 10) < 1e-7);
    CHECK_THROWS_AS(linear_lower_bound(0.0, 10), ParameterError);
    CHECK_THROWS_AS(linear_lower_bound(0.1, 0), ParameterError);
  }

  TEST_CASE("late regret slopes respect the linear lower bound") {
    const auto cm = make_cluster_measure(4, 100, 0.15, 1, 2);
    const TheoryConstants k(1, 0.15, 100, ScaleFactors::desk());
    for (int which = 0; which < 2; ++which) {
      std::vector<double> slopes;
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Environment env(cm.measure, seed);
        std::unique_ptr<Recommender> algo;
        if (which == 0) algo = std::make_unique<RandomRecommender>();
        else algo = std::make_unique<ItemItemRecommender>(k, cm.measure, seed);
        const auto c = regret(run(env, *algo, 100), 100);
        slopes.push_back(window_slope(c.values, c.step, 50, 100));
      }
      double mean = 0, var = 0;
      for (double s : slopes) mean += s;
      mean /= 20;
      for (double s : slopes) var += (s - mean) * (s - mean);
      const double se = std::sqrt(var / 19 / 20);
      CHECK(mean >= linear_lower_bound(0.15, 100) - 3 * se);
    }
  }

  TEST_CASE("theory overlay closed forms") {
    const auto b = bounds_overlay(0.1, 1, 1000000);
    CHECK(b.eps_n == doctest::Approx(std::pow(std::pow(2.0, 23) / 0.1 * 630 * 13 * 81 / 1e6, 1.0 / 6)).epsilon(1e-13));
    CHECK(b.c == doctest::Approx(0.1 / 2960).epsilon(1e-15));
    CHECK(b.eps1 == doctest::Approx(std::max(0.5, b.eps_n) * b.c).epsilon(1e-15));
    CHECK(b.lower_slope == doctest::Approx(0.8 / 1e6).epsilon(1e-15));
    CHECK(b.t_mp == doctest::Approx(b.mp1 / 1e6).epsilon(1e-15));
    CHECK(b.t_min == doctest::Approx(b.t_mp + 12 / b.eps1 * std::log(1 / b.eps1)).epsilon(1e-13));
    CHECK(b.c_m == doctest::Approx(256.0 * 4 / 0.1).epsilon(1e-15));
    const auto j = b.to_json();
    for (const char* key : {"eps_N", "T_min", "T_max", "alpha", "beta", "MP_1", "lower_slope"}) CHECK(j.contains(key));
  }
}
