#include <algorithm>
#include <cmath>
#include <numeric>

#include "cfsim/itemspace.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cfsim;
using cfsim::testing::disjoint_blocks;
using cfsim::testing::liked_range;

TEST_SUITE("itemspace") {
  TEST_CASE("gamma distance on small vectors") {
    const auto x = ItemType::from_string("++--");
    const auto y = ItemType::from_string("+--+");
    CHECK(gamma_distance(x, y) == 0.5);
    CHECK(gamma_distance(x, x) == 0.0);
    CHECK(gamma_distance(x, y) == gamma_distance(y, x));

    const auto a = ItemType::from_string("+-+-+--+");
    const auto b = ItemType::from_string("-+-+-++-");
    CHECK(gamma_distance(a, b) == 1.0);
  }

  TEST_CASE("gamma distance rejects mismatched lengths") {
    CHECK_THROWS_AS(gamma_distance(ItemType(4), ItemType(5)), DimensionError);
  }

  TEST_CASE("item type string round trip and bit tail") {
    const std::string s = "+-+++---+-+-+-++--+-+-+++---+-+-+-++--+-+-+++---+-+-+-++--+-+-+++---";
    const auto t = ItemType::from_string(s);
    CHECK(t.n_users() == s.size());
    CHECK(t.to_string() == s);
    CHECK(t.like_count() == static_cast<std::size_t>(std::count(s.begin(), s.end(), '+')));
    CHECK_THROWS_AS(ItemType::from_string("+x-"), DataError);
  }

  TEST_CASE("degenerate mixture always returns its type") {
    const auto x = ItemType::from_string("+--+-");
    FiniteMixture m({x}, {1.0});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      CHECK(*m.sample(rng) == x);
    }
  }

  TEST_CASE("uniform cube draws have like fraction one half") {
    UniformCube cube(1000);
    Rng rng(7);
    double total = 0;
    for (int s = 0; s < 10000; ++s) total += cube.sample(rng)->like_fraction();
    CHECK(std::abs(total / 10000 - 0.5) <= 0.02);
  }

  TEST_CASE("mixture draw frequencies follow the weights") {
    FiniteMixture m({ItemType::from_string("++"), ItemType::from_string("--")}, {0.9, 0.1});
    Rng rng(11);
    int first = 0;
    for (int s = 0; s < 10000; ++s) first += m.sample_index(rng) == 0;
    CHECK(std::abs(first / 10000.0 - 0.9) <= 0.01);
  }

  TEST_CASE("mixture frequencies pass a chi-square test") {
    const std::vector<double> w = {0.4, 0.3, 0.2, 0.1};
    std::vector<ItemType> types;
    for (std::size_t k = 0; k < w.size(); ++k) types.push_back(liked_range(4, k, k + 1));
    FiniteMixture m(types, w);
    Rng rng(2024);
    std::vector<double> counts(w.size(), 0);
    const int draws = 100000;
    for (int s = 0; s < draws; ++s) counts[m.sample_index(rng)] += 1;
    double chi2 = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double e = draws * w[k];
      chi2 += (counts[k] - e) * (counts[k] - e) / e;
    }
    // upper 1e-3 quantile of chi-square with 3 degrees of freedom
    CHECK(chi2 < 16.266);
  }

  TEST_CASE("sampling is deterministic in the seed") {
    UniformCube cube(200);
    Rng a(5), b(5);
    for (int s = 0; s < 50; ++s) CHECK(*cube.sample(a) == *cube.sample(b));
  }

  TEST_CASE("mixture validation") {
    const auto x = ItemType::from_string("+-");
    CHECK_THROWS_AS(FiniteMixture({x, x}, {0.5, 0.4}), ParameterError);
    CHECK_THROWS_AS(FiniteMixture({x, x}, {1.5, -0.5}), ParameterError);
    CHECK_THROWS_AS(FiniteMixture({x, ItemType::from_string("+-+")}, {0.5, 0.5}), DimensionError);
    CHECK_THROWS_AS(FiniteMixture({x}, {0.5, 0.5}), DimensionError);
    CHECK_NOTHROW(FiniteMixture({x, x}, {0.5, 0.5}));
  }

  TEST_CASE("doubling dimension of a single type is zero") {
    FiniteMixture m({ItemType::from_string("+--+")}, {1.0});
    CHECK(doubling_dimension_exact(m) == 0.0);
  }

  TEST_CASE("four equidistant equal types have dimension two") {
    const auto m = disjoint_blocks(4, 5);
    CHECK(gamma_distance(m->type(0), m->type(1)) == 0.5);
    CHECK(doubling_dimension_exact(*m) == 2.0);
  }

  TEST_CASE("two types with unequal weights") {
    const auto x = liked_range(8, 0, 2);
    const auto y = liked_range(8, 2, 4);
    for (double w : {0.5, 0.25, 0.1}) {
      FiniteMixture m({x, y}, {w, 1 - w});
      CHECK(doubling_dimension_exact(m) == doctest::Approx(std::log2(1 / w)).epsilon(1e-12));
    }
  }

  TEST_CASE("equal-weight equidistant mixtures give log2 K exactly") {
    for (std::size_t k : {2, 4, 8, 16}) {
      CHECK(doubling_dimension_exact(*disjoint_blocks(k, 3)) == std::log2(static_cast<double>(k)));
    }
  }

  TEST_CASE("assumption checks on disjoint ten-percent types") {
    const auto m = disjoint_blocks(2, 10);  // 20 users, each type liked by half of them
    FiniteMixture narrow({liked_range(100, 0, 10), liked_range(100, 10, 20)}, {0.5, 0.5});
    const auto rep = validate_assumptions(narrow, 0.04);
    CHECK(rep.max_item_fraction == doctest::Approx(0.1));
    CHECK_FALSE(rep.a2_item_ok);
    CHECK(rep.exact);
    CHECK(rep.d_exact.has_value());
    CHECK_FALSE(validate_assumptions(*m, 0.1).a2_item_ok);
  }

  TEST_CASE("users liking a fixed count of equal types pass the user check") {
    const double nu = 0.1;
    const std::size_t k = 10;
    const auto per_user = static_cast<std::size_t>(std::ceil(1.5 * nu * k));
    std::vector<ItemType> types(k, ItemType(k));
    for (std::size_t u = 0; u < k; ++u) {
      for (std::size_t s = 0; s < per_user; ++s) types[(u + s) % k].set(static_cast<UserId>(u), true);
    }
    FiniteMixture m(types, std::vector<double>(k, 1.0 / k));
    const auto rep = validate_assumptions(m, nu);
    CHECK(rep.a2_user_ok);
    CHECK(rep.a2_item_ok);
  }

  TEST_CASE("uniform cube fails the like-rate check") {
    UniformCube cube(100);
    const auto rep = validate_assumptions(cube, 0.2, 200, 3);
    CHECK_FALSE(rep.a2_user_ok);
    CHECK_FALSE(rep.a2_item_ok);
    CHECK_FALSE(rep.exact);
    CHECK_FALSE(rep.d_exact.has_value());
  }

  TEST_CASE("assumption validation rejects nu out of range") {
    UniformCube cube(10);
    CHECK_THROWS_AS(validate_assumptions(cube, 0.3), ParameterError);
    CHECK_THROWS_AS(validate_assumptions(cube, 0.0), ParameterError);
  }

  TEST_CASE("cluster generator: single cluster") {
    const auto cm = make_cluster_measure(1, 100, 0.1, 1, 0);
    CHECK(cm.measure->size() == 1);
    const double f = cm.measure->type(0).like_fraction();
    CHECK(cm.report.a2_item_ok == (f >= 0.1 && f <= 0.2));
    CHECK(cm.report.a2_item_ok);
    // a lone type is liked with probability 0 or 1 by each user
    CHECK_FALSE(cm.report.a2_user_ok);
  }

  TEST_CASE("cluster generator: four flat clusters") {
    const auto cm = make_cluster_measure(4, 400, 0.15, 1, 3);
    CHECK(cm.d_exact == 2.0);
    CHECK(cm.report.ok());
    for (std::size_t a = 0; a < 4; ++a) {
      for (std::size_t b = a + 1; b < 4; ++b) CHECK(gamma_distance(cm.measure->type(a), cm.measure->type(b)) > 0.2);
    }
  }

  TEST_CASE("cluster generator: eight clusters in a binary tree") {
    const auto cm = make_cluster_measure(8, 800, 0.1, 3, 1);
    CHECK(cm.d_exact <= 3.0);
    CHECK(cm.report.ok());
  }

  TEST_CASE("cluster generator rejects infeasible settings") {
    CHECK_THROWS_AS(make_cluster_measure(2, 100, 0.2, 1, 0), ConstructionError);
    CHECK_THROWS_AS(make_cluster_measure(6, 100, 0.1, 2, 0), ConstructionError);
    CHECK_THROWS_AS(make_cluster_measure(8, 4, 0.1, 1, 0), ConstructionError);
  }

  TEST_CASE("generator is deterministic in its seed") {
    const auto a = make_cluster_measure(4, 200, 0.15, 1, 9);
    const auto b = make_cluster_measure(4, 200, 0.15, 1, 9);
    CHECK(a.measure->to_json() == b.measure->to_json());
  }

  TEST_CASE("gamma is a metric on generated supports") {
    for (std::size_t k : {4, 8, 16}) {
      const double nu = k == 4 ? 0.15 : k == 8 ? 0.1 : 0.05;
      const auto cm = make_cluster_measure(k, 320, nu, k == 16 ? 2 : 1, k);
      const auto& m = *cm.measure;
      for (std::size_t a = 0; a < m.size(); ++a) {
        CHECK(gamma_distance(m.type(a), m.type(a)) == 0.0);
        for (std::size_t b = 0; b < m.size(); ++b) {
          const double ab = gamma_distance(m.type(a), m.type(b));
          CHECK(ab >= 0);
          CHECK(ab == gamma_distance(m.type(b), m.type(a)));
          if (a != b) CHECK(ab > 0);
          for (std::size_t c = 0; c < m.size(); ++c) {
            CHECK(ab <= gamma_distance(m.type(a), m.type(c)) + gamma_distance(m.type(c), m.type(b)) + 1e-15);
          }
        }
      }
    }
  }

  TEST_CASE("ball mass is at least r to the exact dimension at critical radii") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      HierarchicalSpec spec;
      spec.n_users = 120;
      spec.branching = {2, 2};
      spec.flip_radii = {0.2, 0.05};
      spec.leaf_weights = {0.4, 0.1, 0.3, 0.2};
      spec.like_fraction = 0.3;
      spec.seed = seed;
      const auto m = expand_hierarchy(spec);
      const double d = doubling_dimension_exact(*m);
      for (std::size_t x = 0; x < m->size(); ++x) {
        for (std::size_t y = 0; y < m->size(); ++y) {
          const double g = gamma_distance(m->type(x), m->type(y));
          for (double r : {g, g / 2}) {
            if (r <= 0) continue;
            CHECK(ball_mass(*m, x, r) >= std::pow(r, d) - 1e-12);
          }
        }
      }
    }
  }

  TEST_CASE("hierarchy keeps like counts and siblings close") {
    HierarchicalSpec spec;
    spec.n_users = 200;
    spec.branching = {3, 2};
    spec.flip_radii = {0.3, 0.05};
    spec.like_fraction = 0.15;
    spec.seed = 4;
    const auto m = expand_hierarchy(spec);
    REQUIRE(m->size() == 6);
    for (std::size_t k = 0; k < m->size(); ++k) CHECK(m->type(k).like_count() == 30);
    CHECK(gamma_distance(m->type(0), m->type(1)) < gamma_distance(m->type(0), m->type(2)));
  }

  TEST_CASE("measure specs round trip through JSON") {
    const auto cm = make_cluster_measure(4, 60, 0.15, 1, 2);
    const auto back = measure_from_json(cm.measure->to_json());
    REQUIRE(back->as_mixture() != nullptr);
    CHECK(back->to_json() == cm.measure->to_json());
    const auto cube = measure_from_json({{"variant", "uniform_cube"}, {"n_users", 12}});
    CHECK(cube->n_users() == 12);
    CHECK_THROWS_AS(measure_from_json({{"variant", "nope"}, {"n_users", 3}}), ConfigError);
    CHECK_THROWS_AS(measure_from_json({{"variant", "finite_mixture"}, {"n_users", 3}, {"types", {"++"}}, {"weights", {1}}}),
                    DimensionError);
  }

  TEST_CASE("user cluster measure: every user likes a nu fraction") {
    for (std::size_t k : {2, 8, 32}) {
      const auto m = make_user_cluster_measure(k, 1000, 0.1, 0);
      for (UserId u = 0; u < 1000; u += 37) CHECK(m->user_like_mass(u) == doctest::Approx(0.1).epsilon(1e-9));
      const auto rep = validate_assumptions(*m, 0.1);
      CHECK(rep.a2_user_ok);
      double total = 0;
      for (std::size_t j = 0; j < m->size(); ++j) total += m->weight(j);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}
