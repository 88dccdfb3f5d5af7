#include <cmath>
#include <set>
#include <sstream>

#include "cfsim/algorithms.hpp"
#include "cfsim/engine.hpp"
#include "doctest.h"
#include "reference_partition.hpp"
#include "test_util.hpp"

using namespace cfsim;
using namespace cfsim::testing;

namespace {

// Recommends item 0 forever.
class Stubborn final : public Recommender {
 public:
  std::string name() const override { return "stubborn"; }
  Recommendation recommend(UserId, const Ledger&, Environment& env) override {
    if (env.item_count() == 0) env.draw_fresh();
    return {0, Phase::Exploit};
  }
  void observe(UserId, ItemId, Rating, const Ledger&) override {}
};

std::string csv(const RunTrace& t) {
  std::ostringstream out;
  write_trace_csv(t, out);
  return out.str();
}

ScaleFactors small_epochs() {
  ScaleFactors s = ScaleFactors::desk();
  s.preset = "custom(desk)";
  s.m = 1e-9;
  return s;
}

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("oracle on a liked single type never sees a dislike") {
    auto m = std::make_shared<const FiniteMixture>(std::vector<ItemType>{ItemType::from_string("+")},
                                                   std::vector<double>{1.0});
    Environment env(m, 3);
    OracleRecommender algo(env);
    const RunTrace t = run(env, algo, 50);
    REQUIRE(t.records.size() == 50);
    for (const auto& r : t.records) CHECK(r.feedback == 1);
  }

  TEST_CASE("ledger holds every pair exactly once") {
    auto m = std::make_shared<const UniformCube>(20);
    Environment env(m, 1);
    RandomRecommender algo;
    const RunTrace t = run(env, algo, 30);
    CHECK(env.ledger().size() == 600);
    std::set<std::pair<UserId, ItemId>> pairs;
    for (const auto& r : t.records) pairs.insert({r.user, r.item});
    CHECK(pairs.size() == 600);
  }

  TEST_CASE("zero horizon gives an empty trace") {
    auto m = std::make_shared<const UniformCube>(5);
    Environment env(m, 0);
    RandomRecommender algo;
    CHECK(run(env, algo, 0).records.empty());
  }

  TEST_CASE("steps are numbered and feedback matches hidden preferences") {
    auto m = std::make_shared<const UniformCube>(7);
    Environment env(m, 8);
    RandomRecommender algo;
    const RunTrace t = run(env, algo, 10);
    for (std::size_t k = 0; k < t.records.size(); ++k) {
      CHECK(t.records[k].t == k + 1);
      CHECK(t.records[k].feedback == env.preference(t.records[k].user, t.records[k].item));
    }
  }

  TEST_CASE("repeated recommendation is a protocol violation") {
    auto m = std::make_shared<const UniformCube>(1);
    Environment env(m, 0);
    Stubborn algo;
    CHECK_NOTHROW(step(env, algo));
    CHECK_THROWS_AS(step(env, algo), ProtocolViolation);
  }

  TEST_CASE("same seed reproduces the trace byte for byte") {
    const auto cm = make_cluster_measure(4, 60, 0.15, 1, 0);
    for (const char* which : {"random", "item_item", "user_user"}) {
      auto go = [&](std::uint64_t seed) {
        Environment env(cm.measure, seed);
        std::unique_ptr<Recommender> algo;
        if (std::string(which) == "random") algo = std::make_unique<RandomRecommender>();
        if (std::string(which) == "item_item") {
          algo = std::make_unique<ItemItemRecommender>(TheoryConstants(1, 0.15, 60, small_epochs()), cm.measure, seed);
        }
        if (std::string(which) == "user_user") algo = std::make_unique<UserUserRecommender>(60, 4, 0.15, seed);
        return csv(run(env, *algo, 40));
      };
      CHECK(go(11) == go(11));
      CHECK(go(11) != go(12));
    }
  }

  TEST_CASE("arrivals are uniform") {
    auto m = std::make_shared<const UniformCube>(10);
    Environment env(m, 77);
    std::vector<int> counts(10, 0);
    for (int s = 0; s < 100000; ++s) ++counts[env.draw_user()];
    const double sd = std::sqrt(100000 * 0.1 * 0.9);
    for (int c : counts) CHECK(std::abs(c - 10000) <= 4 * sd);
  }

  TEST_CASE("no pair repeats under every recommender") {
    const auto m = make_user_cluster_measure(4, 80, 0.1, 2);
    for (int which = 0; which < 4; ++which) {
      Environment env(m, 40 + which);
      std::unique_ptr<Recommender> algo;
      switch (which) {
        case 0: algo = std::make_unique<RandomRecommender>(); break;
        case 1: algo = std::make_unique<OracleRecommender>(env); break;
        case 2: algo = std::make_unique<UserUserRecommender>(80, 4, 0.1, 5); break;
        default: algo = std::make_unique<ItemItemRecommender>(TheoryConstants(1, 0.1, 80, small_epochs()), m, 5);
      }
      std::set<std::pair<UserId, ItemId>> pairs;
      run(env, *algo, 300, [&](const TraceRecord& r) { CHECK(pairs.insert({r.user, r.item}).second); });
      CHECK(env.ledger().size() == 300 * 80);
    }
  }

  TEST_CASE("interleaved construction equals the straight-line construction") {
    // N=100 keeps the no-repeat replay rule active: users who already rated
    // a reference item are served the next item they still need.
    const auto cm = make_cluster_measure(4, 100, 0.15, 1, 1);
    const TheoryConstants k(1, 0.15, 100, small_epochs());
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      Environment env(cm.measure, seed);
      ItemItemRecommender algo(k, cm.measure, seed);
      int checked = 0;
      const PartitionBuilder* seen = nullptr;
      for (std::uint64_t s = 0; s < 400000 && checked < 2; ++s) {
        step(env, algo);
        if (algo.installed_builder() == seen) continue;
        seen = algo.installed_builder();
        const PartitionBuilder& b = *algo.installed_builder();
        const auto ref = reference_partition(k, b.request(), *cm.measure,
                                             derive_seed(seed, 100 + static_cast<std::uint64_t>(checked + 1)),
                                             logged_users(b));
        CHECK(ref.users_used == b.sample_log().size());
        CHECK(ref.net == net_by_draw(b));
        CHECK(ref.blocks == blocks_by_draw(b));
        CHECK(ref.discarded == b.partition().discarded);
        ++checked;
      }
      CHECK(checked == 2);
    }
  }

  TEST_CASE("replay detects flipped feedback and truncation") {
    const auto cm = make_cluster_measure(4, 40, 0.15, 1, 0);
    Environment env(cm.measure, 5);
    RandomRecommender algo;
    const RunTrace fresh = run(env, algo, 10);
    CHECK(compare_traces(fresh, fresh).identical);

    RunTrace flipped = fresh;
    flipped.records[123].feedback = static_cast<Rating>(-flipped.records[123].feedback);
    const auto rep = compare_traces(flipped, fresh);
    CHECK_FALSE(rep.identical);
    CHECK(rep.first_divergence == fresh.records[123].t);
    CHECK(rep.reason == "feedback differs");

    RunTrace cut = fresh;
    cut.records.resize(250);
    const auto rep2 = compare_traces(cut, fresh);
    CHECK_FALSE(rep2.identical);
    CHECK(rep2.first_divergence == 251);
  }

  TEST_CASE("trace CSV round trip") {
    auto m = std::make_shared<const UniformCube>(6);
    Environment env(m, 2);
    RandomRecommender algo;
    const RunTrace t = run(env, algo, 5);
    std::istringstream in(csv(t));
    const RunTrace back = read_trace_csv(in, 6);
    CHECK(back.records == t.records);
    std::istringstream bad("t,user,item,feedback,phase,epoch\n1,0,0,2,explore,0\n");
    CHECK_THROWS_AS(read_trace_csv(bad, 6), DataError);
    std::istringstream noheader("1,0,0,1,explore,0\n");
    CHECK_THROWS_AS(read_trace_csv(noheader, 6), DataError);
  }
}
