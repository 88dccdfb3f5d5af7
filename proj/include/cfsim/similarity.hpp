#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "absl/container/flat_hash_set.h"
#include "cfsim/common.hpp"
#include "cfsim/constants.hpp"
#include "cfsim/itemspace.hpp"
#include "json.hpp"

namespace cfsim {

// Ratings already known for (user, item); nullopt when the user has not
// rated the item.
class RatingView {
 public:
  virtual ~RatingView() = default;
  virtual std::optional<Rating> known(UserId u, ItemId i) const = 0;
};

// Materializes items drawn from the measure.
class ItemSink {
 public:
  virtual ~ItemSink() = default;
  virtual ItemId introduce(std::shared_ptr<const ItemType> type) = 0;
};

// Query access to the preference matrix plus a uniform user sampler.
class FeedbackOracle : public ItemSink {
 public:
  virtual Rating query(UserId u, ItemId i) = 0;
  virtual UserId sample_user() = 0;
};

// Oracle backed by the true item types. Counts queries and raises
// BudgetError once an optional budget is exceeded.
class TypeOracle final : public FeedbackOracle {
 public:
  TypeOracle(std::size_t n_users, std::uint64_t seed, std::uint64_t query_budget = 0);

  ItemId introduce(std::shared_ptr<const ItemType> type) override;
  Rating query(UserId u, ItemId i) override;
  UserId sample_user() override;

  const ItemType& type(ItemId i) const { return *types_.at(i); }
  std::size_t item_count() const { return types_.size(); }
  std::uint64_t queries() const { return queries_; }
  std::size_t n_users() const { return n_; }

 private:
  std::size_t n_;
  Rng rng_;
  std::uint64_t budget_;
  std::uint64_t queries_ = 0;
  std::vector<std::shared_ptr<const ItemType>> types_;
};

bool similar(ItemId i, ItemId j, double eps, double delta, const TheoryConstants& k, FeedbackOracle& oracle);

// Decision rule shared by every similarity test: not similar iff the mean
// disagreement reaches 0.9 eps.
inline bool similar_verdict(std::uint64_t disagreements, std::uint64_t samples, double eps) {
  return static_cast<double>(disagreements) / static_cast<double>(samples) < 0.9 * eps;
}

struct Net {
  std::vector<ItemId> members;
  double eps = 0;
  double delta = 0;
  std::uint64_t max_size = 0;
  std::uint64_t max_wait = 0;

  nlohmann::json to_json() const;
};

struct Partition {
  std::vector<std::vector<ItemId>> blocks;
  double eps = 0;
  double delta = 0;
  std::uint64_t m = 0;
  Net net;
  // items drawn for assignment that no net member accepted
  std::size_t discarded = 0;

  std::size_t item_count() const;
  nlohmann::json to_json() const;
};

// Splits a block larger than 1/eps into balanced contiguous pieces of at most
// floor(1/eps) items.
std::vector<std::vector<ItemId>> split_block(const std::vector<ItemId>& block, double eps);

struct BuildRequest {
  enum class Kind { NetOnly, Partition };
  Kind kind = Kind::Partition;
  std::uint64_t m = 0;
  double eps = 0.1;
  double delta = 0.1;
};

// One arrival's contribution to a similarity test.
struct SampleRecord {
  std::uint64_t test;
  UserId user;
};

// Resumable net and partition construction. Each test compares one probe
// item against every current net member using the same sampled users; a
// sample is complete once its user has rated the probe and all references.
// Arrivals advance at most one sample each and get back the item they must
// rate next, if any.
class PartitionBuilder {
 public:
  PartitionBuilder(const TheoryConstants& constants, BuildRequest request,
                   std::shared_ptr<const ItemMeasure> measure, std::uint64_t seed, const RatingView& ratings);

  std::optional<ItemId> serve(UserId u, ItemSink& sink);
  void feedback(UserId u, ItemId i, Rating r);

  bool finished() const { return stage_ == Stage::Done; }
  const Net& net() const { return net_; }
  const Partition& partition() const { return partition_; }
  // Items introduced by this builder, in draw order.
  const std::vector<ItemId>& drawn() const { return drawn_; }
  const std::vector<SampleRecord>& sample_log() const { return log_; }
  std::uint64_t tests_completed() const { return tests_completed_; }
  const BuildRequest& request() const { return request_; }

 private:
  enum class Stage { Net, Assign, Done };

  struct Test {
    ItemId probe = 0;
    std::vector<ItemId> refs;
    std::uint64_t q = 0;
    double eps = 0;
    std::uint64_t completed = 0;
    std::vector<std::uint64_t> disagreements;
    absl::flat_hash_set<UserId> pending;
  };

  void prepare(ItemSink& sink);
  void start_test(ItemId probe, double eps, double delta);
  std::optional<Rating> rating_of(UserId u, ItemId item, std::optional<ItemId> just_rated, Rating r) const;
  // First item u still has to rate for the current test.
  std::optional<ItemId> missing(UserId u, std::optional<ItemId> just_rated, Rating r) const;
  void complete_sample(UserId u, std::optional<ItemId> just_rated, Rating r);
  void finish_test();
  void finish_net();
  void finish_partition();

  TheoryConstants constants_;
  BuildRequest request_;
  std::shared_ptr<const ItemMeasure> measure_;
  Rng rng_;
  const RatingView& ratings_;

  Stage stage_ = Stage::Net;
  bool need_draw_ = true;
  Test test_;
  bool test_active_ = false;

  Net net_;
  double net_eps_ = 0, net_delta_ = 0, net_delta_prime_ = 0;
  std::uint64_t count_ = 0;

  double assign_eps_ = 0, assign_delta_ = 0;
  std::vector<ItemId> assign_items_;
  std::size_t assign_next_ = 0;
  std::vector<std::vector<ItemId>> raw_blocks_;

  Partition partition_;
  std::vector<ItemId> drawn_;
  std::vector<SampleRecord> log_;
  std::uint64_t tests_completed_ = 0;
};

Net get_net(double eps, double delta, const TheoryConstants& constants, std::shared_ptr<const ItemMeasure> measure,
            FeedbackOracle& oracle, std::uint64_t seed);

Partition make_partition(std::uint64_t m, double eps, double delta, const TheoryConstants& constants,
                         std::shared_ptr<const ItemMeasure> measure, FeedbackOracle& oracle, std::uint64_t seed);

}  // namespace cfsim
