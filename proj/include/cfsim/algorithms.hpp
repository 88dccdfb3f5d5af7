#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cfsim/constants.hpp"
#include "cfsim/engine.hpp"
#include "cfsim/similarity.hpp"

namespace cfsim {

struct EpochSchedule {
  double eps;
  std::uint64_t m;
  double duration;
};

EpochSchedule epoch_schedule(const TheoryConstants& constants, int tau);

enum class BoundaryPolicy { FinishAtBoundary, ReusePrevious };

struct ItemItemOptions {
  bool sample_with_replacement = false;
  BoundaryPolicy boundary = BoundaryPolicy::FinishAtBoundary;
};

class ItemItemRecommender final : public Recommender {
 public:
  ItemItemRecommender(const TheoryConstants& constants, std::shared_ptr<const ItemMeasure> measure,
                      std::uint64_t seed, ItemItemOptions options = {});

  std::string name() const override { return "item_item"; }
  Recommendation recommend(UserId u, const Ledger& ledger, Environment& items) override;
  void observe(UserId u, ItemId i, Rating r, const Ledger& ledger) override;
  std::uint32_t epoch() const override { return static_cast<std::uint32_t>(tau_); }

  bool in_cold_start() const { return tau_ == 0; }
  const Partition* current_partition() const { return tau_ == 0 ? nullptr : &partition_; }
  const PartitionBuilder* builder() const { return builder_.get(); }
  // Builder that produced the partition currently exploited.
  const PartitionBuilder* installed_builder() const { return installed_.get(); }
  struct ExploitInfo {
    std::size_t block;
    bool from_queue;
  };
  // Where the user's most recent recommendation came from, if it was an
  // exploit recommendation.
  std::optional<ExploitInfo> last_exploit(UserId u) const;
  // Epochs whose successor partition was not ready at the boundary.
  std::uint32_t late_partitions() const { return late_partitions_; }
  std::uint32_t epochs_started() const { return static_cast<std::uint32_t>(tau_); }

 private:
  enum class Kind : std::uint8_t { None, Explore, Probe, Queue, Fallback };

  struct Cursor {
    std::uint32_t generation = 0;
    bool blocks_listed = false;
    std::vector<std::uint32_t> unsampled;
    std::int64_t active = -1;
    std::size_t pos = 0;
    Kind last = Kind::None;
    std::size_t last_block = 0;
  };

  std::optional<Recommendation> exploit(UserId u, const Ledger& ledger);
  void start_builder(int tau, const Ledger& ledger);
  void install_partition(const Ledger& ledger);

  TheoryConstants constants_;
  std::shared_ptr<const ItemMeasure> measure_;
  std::uint64_t seed_;
  ItemItemOptions options_;
  Rng rng_;

  int tau_ = 0;
  bool finishing_ = false;
  std::uint64_t steps_left_ = 0;
  double explore_prob_ = 1;
  Partition partition_;
  std::uint32_t generation_ = 0;
  std::unique_ptr<PartitionBuilder> builder_;
  std::unique_ptr<PartitionBuilder> installed_;
  std::vector<Cursor> cursors_;
  std::uint32_t late_partitions_ = 0;
};

class RandomRecommender final : public Recommender {
 public:
  std::string name() const override { return "random"; }
  Recommendation recommend(UserId u, const Ledger& ledger, Environment& items) override;
  void observe(UserId, ItemId, Rating, const Ledger&) override {}
};

// Test-only baseline that reads hidden preferences.
class OracleRecommender final : public Recommender {
 public:
  explicit OracleRecommender(const Environment& env);
  std::string name() const override { return "oracle"; }
  Recommendation recommend(UserId u, const Ledger& ledger, Environment& items) override;
  void observe(UserId, ItemId, Rating, const Ledger&) override {}

 private:
  const Environment& env_;
  std::vector<std::size_t> cursor_;
};

// Smallest q with (K-1)/K * (1 - 0.2 nu)^q <= 1/K.
std::uint64_t user_user_threshold(std::size_t k, double nu);

class UserUserRecommender final : public Recommender {
 public:
  UserUserRecommender(std::size_t n_users, std::size_t k, double nu, std::uint64_t seed);

  std::string name() const override { return "user_user"; }
  Recommendation recommend(UserId u, const Ledger& ledger, Environment& items) override;
  void observe(UserId u, ItemId i, Rating r, const Ledger& ledger) override;

  std::uint64_t threshold() const { return q_min_; }
  // True once u has accepted a neighbor of its own and shares a component.
  bool connected(UserId u) const;
  std::size_t accepted_count() const { return accepted_; }

 private:
  UserId find(UserId u) const;
  void merge(UserId a, UserId b);
  void choose_candidate(UserId u, const Ledger& ledger);
  void drop_candidate(UserId u);
  // Applies one co-rating outcome to evaluator w; returns true if w is done
  // with its current candidate.
  bool evidence(UserId w, bool agree);

  std::size_t n_;
  std::uint64_t q_min_;
  Rng rng_;
  mutable std::vector<UserId> parent_;
  std::vector<std::vector<UserId>> members_;
  std::vector<std::vector<ItemId>> liked_;
  std::vector<std::vector<ItemId>> history_;
  std::vector<std::int64_t> candidate_;
  std::vector<std::uint64_t> agree_;
  std::vector<std::size_t> candidate_pos_;
  std::vector<std::size_t> pool_pos_;
  std::vector<std::vector<UserId>> evaluators_;
  // u itself accepted a neighbor; being merged by others is not enough
  std::vector<bool> accepted_self_;
  std::size_t accepted_ = 0;
};

}  // namespace cfsim
