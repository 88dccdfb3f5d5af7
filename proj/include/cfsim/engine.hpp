#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "absl/container/flat_hash_map.h"
#include "cfsim/common.hpp"
#include "cfsim/itemspace.hpp"
#include "cfsim/similarity.hpp"
#include "json.hpp"

namespace cfsim {

inline constexpr const char* kEngineVersion = "cfsim-engine/1";

enum class Phase : std::uint8_t { Explore, Exploit, Fallback };

const char* phase_name(Phase p);
Phase phase_from_name(const std::string& s);

struct TraceRecord {
  std::uint64_t t = 0;
  UserId user = 0;
  ItemId item = 0;
  Rating feedback = 0;
  Phase phase = Phase::Explore;
  std::uint32_t epoch = 0;

  bool operator==(const TraceRecord&) const = default;
};

struct RunTrace {
  std::size_t n_users = 0;
  std::vector<TraceRecord> records;
};

// Every (user, item) pair recommended so far with its feedback.
class Ledger final : public RatingView {
 public:
  std::optional<Rating> known(UserId u, ItemId i) const override;
  bool consumed(UserId u, ItemId i) const { return map_.contains(key(u, i)); }
  // Returns false if the pair was already present.
  bool record(UserId u, ItemId i, Rating r);
  std::size_t size() const { return map_.size(); }

 private:
  static std::uint64_t key(UserId u, ItemId i) { return (static_cast<std::uint64_t>(i) << 32) | u; }
  absl::flat_hash_map<std::uint64_t, Rating> map_;
};

class Environment final : public ItemSink {
 public:
  Environment(std::shared_ptr<const ItemMeasure> measure, std::uint64_t seed);

  std::size_t n_users() const { return measure_->n_users(); }
  const ItemMeasure& measure() const { return *measure_; }
  std::shared_ptr<const ItemMeasure> measure_ptr() const { return measure_; }

  ItemId introduce(std::shared_ptr<const ItemType> type) override;
  ItemId draw_fresh();
  std::size_t item_count() const { return items_.size(); }

  const Ledger& ledger() const { return ledger_; }
  std::uint64_t clock() const { return clock_; }
  std::uint64_t dislikes() const { return dislikes_; }

  UserId draw_user();
  // Records a recommendation and returns its feedback.
  Rating deliver(UserId u, ItemId i);

  // Hidden preferences; only the engine and the oracle baseline read these.
  Rating preference(UserId u, ItemId i) const { return items_[i]->rating(u); }
  const ItemType& item_type(ItemId i) const { return *items_.at(i); }

 private:
  std::shared_ptr<const ItemMeasure> measure_;
  std::vector<std::shared_ptr<const ItemType>> items_;
  Ledger ledger_;
  Rng arrivals_;
  Rng draws_;
  std::uint64_t clock_ = 0;
  std::uint64_t dislikes_ = 0;
};

struct Recommendation {
  ItemId item;
  Phase phase;
};

class Recommender {
 public:
  virtual ~Recommender() = default;
  virtual std::string name() const = 0;
  virtual Recommendation recommend(UserId u, const Ledger& ledger, Environment& items) = 0;
  virtual void observe(UserId u, ItemId i, Rating r, const Ledger& ledger) = 0;
  virtual std::uint32_t epoch() const { return 0; }
};

TraceRecord step(Environment& env, Recommender& algo);

using RecordCallback = std::function<void(const TraceRecord&)>;

// Runs horizon * N steps, handing each record to the callback.
void run(Environment& env, Recommender& algo, std::uint64_t horizon, const RecordCallback& on_record);
RunTrace run(Environment& env, Recommender& algo, std::uint64_t horizon);

struct ReplayReport {
  bool identical = true;
  std::optional<std::uint64_t> first_divergence;
  std::string reason;

  nlohmann::json to_json() const;
};

ReplayReport compare_traces(const RunTrace& recorded, const RunTrace& fresh);

void write_trace_csv(const RunTrace& trace, std::ostream& out);
RunTrace read_trace_csv(std::istream& in, std::size_t n_users);

}  // namespace cfsim
