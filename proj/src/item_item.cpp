#include <numeric>

#include "cfsim/algorithms.hpp"

namespace cfsim {

EpochSchedule epoch_schedule(const TheoryConstants& constants, int tau) {
  return EpochSchedule{constants.eps(tau), constants.m(tau), constants.duration(tau)};
}

ItemItemRecommender::ItemItemRecommender(const TheoryConstants& constants, std::shared_ptr<const ItemMeasure> measure,
                                         std::uint64_t seed, ItemItemOptions options)
    : constants_(constants),
      measure_(std::move(measure)),
      seed_(seed),
      options_(options),
      rng_(derive_seed(seed, 7)),
      cursors_(constants.n_users()) {
  if (!measure_) throw ParameterError("item-item needs a measure to draw new items from");
  if (measure_->n_users() != constants.n_users()) throw DimensionError("constants and measure disagree on N");
}

void ItemItemRecommender::start_builder(int tau, const Ledger& ledger) {
  const double eps = constants_.eps(tau);
  BuildRequest req{BuildRequest::Kind::Partition, constants_.m(tau), eps, eps};
  builder_ = std::make_unique<PartitionBuilder>(constants_, req, measure_, derive_seed(seed_, 100 + static_cast<std::uint64_t>(tau)), ledger);
}

void ItemItemRecommender::install_partition(const Ledger& ledger) {
  partition_ = builder_->partition();
  installed_ = std::move(builder_);
  ++generation_;
  finishing_ = false;
  explore_prob_ = constants_.eps(tau_);
  start_builder(tau_ + 1, ledger);
}

std::optional<ItemItemRecommender::ExploitInfo> ItemItemRecommender::last_exploit(UserId u) const {
  const Cursor& c = cursors_.at(u);
  if (c.last != Kind::Probe && c.last != Kind::Queue) return std::nullopt;
  return ExploitInfo{c.last_block, c.last == Kind::Queue};
}

Recommendation ItemItemRecommender::recommend(UserId u, const Ledger& ledger, Environment& items) {
  if (!builder_) start_builder(1, ledger);
  Cursor& c = cursors_.at(u);
  if (c.generation != generation_) {
    c = Cursor{};
    c.generation = generation_;
  }
  if (tau_ == 0 || finishing_) {
    if (!builder_->finished()) {
      if (auto it = builder_->serve(u, items)) {
        c.last = Kind::Explore;
        return {*it, Phase::Explore};
      }
    }
    if (finishing_) {
      if (auto e = exploit(u, ledger)) return *e;
    }
    c.last = Kind::Fallback;
    return {items.draw_fresh(), Phase::Fallback};
  }
  std::bernoulli_distribution coin(std::min(1.0, explore_prob_));
  if (coin(rng_) && !builder_->finished()) {
    if (auto it = builder_->serve(u, items)) {
      c.last = Kind::Explore;
      return {*it, Phase::Explore};
    }
  }
  if (auto e = exploit(u, ledger)) return *e;
  c.last = Kind::Fallback;
  return {items.draw_fresh(), Phase::Fallback};
}

std::optional<Recommendation> ItemItemRecommender::exploit(UserId u, const Ledger& ledger) {
  Cursor& c = cursors_[u];
  const auto& blocks = partition_.blocks;
  if (blocks.empty()) return std::nullopt;
  if (c.active >= 0) {
    const auto& blk = blocks[static_cast<std::size_t>(c.active)];
    while (c.pos < blk.size()) {
      const ItemId it = blk[c.pos++];
      if (!ledger.consumed(u, it)) {
        c.last = Kind::Queue;
        c.last_block = static_cast<std::size_t>(c.active);
        return Recommendation{it, Phase::Exploit};
      }
    }
    c.active = -1;
  }
  std::vector<ItemId> open;
  auto probe = [&](std::size_t b) -> std::optional<Recommendation> {
    open.clear();
    for (ItemId it : blocks[b]) {
      if (!ledger.consumed(u, it)) open.push_back(it);
    }
    if (open.empty()) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
    c.last = Kind::Probe;
    c.last_block = b;
    return Recommendation{open[pick(rng_)], Phase::Exploit};
  };
  if (options_.sample_with_replacement) {
    std::uniform_int_distribution<std::size_t> pick(0, blocks.size() - 1);
    for (std::size_t attempt = 0; attempt < 4 * blocks.size(); ++attempt) {
      if (auto r = probe(pick(rng_))) return r;
    }
    return std::nullopt;
  }
  if (!c.blocks_listed) {
    c.unsampled.resize(blocks.size());
    std::iota(c.unsampled.begin(), c.unsampled.end(), 0U);
    c.blocks_listed = true;
  }
  while (!c.unsampled.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, c.unsampled.size() - 1);
    const std::size_t k = pick(rng_);
    const std::uint32_t b = c.unsampled[k];
    c.unsampled[k] = c.unsampled.back();
    c.unsampled.pop_back();
    if (auto r = probe(b)) return r;
  }
  return std::nullopt;
}

void ItemItemRecommender::observe(UserId u, ItemId i, Rating r, const Ledger& ledger) {
  Cursor& c = cursors_[u];
  if (c.last == Kind::Explore) {
    builder_->feedback(u, i, r);
  } else if (c.last == Kind::Probe && r > 0) {
    c.active = static_cast<std::int64_t>(c.last_block);
    c.pos = 0;
  }
  if (tau_ == 0) {
    if (builder_->finished()) {
      tau_ = 1;
      steps_left_ = constants_.epoch_steps(1);
      install_partition(ledger);
    }
    return;
  }
  if (steps_left_ > 0) --steps_left_;
  if (finishing_ && builder_->finished()) install_partition(ledger);
  if (steps_left_ > 0) return;
  // epoch boundary
  if (finishing_) {
    steps_left_ = constants_.epoch_steps(tau_);
    return;
  }
  ++tau_;
  steps_left_ = constants_.epoch_steps(tau_);
  if (builder_->finished()) {
    install_partition(ledger);
  } else if (options_.boundary == BoundaryPolicy::FinishAtBoundary) {
    ++late_partitions_;
    finishing_ = true;
  } else {
    ++late_partitions_;
    ++generation_;
    explore_prob_ = constants_.eps(tau_);
    start_builder(tau_ + 1, ledger);
  }
}

}  // namespace cfsim
