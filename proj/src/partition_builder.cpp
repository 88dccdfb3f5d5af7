#include <algorithm>

#include "cfsim/similarity.hpp"

namespace cfsim {

PartitionBuilder::PartitionBuilder(const TheoryConstants& constants, BuildRequest request,
                                   std::shared_ptr<const ItemMeasure> measure, std::uint64_t seed,
                                   const RatingView& ratings)
    : constants_(constants), request_(request), measure_(std::move(measure)), rng_(seed), ratings_(ratings) {
  if (!(request_.eps > 0 && request_.eps <= 1)) throw ParameterError("eps must lie in (0, 1]");
  if (!(request_.delta > 0 && request_.delta < 1)) throw ParameterError("delta must lie in (0, 1)");
  if (!measure_) throw ParameterError("builder needs a measure");
  const bool net_only = request_.kind == BuildRequest::Kind::NetOnly;
  net_eps_ = net_only ? request_.eps : request_.eps / 2;
  net_delta_ = net_only ? request_.delta : request_.delta / 2;
  net_.eps = net_eps_;
  net_.delta = net_delta_;
  net_.max_size = constants_.max_size(net_eps_);
  net_.max_wait = constants_.max_wait(net_eps_, net_delta_);
  net_delta_prime_ = constants_.delta_prime(net_eps_, net_delta_);
  partition_.eps = request_.eps;
  partition_.delta = request_.delta;
  partition_.m = request_.m;
  if (!net_only && request_.m == 0) stage_ = Stage::Done;
}

void PartitionBuilder::prepare(ItemSink& sink) {
  while (need_draw_ && stage_ == Stage::Net) {
    const ItemId id = sink.introduce(measure_->sample(rng_));
    drawn_.push_back(id);
    if (net_.members.empty()) {
      net_.members.push_back(id);
      count_ = 0;
      if (!(count_ <= net_.max_wait && net_.members.size() < net_.max_size)) {
        need_draw_ = false;
        finish_net();
      }
      continue;
    }
    need_draw_ = false;
    start_test(id, net_eps_, net_delta_prime_);
  }
  if (need_draw_ && stage_ == Stage::Assign) {
    need_draw_ = false;
    assign_items_.reserve(request_.m);
    for (std::uint64_t s = 0; s < request_.m; ++s) {
      const ItemId id = sink.introduce(measure_->sample(rng_));
      drawn_.push_back(id);
      assign_items_.push_back(id);
    }
    assign_next_ = 0;
    start_test(assign_items_[0], assign_eps_, assign_delta_);
  }
}

void PartitionBuilder::start_test(ItemId probe, double eps, double delta) {
  test_.probe = probe;
  test_.refs = net_.members;
  test_.eps = eps;
  test_.q = constants_.q(eps, delta);
  test_.completed = 0;
  test_.disagreements.assign(test_.refs.size(), 0);
  test_.pending.clear();
  test_active_ = true;
}

std::optional<Rating> PartitionBuilder::rating_of(UserId u, ItemId item, std::optional<ItemId> just_rated,
                                                  Rating r) const {
  if (just_rated && *just_rated == item) return r;
  return ratings_.known(u, item);
}

std::optional<ItemId> PartitionBuilder::missing(UserId u, std::optional<ItemId> just_rated, Rating r) const {
  for (ItemId ref : test_.refs) {
    if (!rating_of(u, ref, just_rated, r)) return ref;
  }
  if (!rating_of(u, test_.probe, just_rated, r)) return test_.probe;
  return std::nullopt;
}

std::optional<ItemId> PartitionBuilder::serve(UserId u, ItemSink& sink) {
  prepare(sink);
  if (stage_ == Stage::Done || !test_active_) return std::nullopt;
  const bool was_pending = test_.pending.contains(u);
  if (auto need = missing(u, std::nullopt, 0)) {
    if (!was_pending) test_.pending.insert(u);
    return need;
  }
  if (was_pending) test_.pending.erase(u);
  complete_sample(u, std::nullopt, 0);
  return std::nullopt;
}

void PartitionBuilder::feedback(UserId u, ItemId i, Rating r) {
  if (stage_ == Stage::Done || !test_active_ || !test_.pending.contains(u)) return;
  if (missing(u, i, r)) return;
  test_.pending.erase(u);
  complete_sample(u, i, r);
}

void PartitionBuilder::complete_sample(UserId u, std::optional<ItemId> just_rated, Rating r) {
  const Rating p = *rating_of(u, test_.probe, just_rated, r);
  for (std::size_t k = 0; k < test_.refs.size(); ++k) {
    if (*rating_of(u, test_.refs[k], just_rated, r) != p) ++test_.disagreements[k];
  }
  ++test_.completed;
  log_.push_back({tests_completed_, u});
  if (test_.completed >= test_.q) finish_test();
}

void PartitionBuilder::finish_test() {
  ++tests_completed_;
  test_active_ = false;
  test_.pending.clear();
  std::vector<std::size_t> accepted;
  for (std::size_t k = 0; k < test_.refs.size(); ++k) {
    if (similar_verdict(test_.disagreements[k], test_.q, test_.eps)) accepted.push_back(k);
  }
  if (stage_ == Stage::Net) {
    if (accepted.empty()) {
      net_.members.push_back(test_.probe);
      count_ = 0;
    } else {
      ++count_;
    }
    if (count_ <= net_.max_wait && net_.members.size() < net_.max_size) {
      need_draw_ = true;
    } else {
      finish_net();
    }
    return;
  }
  if (accepted.empty()) {
    ++partition_.discarded;
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, accepted.size() - 1);
    raw_blocks_[accepted[pick(rng_)]].push_back(test_.probe);
  }
  ++assign_next_;
  if (assign_next_ == assign_items_.size()) {
    finish_partition();
  } else {
    start_test(assign_items_[assign_next_], assign_eps_, assign_delta_);
  }
}

void PartitionBuilder::finish_net() {
  partition_.net = net_;
  if (request_.kind == BuildRequest::Kind::NetOnly) {
    stage_ = Stage::Done;
    return;
  }
  stage_ = Stage::Assign;
  assign_eps_ = 0.6 * request_.eps;
  assign_delta_ = request_.delta / (4.0 * static_cast<double>(request_.m) * static_cast<double>(net_.members.size()));
  raw_blocks_.assign(net_.members.size(), {});
  need_draw_ = true;
}

void PartitionBuilder::finish_partition() {
  for (const auto& block : raw_blocks_) {
    if (block.empty()) continue;
    for (auto& piece : split_block(block, request_.eps)) partition_.blocks.push_back(std::move(piece));
  }
  raw_blocks_.clear();
  stage_ = Stage::Done;
}

std::vector<std::vector<ItemId>> split_block(const std::vector<ItemId>& block, double eps) {
  const auto cap = std::max<std::size_t>(1, static_cast<std::size_t>(1.0 / eps + 1e-9));
  const std::size_t n = block.size();
  if (n <= cap) return {block};
  const std::size_t pieces = (n + cap - 1) / cap;
  const std::size_t base = n / pieces, extra = n % pieces;
  std::vector<std::vector<ItemId>> out;
  std::size_t at = 0;
  for (std::size_t p = 0; p < pieces; ++p) {
    const std::size_t len = base + (p < extra ? 1 : 0);
    out.emplace_back(block.begin() + static_cast<std::ptrdiff_t>(at), block.begin() + static_cast<std::ptrdiff_t>(at + len));
    at += len;
  }
  return out;
}

}  // namespace cfsim
