#include <stdexcept>

#include "cfsim/similarity.hpp"

namespace cfsim {

TypeOracle::TypeOracle(std::size_t n_users, std::uint64_t seed, std::uint64_t query_budget)
    : n_(n_users), rng_(seed), budget_(query_budget) {
  if (n_users == 0) throw ParameterError("oracle needs at least one user");
}

ItemId TypeOracle::introduce(std::shared_ptr<const ItemType> type) {
  if (type->n_users() != n_) throw DimensionError("item type length differs from the user count");
  types_.push_back(std::move(type));
  return static_cast<ItemId>(types_.size() - 1);
}

Rating TypeOracle::query(UserId u, ItemId i) {
  if (budget_ != 0 && queries_ >= budget_) throw BudgetError("oracle query budget exhausted", queries_);
  ++queries_;
  return types_.at(i)->rating(u);
}

UserId TypeOracle::sample_user() {
  std::uniform_int_distribution<UserId> pick(0, static_cast<UserId>(n_ - 1));
  return pick(rng_);
}

bool similar(ItemId i, ItemId j, double eps, double delta, const TheoryConstants& k, FeedbackOracle& oracle) {
  const std::uint64_t q = k.q(eps, delta);
  std::uint64_t dis = 0;
  for (std::uint64_t s = 0; s < q; ++s) {
    const UserId u = oracle.sample_user();
    if (oracle.query(u, i) != oracle.query(u, j)) ++dis;
  }
  return similar_verdict(dis, q, eps);
}

nlohmann::json Net::to_json() const {
  return {{"members", members}, {"eps", eps}, {"delta", delta}, {"max_size", max_size}, {"max_wait", max_wait}};
}

std::size_t Partition::item_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.size();
  return n;
}

nlohmann::json Partition::to_json() const {
  return {{"eps", eps},         {"delta", delta}, {"M", m}, {"net", net.to_json()},
          {"discarded", discarded}, {"blocks", blocks}};
}

namespace {

class OracleView final : public RatingView {
 public:
  explicit OracleView(FeedbackOracle& oracle) : oracle_(oracle) {}
  std::optional<Rating> known(UserId u, ItemId i) const override { return oracle_.query(u, i); }

 private:
  FeedbackOracle& oracle_;
};

void drive(PartitionBuilder& builder, FeedbackOracle& oracle) {
  while (!builder.finished()) {
    const UserId u = oracle.sample_user();
    if (builder.serve(u, oracle)) throw std::logic_error("oracle-backed builder requested a fresh rating");
  }
}

}  // namespace

Net get_net(double eps, double delta, const TheoryConstants& constants, std::shared_ptr<const ItemMeasure> measure,
            FeedbackOracle& oracle, std::uint64_t seed) {
  OracleView view(oracle);
  BuildRequest req{BuildRequest::Kind::NetOnly, 0, eps, delta};
  PartitionBuilder builder(constants, req, std::move(measure), seed, view);
  drive(builder, oracle);
  return builder.net();
}

Partition make_partition(std::uint64_t m, double eps, double delta, const TheoryConstants& constants,
                         std::shared_ptr<const ItemMeasure> measure, FeedbackOracle& oracle, std::uint64_t seed) {
  OracleView view(oracle);
  BuildRequest req{BuildRequest::Kind::Partition, m, eps, delta};
  PartitionBuilder builder(constants, req, std::move(measure), seed, view);
  try {
    drive(builder, oracle);
  } catch (const BudgetError& e) {
    throw BudgetError("partition construction ran out of oracle budget", builder.tests_completed());
  }
  return builder.partition();
}

}  // namespace cfsim
