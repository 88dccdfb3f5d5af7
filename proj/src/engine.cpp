#include "cfsim/engine.hpp"

namespace cfsim {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Explore:
      return "explore";
    case Phase::Exploit:
      return "exploit";
    case Phase::Fallback:
      return "fallback";
  }
  return "?";
}

Phase phase_from_name(const std::string& s) {
  if (s == "explore") return Phase::Explore;
  if (s == "exploit") return Phase::Exploit;
  if (s == "fallback") return Phase::Fallback;
  throw DataError("unknown phase '" + s + "'");
}

std::optional<Rating> Ledger::known(UserId u, ItemId i) const {
  auto it = map_.find(key(u, i));
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

bool Ledger::record(UserId u, ItemId i, Rating r) { return map_.emplace(key(u, i), r).second; }

Environment::Environment(std::shared_ptr<const ItemMeasure> measure, std::uint64_t seed)
    : measure_(std::move(measure)), arrivals_(derive_seed(seed, 1)), draws_(derive_seed(seed, 2)) {
  if (!measure_) throw ParameterError("environment needs a measure");
}

ItemId Environment::introduce(std::shared_ptr<const ItemType> type) {
  if (type->n_users() != n_users()) throw DimensionError("item type length differs from the user count");
  items_.push_back(std::move(type));
  return static_cast<ItemId>(items_.size() - 1);
}

ItemId Environment::draw_fresh() { return introduce(measure_->sample(draws_)); }

UserId Environment::draw_user() {
  std::uniform_int_distribution<UserId> pick(0, static_cast<UserId>(n_users() - 1));
  return pick(arrivals_);
}

Rating Environment::deliver(UserId u, ItemId i) {
  if (i >= items_.size()) throw ProtocolViolation("recommended item was never introduced");
  const Rating r = preference(u, i);
  if (!ledger_.record(u, i, r)) {
    throw ProtocolViolation("item " + std::to_string(i) + " recommended twice to user " + std::to_string(u));
  }
  ++clock_;
  if (r < 0) ++dislikes_;
  return r;
}

TraceRecord step(Environment& env, Recommender& algo) {
  const UserId u = env.draw_user();
  const Recommendation rec = algo.recommend(u, env.ledger(), env);
  const Rating r = env.deliver(u, rec.item);
  algo.observe(u, rec.item, r, env.ledger());
  return TraceRecord{env.clock(), u, rec.item, r, rec.phase, algo.epoch()};
}

void run(Environment& env, Recommender& algo, std::uint64_t horizon, const RecordCallback& on_record) {
  const std::uint64_t steps = horizon * env.n_users();
  for (std::uint64_t s = 0; s < steps; ++s) {
    const TraceRecord rec = step(env, algo);
    if (on_record) on_record(rec);
  }
}

RunTrace run(Environment& env, Recommender& algo, std::uint64_t horizon) {
  RunTrace trace;
  trace.n_users = env.n_users();
  trace.records.reserve(horizon * env.n_users());
  run(env, algo, horizon, [&](const TraceRecord& r) { trace.records.push_back(r); });
  return trace;
}

nlohmann::json ReplayReport::to_json() const {
  nlohmann::json j = {{"identical", identical}, {"reason", reason}};
  j["first_divergence"] = first_divergence ? nlohmann::json(*first_divergence) : nlohmann::json(nullptr);
  return j;
}

ReplayReport compare_traces(const RunTrace& recorded, const RunTrace& fresh) {
  ReplayReport rep;
  if (recorded.n_users != fresh.n_users) {
    rep.identical = false;
    rep.first_divergence = 1;
    rep.reason = "user counts differ";
    return rep;
  }
  const std::size_t n = std::min(recorded.records.size(), fresh.records.size());
  for (std::size_t k = 0; k < n; ++k) {
    const auto& a = recorded.records[k];
    const auto& b = fresh.records[k];
    if (a == b) continue;
    rep.identical = false;
    rep.first_divergence = b.t;
    if (a.t != b.t) rep.reason = "step counter differs";
    else if (a.user != b.user) rep.reason = "arriving user differs";
    else if (a.item != b.item) rep.reason = "recommended item differs";
    else if (a.feedback != b.feedback) rep.reason = "feedback differs";
    else if (a.phase != b.phase) rep.reason = "phase differs";
    else rep.reason = "epoch differs";
    return rep;
  }
  if (recorded.records.size() != fresh.records.size()) {
    rep.identical = false;
    rep.first_divergence = n + 1;
    rep.reason = recorded.records.size() < fresh.records.size() ? "recorded trace ends early" : "recorded trace is longer";
  }
  return rep;
}

}  // namespace cfsim
