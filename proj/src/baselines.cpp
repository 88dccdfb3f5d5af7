#include <algorithm>
#include <cmath>
#include <numeric>

#include "cfsim/algorithms.hpp"

namespace cfsim {

Recommendation RandomRecommender::recommend(UserId, const Ledger&, Environment& items) {
  return {items.draw_fresh(), Phase::Explore};
}

OracleRecommender::OracleRecommender(const Environment& env) : env_(env), cursor_(env.n_users(), 0) {}

Recommendation OracleRecommender::recommend(UserId u, const Ledger& ledger, Environment& items) {
  std::size_t& c = cursor_.at(u);
  while (c < env_.item_count()) {
    const auto it = static_cast<ItemId>(c);
    if (!ledger.consumed(u, it) && env_.preference(u, it) > 0) return {it, Phase::Exploit};
    ++c;
  }
  if (env_.measure().user_like_mass(u) <= 0) {
    throw ImpossibilityError("user " + std::to_string(u) + " likes no item of the measure");
  }
  for (std::size_t attempt = 0; attempt < 10'000'000; ++attempt) {
    const ItemId it = items.draw_fresh();
    if (env_.preference(u, it) > 0) {
      c = it;
      return {it, Phase::Exploit};
    }
  }
  throw ImpossibilityError("no liked item found for user " + std::to_string(u));
}

std::uint64_t user_user_threshold(std::size_t k, double nu) {
  if (!(nu > 0 && nu < 0.5)) throw ParameterError("nu must lie in (0, 1/2)");
  if (k == 0) throw ParameterError("K must be positive");
  if (k <= 2) return 0;
  const double kd = static_cast<double>(k);
  const double keep = 1.0 - 0.2 * nu;
  auto holds = [&](std::uint64_t q) { return (kd - 1) / kd * std::pow(keep, static_cast<double>(q)) <= 1.0 / kd; };
  auto q = static_cast<std::uint64_t>(std::max(0.0, std::ceil(std::log(kd - 1) / -std::log(keep))));
  while (!holds(q)) ++q;
  while (q > 0 && holds(q - 1)) --q;
  return q;
}

UserUserRecommender::UserUserRecommender(std::size_t n_users, std::size_t k, double nu, std::uint64_t seed)
    : n_(n_users),
      q_min_(user_user_threshold(k, nu)),
      rng_(derive_seed(seed, 8)),
      parent_(n_users),
      members_(n_users),
      liked_(n_users),
      history_(n_users),
      candidate_(n_users, -1),
      agree_(n_users, 0),
      candidate_pos_(n_users, 0),
      pool_pos_(n_users, 0),
      evaluators_(n_users),
      accepted_self_(n_users, false) {
  if (n_users == 0) throw ParameterError("need at least one user");
  std::iota(parent_.begin(), parent_.end(), 0U);
  for (UserId u = 0; u < n_users; ++u) members_[u] = {u};
}

UserId UserUserRecommender::find(UserId u) const {
  UserId root = u;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[u] != root) {
    const UserId next = parent_[u];
    parent_[u] = root;
    u = next;
  }
  return root;
}

bool UserUserRecommender::connected(UserId u) const { return accepted_self_[u] && members_[find(u)].size() > 1; }

void UserUserRecommender::merge(UserId a, UserId b) {
  UserId ra = find(a), rb = find(b);
  if (ra == rb) return;
  if (members_[ra].size() < members_[rb].size()) std::swap(ra, rb);
  for (UserId m : members_[rb]) pool_pos_[m] = 0;
  parent_[rb] = ra;
  members_[ra].insert(members_[ra].end(), members_[rb].begin(), members_[rb].end());
  liked_[ra].insert(liked_[ra].end(), liked_[rb].begin(), liked_[rb].end());
  members_[rb].clear();
  members_[rb].shrink_to_fit();
  liked_[rb].clear();
  liked_[rb].shrink_to_fit();
  ++accepted_;
}

void UserUserRecommender::drop_candidate(UserId u) {
  if (candidate_[u] < 0) return;
  auto& ev = evaluators_[static_cast<std::size_t>(candidate_[u])];
  ev.erase(std::find(ev.begin(), ev.end(), u));
  candidate_[u] = -1;
}

bool UserUserRecommender::evidence(UserId w, bool agree) {
  if (!agree) {
    drop_candidate(w);
    return true;
  }
  if (++agree_[w] >= q_min_) {
    const auto v = static_cast<UserId>(candidate_[w]);
    drop_candidate(w);
    accepted_self_[w] = true;
    merge(w, v);
    return true;
  }
  return false;
}

void UserUserRecommender::choose_candidate(UserId u, const Ledger& ledger) {
  if (n_ < 2) return;
  std::uniform_int_distribution<UserId> pick(0, static_cast<UserId>(n_ - 2));
  UserId v = pick(rng_);
  if (v >= u) ++v;
  candidate_[u] = v;
  agree_[u] = 0;
  candidate_pos_[u] = 0;
  evaluators_[v].push_back(u);
  if (q_min_ == 0) {
    drop_candidate(u);
    accepted_self_[u] = true;
    merge(u, v);
    return;
  }
  for (ItemId it : history_[u]) {
    const auto rv = ledger.known(v, it);
    if (!rv) continue;
    if (evidence(u, *rv == *ledger.known(u, it))) return;
  }
}

Recommendation UserUserRecommender::recommend(UserId u, const Ledger& ledger, Environment& items) {
  for (int tries = 0; tries < 8 && !connected(u) && candidate_[u] < 0; ++tries) choose_candidate(u, ledger);
  if (connected(u)) {
    if (candidate_[u] >= 0) drop_candidate(u);
    const auto& pool = liked_[find(u)];
    while (pool_pos_[u] < pool.size()) {
      const ItemId it = pool[pool_pos_[u]++];
      if (!ledger.consumed(u, it)) return {it, Phase::Exploit};
    }
    return {items.draw_fresh(), Phase::Fallback};
  }
  if (candidate_[u] >= 0) {
    const auto& hist = history_[static_cast<std::size_t>(candidate_[u])];
    while (candidate_pos_[u] < hist.size()) {
      const ItemId it = hist[candidate_pos_[u]++];
      if (!ledger.consumed(u, it)) return {it, Phase::Explore};
    }
  }
  return {items.draw_fresh(), Phase::Explore};
}

void UserUserRecommender::observe(UserId u, ItemId i, Rating r, const Ledger& ledger) {
  history_[u].push_back(i);
  if (r > 0) liked_[find(u)].push_back(i);
  if (!connected(u) && candidate_[u] >= 0) {
    if (auto rv = ledger.known(static_cast<UserId>(candidate_[u]), i)) evidence(u, *rv == r);
  }
  if (evaluators_[u].empty()) return;
  const std::vector<UserId> evals = evaluators_[u];
  for (UserId w : evals) {
    if (candidate_[w] != static_cast<std::int64_t>(u) || connected(w)) continue;
    if (auto rw = ledger.known(w, i)) evidence(w, *rw == r);
  }
}

}  // namespace cfsim
