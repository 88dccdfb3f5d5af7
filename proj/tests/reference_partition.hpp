#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cfsim/constants.hpp"
#include "cfsim/itemspace.hpp"
#include "cfsim/similarity.hpp"

namespace cfsim::testing {

// Straight-line net and partition construction driven by an explicit user
// stream. Items are named by draw index.
struct ReferencePartition {
  std::vector<std::size_t> net;
  std::vector<std::vector<std::size_t>> blocks;
  std::size_t discarded = 0;
  std::size_t users_used = 0;
};

inline ReferencePartition reference_partition(const TheoryConstants& k, const BuildRequest& req,
                                              const ItemMeasure& measure, std::uint64_t seed,
                                              const std::vector<UserId>& users) {
  Rng rng(seed);
  std::vector<std::shared_ptr<const ItemType>> drawn;
  std::size_t next = 0;
  auto draw = [&] {
    drawn.push_back(measure.sample(rng));
    return drawn.size() - 1;
  };
  auto run_test = [&](std::size_t probe, const std::vector<std::size_t>& refs, double eps, double delta) {
    const std::uint64_t q = k.q(eps, delta);
    std::vector<std::uint64_t> dis(refs.size(), 0);
    for (std::uint64_t s = 0; s < q; ++s) {
      if (next >= users.size()) throw std::runtime_error("user stream exhausted");
      const UserId u = users[next++];
      for (std::size_t r = 0; r < refs.size(); ++r) dis[r] += drawn[refs[r]]->likes(u) != drawn[probe]->likes(u);
    }
    std::vector<std::size_t> accepted;
    for (std::size_t r = 0; r < refs.size(); ++r) {
      if (static_cast<double>(dis[r]) / static_cast<double>(q) < 0.9 * eps) accepted.push_back(r);
    }
    return accepted;
  };

  ReferencePartition out;
  const bool net_only = req.kind == BuildRequest::Kind::NetOnly;
  if (!net_only && req.m == 0) return out;
  const double ne = net_only ? req.eps : req.eps / 2;
  const double nd = net_only ? req.delta : req.delta / 2;
  const std::uint64_t max_size = k.max_size(ne);
  const std::uint64_t max_wait = k.max_wait(ne, nd);
  const double dp = k.delta_prime(ne, nd);

  std::uint64_t count = 0;
  for (;;) {
    const std::size_t i = draw();
    if (out.net.empty() || run_test(i, out.net, ne, dp).empty()) {
      out.net.push_back(i);
      count = 0;
    } else {
      ++count;
    }
    if (!(count <= max_wait && out.net.size() < max_size)) break;
  }
  if (net_only) {
    out.users_used = next;
    return out;
  }

  const double ae = 0.6 * req.eps;
  const double ad = req.delta / (4.0 * static_cast<double>(req.m) * static_cast<double>(out.net.size()));
  std::vector<std::size_t> sample;
  for (std::uint64_t s = 0; s < req.m; ++s) sample.push_back(draw());
  std::vector<std::vector<std::size_t>> raw(out.net.size());
  for (std::size_t i : sample) {
    const auto acc = run_test(i, out.net, ae, ad);
    if (acc.empty()) {
      ++out.discarded;
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, acc.size() - 1);
    raw[acc[pick(rng)]].push_back(i);
  }
  const auto cap = static_cast<std::size_t>(1.0 / req.eps + 1e-9);
  for (const auto& b : raw) {
    if (b.empty()) continue;
    const std::size_t pieces = b.size() <= cap ? 1 : (b.size() + cap - 1) / cap;
    std::size_t at = 0;
    for (std::size_t p = 0; p < pieces; ++p) {
      const std::size_t len = b.size() / pieces + (p < b.size() % pieces ? 1 : 0);
      out.blocks.emplace_back(b.begin() + static_cast<std::ptrdiff_t>(at), b.begin() + static_cast<std::ptrdiff_t>(at + len));
      at += len;
    }
  }
  out.users_used = next;
  return out;
}

// Users of a builder's completed samples, in completion order.
inline std::vector<UserId> logged_users(const PartitionBuilder& b) {
  std::vector<UserId> users;
  for (const auto& rec : b.sample_log()) users.push_back(rec.user);
  return users;
}

// Builder blocks renamed to draw indices.
inline std::vector<std::vector<std::size_t>> blocks_by_draw(const PartitionBuilder& b) {
  std::vector<std::vector<std::size_t>> out;
  const auto& drawn = b.drawn();
  for (const auto& blk : b.partition().blocks) {
    std::vector<std::size_t> named;
    for (ItemId it : blk) {
      named.push_back(static_cast<std::size_t>(std::find(drawn.begin(), drawn.end(), it) - drawn.begin()));
    }
    out.push_back(named);
  }
  return out;
}

inline std::vector<std::size_t> net_by_draw(const PartitionBuilder& b) {
  std::vector<std::size_t> out;
  const auto& drawn = b.drawn();
  for (ItemId it : b.net().members) {
    out.push_back(static_cast<std::size_t>(std::find(drawn.begin(), drawn.end(), it) - drawn.begin()));
  }
  return out;
}

}  // namespace cfsim::testing
