#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "cfsim/itemspace.hpp"

namespace cfsim::testing {

// Standard error of a Binomial proportion estimate.
inline double binomial_se(double p, std::size_t n) { return std::sqrt(p * (1 - p) / static_cast<double>(n)); }

// Two-sided Chernoff deviation: P(|X/n - p| >= t) <= 2 exp(-2 n t^2).
inline double chernoff_tail(std::size_t n, double t) { return 2 * std::exp(-2.0 * static_cast<double>(n) * t * t); }

// Type liked exactly by users [lo, hi).
inline ItemType liked_range(std::size_t n, std::size_t lo, std::size_t hi) {
  ItemType t(n);
  for (std::size_t u = lo; u < hi; ++u) t.set(static_cast<UserId>(u), true);
  return t;
}

// K types over K*block users, type k liked by block k only: every pair sits at
// distance 2/K.
inline std::shared_ptr<const FiniteMixture> disjoint_blocks(std::size_t k, std::size_t block) {
  std::vector<ItemType> types;
  for (std::size_t i = 0; i < k; ++i) types.push_back(liked_range(k * block, i * block, (i + 1) * block));
  return std::make_shared<const FiniteMixture>(types, std::vector<double>(k, 1.0 / static_cast<double>(k)));
}


// Four clusters whose centers sit far apart, each holding four leaves close
// to their center. Leaf k belongs to cluster k / 4.
inline std::shared_ptr<const FiniteMixture> separated_clusters(std::uint64_t seed, std::size_t n_users = 200) {
  HierarchicalSpec spec;
  spec.n_users = n_users;
  spec.branching = {4, 4};
  spec.flip_radii = {0.3, 0.02};
  spec.like_fraction = 0.5;
  spec.seed = seed;
  return expand_hierarchy(spec);
}

inline std::size_t cluster_of(std::size_t leaf) { return leaf / 4; }

}  // namespace cfsim::testing
