#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfsim/common.hpp"
#include "json.hpp"

namespace cfsim {

// Column of the preference matrix: which users like an item.
class ItemType {
 public:
  ItemType() = default;
  explicit ItemType(std::size_t n_users);
  // Bits past n_users are cleared.
  ItemType(std::size_t n_users, std::vector<std::uint64_t> words);

  static ItemType from_string(std::string_view s);
  std::string to_string() const;

  std::size_t n_users() const { return n_; }
  bool likes(UserId u) const { return (bits_[u >> 6] >> (u & 63)) & 1ULL; }
  Rating rating(UserId u) const { return likes(u) ? Rating{1} : Rating{-1}; }
  void set(UserId u, bool like);
  std::size_t like_count() const;
  double like_fraction() const;
  const std::vector<std::uint64_t>& words() const { return bits_; }

  bool operator==(const ItemType& other) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> bits_;
};

// Number of users on which the two types disagree.
std::size_t hamming(const ItemType& a, const ItemType& b);

// Fraction of users on which the two types disagree.
double gamma_distance(const ItemType& a, const ItemType& b);

class FiniteMixture;

class ItemMeasure {
 public:
  virtual ~ItemMeasure() = default;
  virtual std::size_t n_users() const = 0;
  virtual std::shared_ptr<const ItemType> sample(Rng& rng) const = 0;
  // Probability that user u likes an item drawn from the measure.
  virtual double user_like_mass(UserId u) const = 0;
  virtual const FiniteMixture* as_mixture() const { return nullptr; }
  virtual nlohmann::json to_json() const = 0;
};

class UniformCube final : public ItemMeasure {
 public:
  explicit UniformCube(std::size_t n_users);
  std::size_t n_users() const override { return n_; }
  std::shared_ptr<const ItemType> sample(Rng& rng) const override;
  double user_like_mass(UserId) const override { return 0.5; }
  nlohmann::json to_json() const override;

 private:
  std::size_t n_;
};

class FiniteMixture final : public ItemMeasure {
 public:
  FiniteMixture(std::vector<ItemType> types, std::vector<double> weights);

  std::size_t n_users() const override { return n_; }
  std::shared_ptr<const ItemType> sample(Rng& rng) const override;
  double user_like_mass(UserId u) const override;
  const FiniteMixture* as_mixture() const override { return this; }
  nlohmann::json to_json() const override;

  std::size_t size() const { return types_.size(); }
  const ItemType& type(std::size_t k) const { return *types_[k]; }
  double weight(std::size_t k) const { return weights_[k]; }
  // Index of the support point drawn by the same call sequence as sample().
  std::size_t sample_index(Rng& rng) const;

 private:
  std::size_t n_;
  std::vector<std::shared_ptr<const ItemType>> types_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

// Tree of clusters: a random root, each child obtained from its parent by
// swapping like/dislike on a radius-dependent number of users so that every
// type keeps the same like count.
struct HierarchicalSpec {
  std::size_t n_users = 0;
  std::vector<std::size_t> branching;
  std::vector<double> flip_radii;
  std::vector<double> leaf_weights;
  double like_fraction = 0.1;
  std::uint64_t seed = 0;
};

std::shared_ptr<const FiniteMixture> expand_hierarchy(const HierarchicalSpec& spec);

std::shared_ptr<const ItemMeasure> measure_from_json(const nlohmann::json& j);

double doubling_dimension_exact(const FiniteMixture& measure);

// Mass of the closed ball of radius r around support point k.
double ball_mass(const FiniteMixture& measure, std::size_t k, double r);

struct AssumptionReport {
  double nu = 0;
  bool a2_user_ok = false;
  bool a2_item_ok = false;
  double min_user_mass = 0;
  double max_user_mass = 0;
  double min_item_fraction = 0;
  double max_item_fraction = 0;
  bool exact = false;
  std::optional<double> d_exact;
  std::vector<std::string> notes;

  bool ok() const { return a2_user_ok && a2_item_ok; }
  nlohmann::json to_json() const;
};

// Exact checks for finite support, Monte-Carlo estimates otherwise.
AssumptionReport validate_assumptions(const ItemMeasure& measure, double nu,
                                      std::size_t sample_budget = 10000,
                                      std::uint64_t seed = 0);

struct ClusterMeasure {
  std::shared_ptr<const FiniteMixture> measure;
  double d_exact = 0;
  std::size_t likes_per_user = 0;
  AssumptionReport report;
};

// K equal-weight types arranged as leaves of a balanced tree of the given
// depth; users fall into K groups and leaf k is liked by a cyclic window of
// groups starting at k.
ClusterMeasure make_cluster_measure(std::size_t k, std::size_t n_users, double nu,
                                    std::size_t depth, std::uint64_t seed);

inline constexpr double kDefaultSpecificShare = 0.05;

// Users split into K clusters; items are liked by everyone, by exactly one
// cluster, or by nobody. Every user likes a nu fraction of items. The K
// cluster-specific types together carry specific_share * nu of the mass, so
// users of different clusters disagree on 2 * specific_share * nu / K of items.
std::shared_ptr<const FiniteMixture> make_user_cluster_measure(std::size_t k,
                                                               std::size_t n_users,
                                                               double nu,
                                                               std::uint64_t seed,
                                                               double specific_share = kDefaultSpecificShare);

}  // namespace cfsim
