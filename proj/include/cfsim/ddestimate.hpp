#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cfsim/common.hpp"
#include "json.hpp"

namespace cfsim {

struct BinarizeRule {
  enum class Op { Greater, GreaterEqual };
  Op op = Op::Greater;
  double threshold = 0;

  Rating apply(double raw) const;
  std::string describe() const;

  static BinarizeRule jester() { return {Op::Greater, 2.0}; }
  static BinarizeRule movielens() { return {Op::GreaterEqual, 4.0}; }
  // "jester", "movielens", ">x" or ">=x".
  static BinarizeRule parse(const std::string& s);
};

struct RawRating {
  std::string user;
  std::string item;
  double rating;
};

class RatingsCorpus {
 public:
  // CSV with header user_id,item_id,rating. Throws DataError naming the
  // offending lines.
  static RatingsCorpus load_csv(std::istream& in, const BinarizeRule& rule);
  static RatingsCorpus from_triples(const std::vector<RawRating>& triples, const BinarizeRule& rule);

  std::size_t n_users() const { return users_.size(); }
  std::size_t n_items() const { return items_.size(); }
  std::size_t n_ratings() const { return n_ratings_; }
  const std::string& item_label(std::size_t k) const { return items_[k]; }
  const std::string& user_label(std::size_t u) const { return users_[u]; }
  const BinarizeRule& rule() const { return rule_; }

  std::optional<Rating> rating(std::size_t user, std::size_t item) const;
  const std::vector<std::uint64_t>& rated(std::size_t item) const { return rated_[item]; }
  const std::vector<std::uint64_t>& liked(std::size_t item) const { return liked_[item]; }

 private:
  static RatingsCorpus build(const BinarizeRule& rule, const std::vector<RawRating>& triples,
                             const std::vector<std::size_t>& lines);

  std::vector<std::string> users_;
  std::vector<std::string> items_;
  std::vector<std::vector<std::uint64_t>> rated_;
  std::vector<std::vector<std::uint64_t>> liked_;
  std::size_t n_ratings_ = 0;
  BinarizeRule rule_;
};

void write_ratings_csv(const std::vector<RawRating>& triples, std::ostream& out);

struct PairDistance {
  std::size_t co_raters = 0;
  std::size_t disagreements = 0;
  double value() const { return static_cast<double>(disagreements) / static_cast<double>(co_raters); }
};

// Disagreement fraction among users who rated both items; nullopt when fewer
// than min_co_raters users rated both.
std::optional<double> noisy_distance(const RatingsCorpus& corpus, std::size_t i, std::size_t j,
                                     std::size_t min_co_raters = 20);
PairDistance pair_counts(const RatingsCorpus& corpus, std::size_t i, std::size_t j);

struct Denoised {
  double value;
  bool clamped;
};

// Inverts dhat = (1-d) 2D(1-D) + d (D^2 + (1-D)^2) for d, clamped to [0, 1].
Denoised denoise_distance(double dhat, double noise);

// Grid r_k = k / resolution, k = 0..resolution.
struct RadiusGrid {
  std::size_t resolution = 100;
  double at(std::size_t k) const { return static_cast<double>(k) / static_cast<double>(resolution); }
};

// Number of items within r_k of the item, itself included. `distances` holds
// the item's retained distances to other items.
std::vector<std::size_t> ball_counts(const std::vector<double>& distances, const RadiusGrid& grid);

// Largest log2(N(2r) / N(r)) over grid radii 0 < r <= 1/2.
double item_dd(const std::vector<std::size_t>& profile, const RadiusGrid& grid);

struct DDOptions {
  double noise = 0;
  std::size_t min_co_raters = 20;
  RadiusGrid grid;
  double bin_width = 0.25;
  unsigned threads = 0;
};

struct ItemDD {
  std::string item;
  double d = 0;
  std::size_t n_neighbors = 0;
  double clamp_rate = 0;
};

struct DDHistogram {
  double bin_width = 0.25;
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  double mode = 0;

  nlohmann::json to_json() const;
};

DDHistogram dd_histogram(const std::vector<double>& values, double bin_width);

struct DDReport {
  std::vector<ItemDD> items;
  DDHistogram histogram;
  std::size_t pairs_retained = 0;
  std::size_t pairs_skipped = 0;
  double clamp_rate = 0;
  DDOptions options;

  nlohmann::json summary() const;
  void write_items_csv(std::ostream& out) const;
};

DDReport estimate_dd(const RatingsCorpus& corpus, const DDOptions& options);

struct PlantedCorpusSpec {
  std::size_t clusters = 4;
  std::size_t n_items = 500;
  std::size_t n_users = 2000;
  double noise = 0.2;
  double rate_prob = 1.0;
  std::uint64_t seed = 0;
};

// Items split evenly into clusters sharing a random +-1 center column; every
// observed entry is flipped with probability `noise`. Ratings are +1 / -1.
std::vector<RawRating> planted_corpus(const PlantedCorpusSpec& spec);

}  // namespace cfsim
