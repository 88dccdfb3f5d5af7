#include "cfsim/itemspace.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace cfsim {

ItemType::ItemType(std::size_t n_users) : n_(n_users), bits_((n_users + 63) / 64, 0) {}

ItemType::ItemType(std::size_t n_users, std::vector<std::uint64_t> words)
    : n_(n_users), bits_(std::move(words)) {
  if (bits_.size() != (n_users + 63) / 64) throw DimensionError("word count does not match user count");
  if (n_users % 64 != 0) bits_.back() &= (1ULL << (n_users % 64)) - 1;
}

ItemType ItemType::from_string(std::string_view s) {
  ItemType t(s.size());
  for (std::size_t u = 0; u < s.size(); ++u) {
    if (s[u] == '+') {
      t.set(static_cast<UserId>(u), true);
    } else if (s[u] != '-') {
      throw DataError("item type strings use only '+' and '-'");
    }
  }
  return t;
}

std::string ItemType::to_string() const {
  std::string s(n_, '-');
  for (std::size_t u = 0; u < n_; ++u) {
    if (likes(static_cast<UserId>(u))) s[u] = '+';
  }
  return s;
}

void ItemType::set(UserId u, bool like) {
  if (u >= n_) throw DimensionError("user index out of range");
  const std::uint64_t mask = 1ULL << (u & 63);
  if (like) {
    bits_[u >> 6] |= mask;
  } else {
    bits_[u >> 6] &= ~mask;
  }
}

std::size_t ItemType::like_count() const {
  std::size_t c = 0;
  for (auto w : bits_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

double ItemType::like_fraction() const {
  return n_ == 0 ? 0.0 : static_cast<double>(like_count()) / static_cast<double>(n_);
}

std::size_t hamming(const ItemType& a, const ItemType& b) {
  if (a.n_users() != b.n_users()) throw DimensionError("item types have different lengths");
  const auto& wa = a.words();
  const auto& wb = b.words();
  std::size_t h = 0;
  for (std::size_t k = 0; k < wa.size(); ++k) h += static_cast<std::size_t>(std::popcount(wa[k] ^ wb[k]));
  return h;
}

double gamma_distance(const ItemType& a, const ItemType& b) {
  const std::size_t h = hamming(a, b);
  if (a.n_users() == 0) return 0.0;
  return static_cast<double>(h) / static_cast<double>(a.n_users());
}

UniformCube::UniformCube(std::size_t n_users) : n_(n_users) {
  if (n_users == 0) throw ParameterError("uniform cube needs at least one user");
}

std::shared_ptr<const ItemType> UniformCube::sample(Rng& rng) const {
  std::vector<std::uint64_t> words((n_ + 63) / 64);
  for (auto& w : words) w = rng();
  return std::make_shared<const ItemType>(n_, std::move(words));
}

nlohmann::json UniformCube::to_json() const {
  return {{"variant", "uniform_cube"}, {"n_users", n_}};
}

FiniteMixture::FiniteMixture(std::vector<ItemType> types, std::vector<double> weights) {
  if (types.empty()) throw ParameterError("finite mixture needs at least one type");
  if (types.size() != weights.size()) throw DimensionError("types and weights differ in length");
  n_ = types.front().n_users();
  double total = 0;
  for (std::size_t k = 0; k < types.size(); ++k) {
    if (types[k].n_users() != n_) throw DimensionError("mixture types have different lengths");
    if (!(weights[k] >= 0) || !std::isfinite(weights[k])) throw ParameterError("mixture weights must be nonnegative");
    total += weights[k];
  }
  if (!(total > 0)) throw ParameterError("mixture weights sum to zero");
  if (std::abs(total - 1.0) > 1e-12) throw ParameterError("mixture weights must sum to 1");
  weights_ = std::move(weights);
  double acc = 0;
  for (std::size_t k = 0; k < types.size(); ++k) {
    types_.push_back(std::make_shared<const ItemType>(std::move(types[k])));
    acc += weights_[k];
    cumulative_.push_back(acc);
  }
  cumulative_.back() = std::numeric_limits<double>::infinity();
}

std::size_t FiniteMixture::sample_index(Rng& rng) const {
  if (types_.size() == 1) return 0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double x = unit(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
  auto k = static_cast<std::size_t>(it - cumulative_.begin());
  // skip zero-weight points that share a cumulative value
  while (weights_[k] == 0 && k + 1 < types_.size()) ++k;
  return k;
}

std::shared_ptr<const ItemType> FiniteMixture::sample(Rng& rng) const {
  return types_[sample_index(rng)];
}

double FiniteMixture::user_like_mass(UserId u) const {
  if (u >= n_) throw DimensionError("user index out of range");
  double m = 0;
  for (std::size_t k = 0; k < types_.size(); ++k) {
    if (types_[k]->likes(u)) m += weights_[k];
  }
  return m;
}

nlohmann::json FiniteMixture::to_json() const {
  nlohmann::json types = nlohmann::json::array();
  for (const auto& t : types_) types.push_back(t->to_string());
  return {{"variant", "finite_mixture"}, {"n_users", n_}, {"types", types}, {"weights", weights_}};
}

double ball_mass(const FiniteMixture& measure, std::size_t k, double r) {
  const double n = static_cast<double>(measure.n_users());
  double m = 0;
  for (std::size_t j = 0; j < measure.size(); ++j) {
    const double h = static_cast<double>(hamming(measure.type(k), measure.type(j)));
    if (h <= r * n + 1e-9) m += measure.weight(j);
  }
  return m;
}

double doubling_dimension_exact(const FiniteMixture& measure) {
  const std::size_t k = measure.size();
  std::vector<std::size_t> h(k * k, 0);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      h[a * k + b] = h[b * k + a] = hamming(measure.type(a), measure.type(b));
    }
  }
  bool equal_weights = true;
  for (std::size_t a = 1; a < k; ++a) equal_weights = equal_weights && measure.weight(a) == measure.weight(0);

  // Radii in units of 1/(2N): B(x, s/(2N)) holds y with 2h <= s and
  // B(x, 2 * s/(2N)) holds y with h <= s.
  double best = 0;
  for (std::size_t x = 0; x < k; ++x) {
    if (measure.weight(x) <= 0) continue;
    std::vector<std::size_t> radii;
    for (std::size_t y = 0; y < k; ++y) {
      if (h[x * k + y] == 0) continue;
      radii.push_back(h[x * k + y]);
      radii.push_back(2 * h[x * k + y]);
    }
    for (std::size_t s : radii) {
      double inner = 0, outer = 0;
      std::size_t n_inner = 0, n_outer = 0;
      for (std::size_t y = 0; y < k; ++y) {
        if (measure.weight(y) <= 0) continue;
        const std::size_t d = h[x * k + y];
        if (2 * d <= s) {
          inner += measure.weight(y);
          ++n_inner;
        }
        if (d <= s) {
          outer += measure.weight(y);
          ++n_outer;
        }
      }
      const double ratio = equal_weights ? static_cast<double>(n_outer) / static_cast<double>(n_inner)
                                         : outer / inner;
      best = std::max(best, std::log2(ratio));
    }
  }
  return best;
}

nlohmann::json AssumptionReport::to_json() const {
  nlohmann::json j = {{"nu", nu},
                      {"a2_user_ok", a2_user_ok},
                      {"a2_item_ok", a2_item_ok},
                      {"min_user_mass", min_user_mass},
                      {"max_user_mass", max_user_mass},
                      {"min_item_fraction", min_item_fraction},
                      {"max_item_fraction", max_item_fraction},
                      {"exact", exact},
                      {"notes", notes}};
  j["d_exact"] = d_exact ? nlohmann::json(*d_exact) : nlohmann::json(nullptr);
  return j;
}

}  // namespace cfsim
