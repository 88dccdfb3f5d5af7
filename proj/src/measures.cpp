#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cfsim/itemspace.hpp"

namespace cfsim {

namespace {

constexpr double kTol = 1e-12;

// Users 0..n-1 shuffled and cut into k near-equal groups.
std::vector<std::vector<UserId>> user_groups(std::size_t k, std::size_t n, Rng& rng) {
  std::vector<UserId> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<UserId>> groups(k);
  for (std::size_t g = 0; g < k; ++g) {
    const std::size_t lo = g * n / k, hi = (g + 1) * n / k;
    groups[g].assign(perm.begin() + static_cast<std::ptrdiff_t>(lo), perm.begin() + static_cast<std::ptrdiff_t>(hi));
  }
  return groups;
}

std::size_t checked_size(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<long long>() < 0) {
    throw ConfigError(std::string("measure spec needs a nonnegative integer '") + key + "'");
  }
  return j[key].get<std::size_t>();
}

double checked_real(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw ConfigError(std::string("measure spec needs a number '") + key + "'");
  }
  return j[key].get<double>();
}

}  // namespace

AssumptionReport validate_assumptions(const ItemMeasure& measure, double nu, std::size_t sample_budget,
                                      std::uint64_t seed) {
  if (!(nu > 0 && nu < 0.25)) throw ParameterError("nu must lie in (0, 1/4)");
  AssumptionReport rep;
  rep.nu = nu;
  const std::size_t n = measure.n_users();
  rep.min_user_mass = 1;
  rep.max_user_mass = 0;
  for (UserId u = 0; u < n; ++u) {
    const double m = measure.user_like_mass(u);
    rep.min_user_mass = std::min(rep.min_user_mass, m);
    rep.max_user_mass = std::max(rep.max_user_mass, m);
  }
  rep.a2_user_ok = rep.min_user_mass >= nu - kTol && rep.max_user_mass <= 2 * nu + kTol;
  rep.min_item_fraction = 1;
  rep.max_item_fraction = 0;
  if (const FiniteMixture* mix = measure.as_mixture()) {
    rep.exact = true;
    for (std::size_t k = 0; k < mix->size(); ++k) {
      if (mix->weight(k) <= 0) continue;
      const double f = mix->type(k).like_fraction();
      rep.min_item_fraction = std::min(rep.min_item_fraction, f);
      rep.max_item_fraction = std::max(rep.max_item_fraction, f);
    }
    if (mix->size() <= 4096) rep.d_exact = doubling_dimension_exact(*mix);
    rep.notes.push_back("per-user mass is the exact expectation over the measure; per-item fractions are exact over the support");
  } else {
    Rng rng(derive_seed(seed, 11));
    for (std::size_t s = 0; s < sample_budget; ++s) {
      const double f = measure.sample(rng)->like_fraction();
      rep.min_item_fraction = std::min(rep.min_item_fraction, f);
      rep.max_item_fraction = std::max(rep.max_item_fraction, f);
    }
    std::ostringstream note;
    note << "per-item fractions are the extremes over " << sample_budget
         << " sampled items; a draw outside [nu, 2nu] certifies a violation, staying inside is evidence only";
    rep.notes.push_back(note.str());
  }
  rep.a2_item_ok = rep.min_item_fraction >= nu - kTol && rep.max_item_fraction <= 2 * nu + kTol;
  return rep;
}

ClusterMeasure make_cluster_measure(std::size_t k, std::size_t n_users, double nu, std::size_t depth,
                                    std::uint64_t seed) {
  if (!(nu > 0 && nu < 0.25)) throw ParameterError("nu must lie in (0, 1/4)");
  if (k == 0) throw ConstructionError("K must be at least 1");
  if (n_users < k) throw ConstructionError("need at least K users so every group is nonempty");
  Rng rng(derive_seed(seed, 21));
  ClusterMeasure out;
  if (k == 1) {
    ItemType t(n_users);
    std::vector<UserId> perm(n_users);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto likes = static_cast<std::size_t>(std::llround(1.5 * nu * static_cast<double>(n_users)));
    for (std::size_t s = 0; s < likes; ++s) t.set(perm[s], true);
    out.measure = std::make_shared<const FiniteMixture>(std::vector<ItemType>{t}, std::vector<double>{1.0});
    out.d_exact = 0;
    out.likes_per_user = 1;
    out.report = validate_assumptions(*out.measure, nu);
    return out;
  }
  if (depth == 0) throw ConstructionError("depth must be at least 1 when K > 1");
  const auto b = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(k), 1.0 / static_cast<double>(depth))));
  std::size_t power = 1;
  for (std::size_t l = 0; l < depth; ++l) power *= b;
  if (power != k) {
    throw ConstructionError("K is not a perfect power of the requested depth");
  }
  const double kd = static_cast<double>(k);
  const double lo = nu * kd, hi = 2 * nu * kd, mid = 1.5 * nu * kd;
  std::size_t c = 0;
  double best = std::numeric_limits<double>::infinity();
  for (auto cand = static_cast<std::size_t>(std::max(1.0, std::ceil(lo - kTol))); static_cast<double>(cand) <= hi + kTol; ++cand) {
    if (cand > k) break;
    if (std::abs(static_cast<double>(cand) - mid) < best) {
      best = std::abs(static_cast<double>(cand) - mid);
      c = cand;
    }
  }
  if (c == 0) {
    std::ostringstream msg;
    msg << "no whole number of liked clusters per user lies in [nu*K, 2nu*K] = [" << lo << ", " << hi << "]";
    throw ConstructionError(msg.str());
  }
  const auto groups = user_groups(k, n_users, rng);
  std::vector<ItemType> types;
  for (std::size_t leaf = 0; leaf < k; ++leaf) {
    ItemType t(n_users);
    for (std::size_t w = 0; w < c; ++w) {
      for (UserId u : groups[(leaf + w) % k]) t.set(u, true);
    }
    types.push_back(std::move(t));
  }
  out.measure = std::make_shared<const FiniteMixture>(std::move(types), std::vector<double>(k, 1.0 / kd));
  out.likes_per_user = c;
  out.report = validate_assumptions(*out.measure, nu);
  out.d_exact = out.report.d_exact.value_or(0.0);
  if (!out.report.ok()) {
    std::ostringstream msg;
    msg << "generated measure violates the like-rate assumption: item like fractions in [" << out.report.min_item_fraction
        << ", " << out.report.max_item_fraction << "], user masses in [" << out.report.min_user_mass << ", "
        << out.report.max_user_mass << "], allowed [" << nu << ", " << 2 * nu << "]";
    throw ConstructionError(msg.str());
  }
  return out;
}

std::shared_ptr<const FiniteMixture> make_user_cluster_measure(std::size_t k, std::size_t n_users, double nu,
                                                               std::uint64_t seed, double specific_share) {
  if (!(nu > 0 && nu < 0.25)) throw ParameterError("nu must lie in (0, 1/4)");
  if (k == 0 || n_users < k) throw ConstructionError("need 1 <= K <= n_users");
  if (!(specific_share > 0 && specific_share < 1)) throw ParameterError("specific_share must lie in (0, 1)");
  const double single_w = specific_share * nu / static_cast<double>(k);
  const double all_w = nu - single_w;
  const double none_w = 1.0 - all_w - single_w * static_cast<double>(k);
  if (none_w < -kTol) throw ConstructionError("K too large for nu: single-cluster weights exceed the remaining mass");
  Rng rng(derive_seed(seed, 22));
  const auto groups = user_groups(k, n_users, rng);
  std::vector<ItemType> types;
  std::vector<double> weights;
  ItemType all(n_users);
  for (UserId u = 0; u < n_users; ++u) all.set(u, true);
  types.push_back(all);
  weights.push_back(all_w);
  for (std::size_t g = 0; g < k; ++g) {
    ItemType t(n_users);
    for (UserId u : groups[g]) t.set(u, true);
    types.push_back(std::move(t));
    weights.push_back(single_w);
  }
  if (none_w > kTol) {
    types.emplace_back(n_users);
    weights.push_back(none_w);
  }
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (auto& w : weights) w /= total;
  return std::make_shared<const FiniteMixture>(std::move(types), std::move(weights));
}

std::shared_ptr<const FiniteMixture> expand_hierarchy(const HierarchicalSpec& spec) {
  if (spec.n_users == 0) throw ConstructionError("hierarchy needs at least one user");
  if (spec.branching.size() != spec.flip_radii.size()) throw DimensionError("branching and flip_radii differ in length");
  if (!(spec.like_fraction >= 0 && spec.like_fraction <= 1)) throw ParameterError("like_fraction must lie in [0,1]");
  Rng rng(derive_seed(spec.seed, 23));
  const std::size_t n = spec.n_users;
  ItemType root(n);
  {
    std::vector<UserId> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto likes = static_cast<std::size_t>(std::llround(spec.like_fraction * static_cast<double>(n)));
    for (std::size_t s = 0; s < likes; ++s) root.set(perm[s], true);
  }
  std::vector<ItemType> level{root};
  for (std::size_t l = 0; l < spec.branching.size(); ++l) {
    if (spec.branching[l] == 0) throw ConstructionError("branching factors must be positive");
    const auto swaps = static_cast<std::size_t>(std::llround(spec.flip_radii[l] * static_cast<double>(n) / 2.0));
    std::vector<ItemType> next;
    for (const auto& parent : level) {
      for (std::size_t c = 0; c < spec.branching[l]; ++c) {
        ItemType child = parent;
        std::vector<UserId> liked, disliked;
        for (UserId u = 0; u < n; ++u) (parent.likes(u) ? liked : disliked).push_back(u);
        std::shuffle(liked.begin(), liked.end(), rng);
        std::shuffle(disliked.begin(), disliked.end(), rng);
        const std::size_t s = std::min({swaps, liked.size(), disliked.size()});
        for (std::size_t i = 0; i < s; ++i) {
          child.set(liked[i], false);
          child.set(disliked[i], true);
        }
        next.push_back(std::move(child));
      }
    }
    level = std::move(next);
  }
  std::vector<double> weights = spec.leaf_weights;
  if (weights.empty()) weights.assign(level.size(), 1.0 / static_cast<double>(level.size()));
  if (weights.size() != level.size()) throw DimensionError("leaf_weights must have one entry per leaf");
  return std::make_shared<const FiniteMixture>(std::move(level), std::move(weights));
}

std::shared_ptr<const ItemMeasure> measure_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("variant") || !j["variant"].is_string()) {
    throw ConfigError("measure spec must be an object with a string 'variant'");
  }
  const std::string variant = j["variant"];
  const std::size_t n = checked_size(j, "n_users");
  if (variant == "uniform_cube") return std::make_shared<const UniformCube>(n);
  if (variant == "finite_mixture") {
    if (!j.contains("types") || !j["types"].is_array()) throw ConfigError("finite_mixture needs a 'types' array");
    if (!j.contains("weights") || !j["weights"].is_array()) throw ConfigError("finite_mixture needs a 'weights' array");
    std::vector<ItemType> types;
    for (const auto& s : j["types"]) {
      if (!s.is_string()) throw ConfigError("types must be strings of '+' and '-'");
      types.push_back(ItemType::from_string(s.get<std::string>()));
      if (types.back().n_users() != n) throw DimensionError("type length differs from n_users");
    }
    std::vector<double> weights;
    for (const auto& w : j["weights"]) {
      if (!w.is_number()) throw ConfigError("weights must be numbers");
      weights.push_back(w.get<double>());
    }
    return std::make_shared<const FiniteMixture>(std::move(types), std::move(weights));
  }
  if (variant == "hierarchical_clusters") {
    HierarchicalSpec spec;
    spec.n_users = n;
    spec.branching = j.at("branching").get<std::vector<std::size_t>>();
    spec.flip_radii = j.at("flip_radii").get<std::vector<double>>();
    if (j.contains("leaf_weights")) spec.leaf_weights = j["leaf_weights"].get<std::vector<double>>();
    spec.like_fraction = checked_real(j, "like_fraction");
    spec.seed = j.value("seed", std::uint64_t{0});
    return expand_hierarchy(spec);
  }
  if (variant == "cluster") {
    return make_cluster_measure(checked_size(j, "K"), n, checked_real(j, "nu"), j.value("depth", std::size_t{1}),
                                j.value("seed", std::uint64_t{0}))
        .measure;
  }
  if (variant == "user_clusters") {
    return make_user_cluster_measure(checked_size(j, "K"), n, checked_real(j, "nu"), j.value("seed", std::uint64_t{0}),
                                     j.value("specific_share", kDefaultSpecificShare));
  }
  throw ConfigError("unknown measure variant '" + variant + "'");
}

}  // namespace cfsim
