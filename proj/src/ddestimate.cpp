#include "cfsim/ddestimate.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "absl/container/flat_hash_map.h"

namespace cfsim {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

std::string line_list(const std::vector<std::size_t>& lines) {
  std::ostringstream os;
  const std::size_t shown = std::min<std::size_t>(lines.size(), 20);
  for (std::size_t k = 0; k < shown; ++k) os << (k ? ", " : "") << lines[k];
  if (lines.size() > shown) os << " and " << lines.size() - shown << " more";
  return os.str();
}

}  // namespace

Rating BinarizeRule::apply(double raw) const {
  const bool like = op == Op::Greater ? raw > threshold : raw >= threshold;
  return like ? Rating{1} : Rating{-1};
}

std::string BinarizeRule::describe() const {
  std::ostringstream os;
  os << (op == Op::Greater ? ">" : ">=") << threshold;
  return os.str();
}

BinarizeRule BinarizeRule::parse(const std::string& s) {
  if (s == "jester") return jester();
  if (s == "movielens") return movielens();
  BinarizeRule r;
  std::string_view rest = s;
  if (rest.starts_with(">=")) {
    r.op = Op::GreaterEqual;
    rest.remove_prefix(2);
  } else if (rest.starts_with(">")) {
    r.op = Op::Greater;
    rest.remove_prefix(1);
  } else {
    throw ConfigError("binarization rule must be jester, movielens, >x or >=x; got '" + s + "'");
  }
  if (!parse_double(rest, r.threshold)) throw ConfigError("bad binarization threshold in '" + s + "'");
  return r;
}

RatingsCorpus RatingsCorpus::load_csv(std::istream& in, const BinarizeRule& rule) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("ratings file is empty");
  {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.emplace_back(trim(col));
    if (cols != std::vector<std::string>{"user_id", "item_id", "rating"}) {
      throw DataError("line 1: expected header user_id,item_id,rating");
    }
  }
  std::vector<RawRating> triples;
  std::vector<std::size_t> lines;
  std::vector<std::size_t> bad;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t start = 0;
    for (;;) {
      const auto comma = view.find(',', start);
      f.push_back(trim(view.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    double value = 0;
    if (f.size() != 3 || f[0].empty() || f[1].empty() || !parse_double(f[2], value)) {
      bad.push_back(lineno);
      continue;
    }
    triples.push_back({std::string(f[0]), std::string(f[1]), value});
    lines.push_back(lineno);
  }
  if (!bad.empty()) throw DataError("malformed rating rows at lines " + line_list(bad));
  if (triples.empty()) throw DataError("ratings file has no rows");
  return build(rule, triples, lines);
}

RatingsCorpus RatingsCorpus::from_triples(const std::vector<RawRating>& triples, const BinarizeRule& rule) {
  if (triples.empty()) throw DataError("corpus has no ratings");
  std::vector<std::size_t> lines(triples.size());
  for (std::size_t k = 0; k < lines.size(); ++k) lines[k] = k + 1;
  return build(rule, triples, lines);
}

RatingsCorpus RatingsCorpus::build(const BinarizeRule& rule, const std::vector<RawRating>& triples,
                                   const std::vector<std::size_t>& lines) {
  RatingsCorpus c;
  c.rule_ = rule;
  absl::flat_hash_map<std::string, std::size_t> user_index, item_index;
  std::vector<std::pair<std::size_t, std::size_t>> ids;
  ids.reserve(triples.size());
  for (const auto& t : triples) {
    auto [uit, unew] = user_index.try_emplace(t.user, c.users_.size());
    if (unew) c.users_.push_back(t.user);
    auto [iit, inew] = item_index.try_emplace(t.item, c.items_.size());
    if (inew) c.items_.push_back(t.item);
    ids.emplace_back(uit->second, iit->second);
  }
  const std::size_t words = (c.users_.size() + 63) / 64;
  c.rated_.assign(c.items_.size(), std::vector<std::uint64_t>(words, 0));
  c.liked_.assign(c.items_.size(), std::vector<std::uint64_t>(words, 0));
  std::vector<std::size_t> dup;
  for (std::size_t k = 0; k < triples.size(); ++k) {
    const auto [u, i] = ids[k];
    const auto bit = 1ULL << (u & 63);
    auto& r = c.rated_[i][u >> 6];
    if (r & bit) {
      dup.push_back(lines[k]);
      continue;
    }
    r |= bit;
    if (rule.apply(triples[k].rating) > 0) c.liked_[i][u >> 6] |= bit;
    ++c.n_ratings_;
  }
  if (!dup.empty()) throw DataError("duplicate (user, item) ratings at lines " + line_list(dup));
  return c;
}

std::optional<Rating> RatingsCorpus::rating(std::size_t user, std::size_t item) const {
  const auto w = user >> 6;
  const auto bit = 1ULL << (user & 63);
  if (!(rated_.at(item).at(w) & bit)) return std::nullopt;
  return (liked_[item][w] & bit) ? Rating{1} : Rating{-1};
}

void write_ratings_csv(const std::vector<RawRating>& triples, std::ostream& out) {
  out << "user_id,item_id,rating\n";
  for (const auto& t : triples) out << t.user << ',' << t.item << ',' << t.rating << '\n';
}

PairDistance pair_counts(const RatingsCorpus& corpus, std::size_t i, std::size_t j) {
  const auto& ri = corpus.rated(i);
  const auto& rj = corpus.rated(j);
  const auto& li = corpus.liked(i);
  const auto& lj = corpus.liked(j);
  PairDistance p;
  for (std::size_t w = 0; w < ri.size(); ++w) {
    const std::uint64_t both = ri[w] & rj[w];
    p.co_raters += static_cast<std::size_t>(std::popcount(both));
    p.disagreements += static_cast<std::size_t>(std::popcount(both & (li[w] ^ lj[w])));
  }
  return p;
}

std::optional<double> noisy_distance(const RatingsCorpus& corpus, std::size_t i, std::size_t j,
                                     std::size_t min_co_raters) {
  const PairDistance p = pair_counts(corpus, i, j);
  if (p.co_raters == 0 || p.co_raters < min_co_raters) return std::nullopt;
  return p.value();
}

Denoised denoise_distance(double dhat, double noise) {
  if (!(noise >= 0 && noise < 0.5)) throw ParameterError("noise probability must lie in [0, 1/2)");
  const double base = 2 * noise * (1 - noise);
  const double gain = (1 - 2 * noise) * (1 - 2 * noise);
  const double d = (dhat - base) / gain;
  if (d < 0) return {0.0, true};
  if (d > 1) return {1.0, true};
  return {d, false};
}

std::vector<std::size_t> ball_counts(const std::vector<double>& distances, const RadiusGrid& grid) {
  if (grid.resolution == 0) throw ParameterError("radius grid needs a positive resolution");
  std::vector<double> sorted = distances;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> counts(grid.resolution + 1);
  for (std::size_t k = 0; k <= grid.resolution; ++k) {
    const double r = grid.at(k) + 1e-12;
    counts[k] = 1 + static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), r) - sorted.begin());
  }
  return counts;
}

double item_dd(const std::vector<std::size_t>& profile, const RadiusGrid& grid) {
  if (profile.size() != grid.resolution + 1) throw ParameterError("profile does not match the radius grid");
  double d = 0;
  for (std::size_t k = 1; 2 * k <= grid.resolution; ++k) {
    const double den = static_cast<double>(std::max<std::size_t>(profile[k], 1));
    d = std::max(d, std::log2(static_cast<double>(profile[2 * k]) / den));
  }
  return d;
}

DDHistogram dd_histogram(const std::vector<double>& values, double bin_width) {
  if (!(bin_width > 0)) throw ParameterError("bin width must be positive");
  DDHistogram h;
  h.bin_width = bin_width;
  double top = 0;
  for (double v : values) {
    if (v < 0) throw ParameterError("doubling dimensions must be nonnegative");
    top = std::max(top, v);
  }
  const auto bins = static_cast<std::size_t>(std::floor(top / bin_width + 1e-9)) + 1;
  h.counts.assign(bins, 0);
  for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(bin_width * static_cast<double>(b));
  for (double v : values) ++h.counts[static_cast<std::size_t>(std::floor(v / bin_width + 1e-9))];
  const auto it = std::max_element(h.counts.begin(), h.counts.end());
  h.mode = h.edges[static_cast<std::size_t>(it - h.counts.begin())];
  return h;
}

nlohmann::json DDHistogram::to_json() const {
  return {{"bin_width", bin_width}, {"edges", edges}, {"counts", counts}, {"mode", mode}};
}

nlohmann::json DDReport::summary() const {
  std::size_t isolated = 0;
  for (const auto& it : items) isolated += it.n_neighbors == 0;
  return {{"n_items", items.size()},
          {"noise", options.noise},
          {"min_co_raters", options.min_co_raters},
          {"grid_resolution", options.grid.resolution},
          {"pairs_retained", pairs_retained},
          {"pairs_skipped", pairs_skipped},
          {"clamp_rate", clamp_rate},
          {"isolated_items", isolated},
          {"histogram", histogram.to_json()}};
}

void DDReport::write_items_csv(std::ostream& out) const {
  out << "item_id,d_i,n_neighbors,clamp_rate\n";
  out.precision(12);
  for (const auto& it : items) out << it.item << ',' << it.d << ',' << it.n_neighbors << ',' << it.clamp_rate << '\n';
}

DDReport estimate_dd(const RatingsCorpus& corpus, const DDOptions& options) {
  if (corpus.n_items() == 0) throw DataError("corpus has no items");
  denoise_distance(0, options.noise);
  const std::size_t n = corpus.n_items();
  constexpr float kSkip = std::numeric_limits<float>::quiet_NaN();
  std::vector<float> dist(n * n, kSkip);
  std::vector<std::uint8_t> clamped(n * n, 0);

  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  auto work = [&](unsigned id) {
    for (std::size_t i = id; i < n; i += threads) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto dhat = noisy_distance(corpus, i, j, options.min_co_raters);
        if (!dhat) continue;
        const Denoised d = denoise_distance(*dhat, options.noise);
        dist[i * n + j] = dist[j * n + i] = static_cast<float>(d.value);
        clamped[i * n + j] = clamped[j * n + i] = d.clamped;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& t : pool) t.join();

  DDReport report;
  report.options = options;
  std::size_t clamp_total = 0;
  std::vector<double> ds;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    std::size_t clamps = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || std::isnan(dist[i * n + j])) continue;
      row.push_back(dist[i * n + j]);
      clamps += clamped[i * n + j];
    }
    ItemDD it;
    it.item = corpus.item_label(i);
    it.n_neighbors = row.size();
    it.clamp_rate = row.empty() ? 0.0 : static_cast<double>(clamps) / static_cast<double>(row.size());
    it.d = item_dd(ball_counts(row, options.grid), options.grid);
    ds.push_back(it.d);
    report.items.push_back(std::move(it));
    if (i < n) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (std::isnan(dist[i * n + j])) ++report.pairs_skipped;
        else {
          ++report.pairs_retained;
          clamp_total += clamped[i * n + j];
        }
      }
    }
  }
  report.clamp_rate =
      report.pairs_retained ? static_cast<double>(clamp_total) / static_cast<double>(report.pairs_retained) : 0.0;
  report.histogram = dd_histogram(ds, options.bin_width);
  return report;
}

std::vector<RawRating> planted_corpus(const PlantedCorpusSpec& spec) {
  if (spec.clusters == 0 || spec.n_items < spec.clusters || spec.n_users == 0) {
    throw ParameterError("planted corpus needs at least one item per cluster and one user");
  }
  if (!(spec.noise >= 0 && spec.noise < 0.5)) throw ParameterError("noise must lie in [0, 1/2)");
  if (!(spec.rate_prob > 0 && spec.rate_prob <= 1)) throw ParameterError("rate_prob must lie in (0, 1]");
  Rng rng(derive_seed(spec.seed, 11));
  std::bernoulli_distribution coin(0.5), flip(spec.noise), rated(spec.rate_prob);
  std::vector<std::vector<bool>> centers(spec.clusters, std::vector<bool>(spec.n_users));
  for (auto& c : centers)
    for (std::size_t u = 0; u < spec.n_users; ++u) c[u] = coin(rng);
  std::vector<RawRating> out;
  for (std::size_t i = 0; i < spec.n_items; ++i) {
    const std::size_t k = i * spec.clusters / spec.n_items;
    for (std::size_t u = 0; u < spec.n_users; ++u) {
      if (!rated(rng)) continue;
      const bool like = centers[k][u] != flip(rng);
      out.push_back({"u" + std::to_string(u), "i" + std::to_string(i), like ? 1.0 : -1.0});
    }
  }
  return out;
}

}  // namespace cfsim
