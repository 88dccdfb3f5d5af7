#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "cfsim/cli.hpp"

namespace cfsim {

namespace {

const std::set<std::string> kConfigKeys = {"measure", "algo",    "n_users", "nu",      "d",       "horizon",
                                           "seeds",   "scale",   "out_dir", "stride",  "threads", "strict",
                                           "write_traces"};

const std::set<std::string> kAlgos = {"item_item", "user_user", "random", "oracle"};

template <class T>
T get_field(const nlohmann::json& j, const char* key, std::vector<std::string>& errors, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    errors.push_back(std::string("field '") + key + "' has the wrong type");
    return fallback;
  }
}

std::string join_errors(const std::vector<std::string>& errors) {
  std::string msg = "invalid run config:";
  for (const auto& e : errors) msg += "\n  - " + e;
  return msg;
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = {{"measure", measure}, {"algo", algo},           {"n_users", n_users}, {"d", d},
                      {"horizon", horizon}, {"seeds", seeds},         {"scale", scale.to_json()},
                      {"stride", stride},   {"strict", strict},       {"write_traces", write_traces},
                      {"out_dir", out_dir}, {"threads", threads}};
  j["nu"] = nu ? nlohmann::json(*nu) : nlohmann::json(nullptr);
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  std::vector<std::string> errors;
  for (const auto& [key, _] : j.items()) {
    if (!kConfigKeys.contains(key)) errors.push_back("unknown field '" + key + "'");
  }
  RunConfig c;
  if (j.contains("measure")) c.measure = j["measure"];
  if (j.contains("algo")) {
    c.algo = j["algo"].is_string() ? nlohmann::json{{"name", j["algo"]}} : j["algo"];
  }
  c.n_users = get_field<std::size_t>(j, "n_users", errors, 0);
  if (j.contains("nu") && !j["nu"].is_null()) c.nu = get_field<double>(j, "nu", errors, 0.0);
  c.d = get_field<double>(j, "d", errors, 1.0);
  c.horizon = get_field<std::uint64_t>(j, "horizon", errors, 0);
  c.seeds = get_field<std::vector<std::uint64_t>>(j, "seeds", errors, {});
  if (j.contains("scale")) {
    try {
      c.scale = ScaleFactors::from_json(j["scale"]);
    } catch (const ConfigError& e) {
      errors.emplace_back(e.what());
    }
  }
  c.out_dir = get_field<std::string>(j, "out_dir", errors, "");
  c.stride = get_field<std::size_t>(j, "stride", errors, 0);
  c.threads = get_field<unsigned>(j, "threads", errors, 0);
  c.strict = get_field<bool>(j, "strict", errors, false);
  c.write_traces = get_field<bool>(j, "write_traces", errors, true);
  if (!errors.empty()) throw ConfigError(join_errors(errors));
  return c;
}

void RunConfig::validate() const {
  std::vector<std::string> errors;
  if (n_users == 0) errors.push_back("n_users must be positive");
  if (n_users > (1ULL << 31)) errors.push_back("n_users is too large");
  if (horizon == 0) errors.push_back("horizon must be positive");
  if (seeds.empty()) errors.push_back("seeds must be a nonempty list");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    errors.push_back("seeds must be distinct");
  }
  if (nu && !(*nu > 0 && *nu < 0.5)) errors.push_back("nu must lie in (0, 1/2)");
  if (!(d >= 0)) errors.push_back("d must be nonnegative");
  if (!measure.is_object()) errors.push_back("measure must be an object");
  else if (!measure.contains("variant") && !measure.contains("path")) {
    errors.push_back("measure needs a 'variant' or a 'path'");
  }
  std::string name;
  if (!algo.is_object() || !algo.contains("name") || !algo["name"].is_string()) {
    errors.push_back("algo must be an object with a string 'name'");
  } else {
    name = algo["name"];
    if (!kAlgos.contains(name)) errors.push_back("unknown algo '" + name + "'");
  }
  if ((name == "item_item" || name == "user_user") && !nu) errors.push_back(name + " needs nu");
  if (name == "user_user" && !(algo.contains("K") || (measure.is_object() && measure.contains("K")))) {
    errors.push_back("user_user needs K (in algo or in the measure spec)");
  }
  if (name == "item_item" && algo.contains("boundary")) {
    const auto b = algo["boundary"];
    if (!b.is_string() || (b != "finish" && b != "reuse")) errors.push_back("algo.boundary must be finish or reuse");
  }
  if (!errors.empty()) throw ConfigError(join_errors(errors));
}

std::string RunConfig::hash() const {
  nlohmann::json j = to_json();
  j.erase("out_dir");
  j.erase("threads");
  return fnv1a_hex(j.dump());
}

nlohmann::json resolved_measure_spec(const RunConfig& config) {
  nlohmann::json spec = config.measure;
  if (spec.contains("path")) {
    nlohmann::json file = load_json_file(spec["path"].get<std::string>());
    spec = file.contains("measure") ? file["measure"] : file;
  }
  if (!spec.contains("n_users")) spec["n_users"] = config.n_users;
  if (!spec.contains("nu") && config.nu && spec.value("variant", "") != "uniform_cube" &&
      spec.value("variant", "") != "finite_mixture") {
    spec["nu"] = *config.nu;
  }
  return spec;
}

std::shared_ptr<const ItemMeasure> build_measure(const RunConfig& config) {
  auto m = measure_from_json(resolved_measure_spec(config));
  if (m->n_users() != config.n_users) {
    throw ConfigError("measure has " + std::to_string(m->n_users()) + " users but n_users is " +
                      std::to_string(config.n_users));
  }
  return m;
}

std::unique_ptr<Recommender> make_recommender(const RunConfig& config, const Environment& env, std::uint64_t seed) {
  const std::string name = config.algo.at("name");
  if (name == "random") return std::make_unique<RandomRecommender>();
  if (name == "oracle") return std::make_unique<OracleRecommender>(env);
  if (name == "user_user") {
    const std::size_t k = config.algo.contains("K") ? config.algo["K"].get<std::size_t>()
                                                    : config.measure["K"].get<std::size_t>();
    return std::make_unique<UserUserRecommender>(env.n_users(), k, *config.nu, seed);
  }
  if (name == "item_item") {
    ItemItemOptions opts;
    opts.sample_with_replacement = config.algo.value("with_replacement", false);
    opts.boundary = config.algo.value("boundary", std::string("finish")) == "reuse" ? BoundaryPolicy::ReusePrevious
                                                                                   : BoundaryPolicy::FinishAtBoundary;
    const TheoryConstants k(config.d, *config.nu, env.n_users(), config.scale);
    return std::make_unique<ItemItemRecommender>(k, env.measure_ptr(), seed, opts);
  }
  throw ConfigError("unknown algo '" + name + "'");
}

namespace {

std::size_t effective_stride(const RunConfig& config) {
  if (config.stride) return config.stride;
  const std::uint64_t steps = config.horizon * config.n_users;
  return static_cast<std::size_t>(std::max<std::uint64_t>(1, steps / 10000));
}

}  // namespace

std::vector<SeedResult> simulate_seeds(const RunConfig& config, std::shared_ptr<const ItemMeasure> measure,
                                       bool keep_traces) {
  config.validate();
  const std::size_t stride = effective_stride(config);
  std::vector<SeedResult> results(config.seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= results.size()) return;
      try {
        const std::uint64_t seed = config.seeds[idx];
        Environment env(measure, seed);
        auto algo = make_recommender(config, env, seed);
        RegretAccumulator acc(config.n_users, stride);
        SeedResult& res = results[idx];
        res.seed = seed;
        if (keep_traces) res.trace = RunTrace{config.n_users, {}};
        run(env, *algo, config.horizon, [&](const TraceRecord& r) {
          acc.add(r);
          if (keep_traces) res.trace->records.push_back(r);
        });
        res.curve = acc.curve();
        res.curve.seed = seed;
        res.curve.algo = algo->name();
        res.dislikes = env.dislikes();
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = results.size();
      }
    }
  };
  unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, results.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

MeanCurve combine_curves(const std::vector<SeedResult>& results) {
  if (results.empty()) throw ParameterError("no seed results to combine");
  if (results.size() == 1) {
    MeanCurve m;
    m.step = results[0].curve.step;
    m.mean = results[0].curve.values;
    m.stderr_.assign(m.mean.size(), 0.0);
    m.n_seeds = 1;
    return m;
  }
  std::vector<RegretCurve> curves;
  for (const auto& r : results) curves.push_back(r.curve);
  return mean_regret(curves);
}

std::string default_out_dir() {
  const char* env = std::getenv("CFSIM_OUT_DIR");
  return env && *env ? env : "cfsim_out";
}

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const AssumptionFailure& e) {
    err << "assumption check failed: " << e.what() << '\n';
    return kExitAssumption;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const AuditError& e) {
    err << "audit error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParameterError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DimensionError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConstructionError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UnsupportedMeasureError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace cfsim
