#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cfsim/algorithms.hpp"
#include "cfsim/constants.hpp"
#include "cfsim/ddestimate.hpp"
#include "cfsim/engine.hpp"
#include "cfsim/itemspace.hpp"
#include "cfsim/metrics.hpp"
#include "json.hpp"

namespace cfsim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDivergence = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitAssumption = 4;

// Raised by commands in strict mode when the like-rate assumption fails.
class AssumptionFailure : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  // Generator parameters or {"path": file}. Missing n_users / nu are filled
  // from the fields below.
  nlohmann::json measure = {{"variant", "uniform_cube"}};
  // {"name": "item_item" | "user_user" | "random" | "oracle", ...options}
  nlohmann::json algo = {{"name", "random"}};
  std::size_t n_users = 0;
  std::optional<double> nu;
  double d = 1;
  std::uint64_t horizon = 0;
  std::vector<std::uint64_t> seeds;
  ScaleFactors scale = ScaleFactors::desk();
  std::string out_dir;
  // Regret grid spacing in recommendations.
  std::size_t stride = 0;
  unsigned threads = 0;
  bool strict = false;
  bool write_traces = true;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  // Throws ConfigError listing every problem found.
  void validate() const;
  std::string hash() const;
};

std::string fnv1a_hex(const std::string& data);

// Resolves the measure spec to a concrete measure.
std::shared_ptr<const ItemMeasure> build_measure(const RunConfig& config);
nlohmann::json resolved_measure_spec(const RunConfig& config);

std::unique_ptr<Recommender> make_recommender(const RunConfig& config, const Environment& env, std::uint64_t seed);

struct SeedResult {
  std::uint64_t seed = 0;
  RegretCurve curve;
  std::uint64_t dislikes = 0;
  std::optional<RunTrace> trace;
};

// Runs each seed on its own environment; results come back in seed order.
std::vector<SeedResult> simulate_seeds(const RunConfig& config, std::shared_ptr<const ItemMeasure> measure,
                                       bool keep_traces);

MeanCurve combine_curves(const std::vector<SeedResult>& results);

// Default output directory: CFSIM_OUT_DIR if set, else "cfsim_out".
std::string default_out_dir();

int cmd_simulate(const RunConfig& config, std::ostream& log);

struct GenSpaceParams {
  std::string variant = "cluster";
  std::size_t k = 4;
  std::size_t n_users = 100;
  double nu = 0.1;
  std::size_t depth = 1;
  std::uint64_t seed = 0;
  bool strict = false;
  std::string out_path;
};

int cmd_gen_space(const GenSpaceParams& params, std::ostream& log);

struct EstimateDDParams {
  std::string ratings_path;
  std::string rule = "jester";
  double noise = 0;
  std::size_t min_co_raters = 20;
  // 0 means one grid step per user.
  std::size_t grid = 100;
  double bin_width = 0.25;
  unsigned threads = 0;
  std::string out_dir;
};

int cmd_estimate_dd(const EstimateDDParams& params, std::ostream& log);

// Re-runs the seeds recorded in a manifest and compares their traces.
int cmd_replay(const std::filesystem::path& manifest, std::ostream& log);

// Maps library exceptions to exit codes, printing the message to `err`.
int guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace cfsim
