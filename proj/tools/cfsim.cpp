#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "cfsim/cli.hpp"

using namespace cfsim;

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

struct SimulateFlags {
  std::string config_path;
  std::string algo;
  std::string measure;
  std::size_t k = 0;
  std::size_t depth = 1;
  std::uint64_t measure_seed = 0;
  std::size_t n_users = 0;
  double nu = -1;
  double d = -1;
  std::uint64_t horizon = 0;
  std::size_t seed_count = 0;
  std::uint64_t seed_start = 0;
  std::vector<std::uint64_t> seed_list;
  std::string scale;
  std::string out;
  std::size_t stride = 0;
  unsigned threads = 0;
  bool strict = false;
  bool no_traces = false;
  std::string boundary;
};

RunConfig build_config(const SimulateFlags& f) {
  RunConfig c = f.config_path.empty() ? RunConfig{} : RunConfig::from_json(read_json(f.config_path));
  if (!f.algo.empty()) c.algo = {{"name", f.algo}};
  if (f.k) c.algo["K"] = f.k;
  if (!f.boundary.empty()) c.algo["boundary"] = f.boundary;
  if (f.n_users) c.n_users = f.n_users;
  if (f.nu >= 0) c.nu = f.nu;
  if (f.d >= 0) c.d = f.d;
  if (f.horizon) c.horizon = f.horizon;
  if (!f.measure.empty()) {
    if (f.measure == "uniform") {
      c.measure = {{"variant", "uniform_cube"}};
    } else if (f.measure == "cluster" || f.measure == "user_clusters") {
      c.measure = {{"variant", f.measure}, {"K", f.k}, {"seed", f.measure_seed}};
      if (f.measure == "cluster") c.measure["depth"] = f.depth;
    } else {
      c.measure = {{"path", f.measure}};
    }
  }
  if (!f.seed_list.empty()) {
    c.seeds = f.seed_list;
  } else if (f.seed_count) {
    c.seeds.clear();
    for (std::size_t s = 0; s < f.seed_count; ++s) c.seeds.push_back(f.seed_start + s);
  }
  if (!f.scale.empty()) {
    c.scale = (f.scale == "paper" || f.scale == "desk") ? ScaleFactors::by_name(f.scale)
                                                        : ScaleFactors::from_json(read_json(f.scale));
  }
  if (!f.out.empty()) c.out_dir = f.out;
  if (f.stride) c.stride = f.stride;
  if (f.threads) c.threads = f.threads;
  if (f.strict) c.strict = true;
  if (f.no_traces) c.write_traces = false;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator for online collaborative filtering with item-item and user-user recommenders"};
  app.require_subcommand(1);

  SimulateFlags sf;
  auto* sim = app.add_subcommand("simulate", "Run seeds of one recommender and write traces, curves and reports");
  sim->add_option("--config", sf.config_path, "JSON run config; flags below override its fields");
  sim->add_option("--algo", sf.algo, "item_item, user_user, random or oracle");
  sim->add_option("--measure", sf.measure, "uniform, cluster, user_clusters, or a JSON measure file");
  sim->add_option("--K", sf.k, "cluster count for generated measures and user_user");
  sim->add_option("--depth", sf.depth, "tree depth for cluster measures");
  sim->add_option("--measure-seed", sf.measure_seed, "seed for generated measures");
  sim->add_option("--n-users", sf.n_users, "number of users N");
  sim->add_option("--nu", sf.nu, "like-rate parameter");
  sim->add_option("--d", sf.d, "doubling dimension used by item_item");
  sim->add_option("--horizon", sf.horizon, "horizon T in recommendations per user");
  sim->add_option("--seeds", sf.seed_count, "run seeds seed-start .. seed-start+n-1");
  sim->add_option("--seed-start", sf.seed_start, "first seed for --seeds");
  sim->add_option("--seed-list", sf.seed_list, "explicit seeds")->delimiter(',');
  sim->add_option("--scale", sf.scale, "desk, paper, or a JSON scale file");
  sim->add_option("--out", sf.out, "output directory (default $CFSIM_OUT_DIR or ./cfsim_out)");
  sim->add_option("--stride", sf.stride, "regret grid spacing in recommendations");
  sim->add_option("--threads", sf.threads, "worker threads for seeds");
  sim->add_option("--boundary", sf.boundary, "item_item epoch boundary policy: finish or reuse");
  sim->add_flag("--strict", sf.strict, "fail with exit 4 when the like-rate assumption is violated");
  sim->add_flag("--no-traces", sf.no_traces, "skip per-seed trace files");

  GenSpaceParams gp;
  auto* gen = app.add_subcommand("gen-space", "Generate a clustered item space and its assumption report");
  gen->add_option("--variant", gp.variant, "cluster or user_clusters");
  gen->add_option("--K", gp.k, "number of clusters");
  gen->add_option("--n-users", gp.n_users, "number of users");
  gen->add_option("--nu", gp.nu, "like-rate parameter");
  gen->add_option("--depth", gp.depth, "tree depth (cluster variant)");
  gen->add_option("--seed", gp.seed, "generator seed");
  gen->add_option("--out", gp.out_path, "output JSON path (default stdout)");
  gen->add_flag("--strict", gp.strict, "fail with exit 4 when the like-rate assumption is violated");

  EstimateDDParams ep;
  std::string grid = "101";
  auto* est = app.add_subcommand("estimate-dd", "Estimate per-item doubling dimensions from a ratings CSV");
  est->add_option("ratings", ep.ratings_path, "CSV with header user_id,item_id,rating")->required();
  est->add_option("--noise", ep.noise, "per-entry flip probability used for denoising");
  est->add_option("--rule", ep.rule, "binarization: jester, movielens, >x or >=x");
  est->add_option("--min-co-raters", ep.min_co_raters, "minimum users rating both items of a pair");
  est->add_option("--grid", grid, "radius grid points (e.g. 101) or 'users' for a 1/N grid");
  est->add_option("--bin-width", ep.bin_width, "histogram bin width");
  est->add_option("--threads", ep.threads, "worker threads");
  est->add_option("--out", ep.out_dir, "output directory (default $CFSIM_OUT_DIR or ./cfsim_out)");

  std::string manifest;
  auto* rep = app.add_subcommand("replay", "Re-run the seeds of a manifest and compare against its traces");
  rep->add_option("manifest", manifest, "manifest.json written by simulate")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (sim->parsed()) return guarded([&] { return cmd_simulate(build_config(sf), std::cerr); }, std::cerr);
  if (gen->parsed()) return guarded([&] { return cmd_gen_space(gp, std::cerr); }, std::cerr);
  if (est->parsed()) {
    return guarded(
        [&] {
          if (grid == "users") {
            ep.grid = 0;
          } else {
            std::size_t pos = 0;
            const long points = std::stol(grid, &pos);
            if (pos != grid.size() || points < 2) throw ConfigError("--grid must be an integer >= 2 or 'users'");
            ep.grid = static_cast<std::size_t>(points - 1);
          }
          return cmd_estimate_dd(ep, std::cerr);
        },
        std::cerr);
  }
  if (rep->parsed()) return guarded([&] { return cmd_replay(manifest, std::cerr); }, std::cerr);
  return kExitConfig;
}
