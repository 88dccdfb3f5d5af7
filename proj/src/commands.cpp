#include <fstream>
#include <iostream>

#include "cfsim/cli.hpp"

namespace cfsim {

namespace fs = std::filesystem;

namespace {

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

fs::path trace_path(const fs::path& dir, std::uint64_t seed) {
  return dir / "traces" / ("seed_" + std::to_string(seed) + ".csv");
}

}  // namespace

int cmd_simulate(const RunConfig& input, std::ostream& log) {
  RunConfig config = input;
  if (config.out_dir.empty()) config.out_dir = default_out_dir();
  config.validate();
  const nlohmann::json measure_spec = resolved_measure_spec(config);
  const auto measure = build_measure(config);

  nlohmann::json assumptions = nullptr;
  if (config.nu && *config.nu < 0.25) {
    const AssumptionReport rep = validate_assumptions(*measure, *config.nu, 10000, derive_seed(config.seeds[0], 99));
    assumptions = rep.to_json();
    if (!rep.ok()) {
      if (config.strict) throw AssumptionFailure("measure violates the like-rate assumption at nu=" +
                                                 std::to_string(*config.nu));
      log << "warning: measure violates the like-rate assumption at nu=" << *config.nu << '\n';
    }
  }

  const fs::path dir = config.out_dir;
  fs::create_directories(dir / "curves");
  if (config.write_traces) fs::create_directories(dir / "traces");

  const auto results = simulate_seeds(config, measure, config.write_traces);
  for (const auto& r : results) {
    if (r.trace) {
      auto out = open_out(trace_path(dir, r.seed));
      write_trace_csv(*r.trace, out);
    }
    auto out = open_out(dir / "curves" / ("seed_" + std::to_string(r.seed) + ".csv"));
    out << "T,R\n";
    out.precision(17);
    for (std::size_t k = 0; k < r.curve.values.size(); ++k) {
      out << r.curve.step * static_cast<double>(k) << ',' << r.curve.values[k] << '\n';
    }
  }
  const MeanCurve mean = combine_curves(results);
  {
    auto out = open_out(dir / "mean_curve.csv");
    write_curve_csv(mean, out);
  }

  nlohmann::json report;
  report["scale"] = config.scale.to_json();
  report["cold_start"] = cold_start_time(mean).to_json();
  const double h = mean.horizon();
  const double late = window_slope(mean.mean, mean.step, 0.8 * h, h);
  report["late_slope"] = late;
  if (config.nu) {
    report["lower_slope"] = linear_lower_bound(*config.nu, config.n_users);
    report["bounds_overlay"] = bounds_overlay(*config.nu, config.d, config.n_users).to_json();
  }
  write_json(dir / "report.json", report);

  nlohmann::json manifest;
  manifest["engine_version"] = kEngineVersion;
  manifest["config"] = config.to_json();
  manifest["config_hash"] = config.hash();
  manifest["seeds"] = config.seeds;
  manifest["scale"] = config.scale.to_json();
  manifest["measure"] = measure->to_json();
  manifest["measure_spec"] = measure_spec;
  manifest["assumptions"] = assumptions;
  manifest["traces"] = config.write_traces;
  write_json(dir / "manifest.json", manifest);

  log << "simulated " << results.size() << " seed(s) of " << config.algo["name"].get<std::string>() << " for T="
      << config.horizon << " with N=" << config.n_users << "; late slope " << late << "; outputs in " << dir.string()
      << '\n';
  return kExitOk;
}

int cmd_gen_space(const GenSpaceParams& p, std::ostream& log) {
  nlohmann::json out;
  out["generator"] = {{"variant", p.variant}, {"K", p.k},         {"n_users", p.n_users},
                      {"nu", p.nu},           {"depth", p.depth}, {"seed", p.seed}};
  AssumptionReport rep;
  if (p.variant == "cluster") {
    const ClusterMeasure cm = make_cluster_measure(p.k, p.n_users, p.nu, p.depth, p.seed);
    out["measure"] = cm.measure->to_json();
    out["d_exact"] = cm.d_exact;
    out["likes_per_user"] = cm.likes_per_user;
    rep = cm.report;
  } else if (p.variant == "user_clusters") {
    const auto m = make_user_cluster_measure(p.k, p.n_users, p.nu, p.seed);
    out["measure"] = m->to_json();
    rep = validate_assumptions(*m, p.nu);
    out["d_exact"] = rep.d_exact ? nlohmann::json(*rep.d_exact) : nlohmann::json(nullptr);
  } else {
    throw ConfigError("unknown space variant '" + p.variant + "' (expected cluster or user_clusters)");
  }
  out["assumptions"] = rep.to_json();
  if (p.out_path.empty()) {
    std::cout << out.dump(2) << '\n';
  } else {
    write_json(p.out_path, out);
    log << "wrote " << p.out_path << '\n';
  }
  if (!rep.ok()) {
    if (p.strict) throw AssumptionFailure("generated space violates the like-rate assumption");
    log << "warning: generated space violates the like-rate assumption\n";
  }
  return kExitOk;
}

int cmd_estimate_dd(const EstimateDDParams& p, std::ostream& log) {
  denoise_distance(0, p.noise);
  const BinarizeRule rule = BinarizeRule::parse(p.rule);
  std::ifstream in(p.ratings_path);
  if (!in) throw DataError("cannot open ratings file '" + p.ratings_path + "'");
  const RatingsCorpus corpus = RatingsCorpus::load_csv(in, rule);
  DDOptions opts;
  opts.noise = p.noise;
  opts.min_co_raters = p.min_co_raters;
  opts.grid.resolution = p.grid ? p.grid : corpus.n_users();
  opts.bin_width = p.bin_width;
  opts.threads = p.threads;
  const DDReport report = estimate_dd(corpus, opts);

  const fs::path dir = p.out_dir.empty() ? fs::path(default_out_dir()) : fs::path(p.out_dir);
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "item_dd.csv");
    report.write_items_csv(out);
  }
  nlohmann::json summary = report.summary();
  summary["rule"] = rule.describe();
  summary["n_users"] = corpus.n_users();
  summary["n_ratings"] = corpus.n_ratings();
  write_json(dir / "histogram.json", summary);
  log << "estimated d_i for " << report.items.size() << " items; histogram mode " << report.histogram.mode
      << "; outputs in " << dir.string() << '\n';
  return kExitOk;
}

int cmd_replay(const fs::path& manifest_path, std::ostream& log) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open manifest '" + manifest_path.string() + "'");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("manifest is not valid JSON: ") + e.what());
  }
  const std::string version = manifest.value("engine_version", "");
  if (version != kEngineVersion) {
    throw AuditError("manifest was written by engine '" + version + "' but this build is '" + kEngineVersion + "'");
  }
  RunConfig config = RunConfig::from_json(manifest.at("config"));
  if (config.hash() != manifest.value("config_hash", "")) {
    throw AuditError("config hash in the manifest does not match its config");
  }
  if (!manifest.value("traces", false)) throw AuditError("manifest has no recorded traces to replay");
  config.measure = manifest.at("measure");
  const auto measure = build_measure(config);
  const fs::path dir = manifest_path.parent_path();
  const auto results = simulate_seeds(config, measure, true);

  nlohmann::json reports = nlohmann::json::array();
  bool all_identical = true;
  for (const auto& r : results) {
    std::ifstream tin(trace_path(dir, r.seed));
    if (!tin) throw DataError("missing recorded trace for seed " + std::to_string(r.seed));
    const RunTrace recorded = read_trace_csv(tin, config.n_users);
    const ReplayReport rep = compare_traces(recorded, *r.trace);
    all_identical = all_identical && rep.identical;
    nlohmann::json j = rep.to_json();
    j["seed"] = r.seed;
    reports.push_back(j);
  }
  const nlohmann::json summary = {{"identical", all_identical}, {"seeds", reports}};
  log << summary.dump(2) << '\n';
  return all_identical ? kExitOk : kExitDivergence;
}

}  // namespace cfsim
