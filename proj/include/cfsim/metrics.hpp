#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cfsim/constants.hpp"
#include "cfsim/engine.hpp"
#include "json.hpp"

namespace cfsim {

// R(T) at T = k * step for k = 0..values.size()-1.
struct RegretCurve {
  std::size_t n_users = 0;
  double step = 0;
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::string algo;

  double horizon() const { return step * static_cast<double>(values.empty() ? 0 : values.size() - 1); }
};

// Builds the curve from a trace, one grid point every `stride` records.
RegretCurve regret(const RunTrace& trace, std::size_t stride = 1);

// Accumulates the same curve online while a run progresses.
class RegretAccumulator {
 public:
  RegretAccumulator(std::size_t n_users, std::size_t stride);
  void add(const TraceRecord& r);
  RegretCurve curve() const;

 private:
  std::size_t n_;
  std::size_t stride_;
  std::uint64_t seen_ = 0;
  std::uint64_t dislikes_ = 0;
  std::vector<double> values_{0.0};
};

struct MeanCurve {
  double step = 0;
  std::vector<double> mean;
  std::vector<double> stderr_;
  std::size_t n_seeds = 0;

  double horizon() const { return step * static_cast<double>(mean.empty() ? 0 : mean.size() - 1); }
};

MeanCurve mean_regret(const std::vector<RegretCurve>& curves);

void write_curve_csv(const MeanCurve& curve, std::ostream& out);

struct ColdStartEstimate {
  bool found = false;
  double t = 0;
  double gamma = 0;
  double value = 0;
  double threshold = 0.1;
  // slope over the verified tail window, or over the last window if not found
  double trailing_slope = 0;
  double tail_start = 0;
  double tail_end = 0;

  nlohmann::json to_json() const;
};

// Minimizes T + Gamma over grid points such that R(T+D) - R(T) <= threshold * D
// for every grid D > Gamma up to the horizon, requiring at least
// min_tail_fraction of the horizon past T + Gamma as evidence.
ColdStartEstimate cold_start_time(const std::vector<double>& values, double step, double threshold = 0.1,
                                  double min_tail_fraction = 0.1);
ColdStartEstimate cold_start_time(const MeanCurve& curve, double threshold = 0.1, double min_tail_fraction = 0.1);

// Average slope of R over [t0, t1], interpolating on the grid.
double window_slope(const std::vector<double>& values, double step, double t0, double t1);

double linear_lower_bound(double nu, std::size_t n_users);

struct BoundsOverlay {
  double nu = 0, d = 0;
  std::size_t n_users = 0;
  double c = 0;
  double eps_n = 0;
  double eps1 = 0;
  double m1 = 0;
  double mp1 = 0;
  double t_mp = 0;
  double t_min1 = 0;
  double t_min = 0;
  double c_m = 0;
  double g = 0;
  double t_max = 0;
  double c_prime = 0;
  double alpha = 0;
  double beta = 0;
  double lower_slope = 0;

  nlohmann::json to_json() const;
};

BoundsOverlay bounds_overlay(double nu, double d, std::size_t n_users);

}  // namespace cfsim
