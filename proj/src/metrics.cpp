#include "cfsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "cfsim/common.hpp"

namespace cfsim {

RegretCurve regret(const RunTrace& trace, std::size_t stride) {
  RegretAccumulator acc(trace.n_users, stride);
  for (const auto& r : trace.records) acc.add(r);
  return acc.curve();
}

RegretAccumulator::RegretAccumulator(std::size_t n_users, std::size_t stride) : n_(n_users), stride_(stride) {
  if (n_users == 0) throw ParameterError("need at least one user");
  if (stride == 0) throw ParameterError("stride must be positive");
}

void RegretAccumulator::add(const TraceRecord& r) {
  ++seen_;
  if (r.feedback < 0) ++dislikes_;
  if (seen_ % stride_ == 0) values_.push_back(static_cast<double>(dislikes_) / static_cast<double>(n_));
}

RegretCurve RegretAccumulator::curve() const {
  RegretCurve c;
  c.n_users = n_;
  c.step = static_cast<double>(stride_) / static_cast<double>(n_);
  c.values = values_;
  return c;
}

MeanCurve mean_regret(const std::vector<RegretCurve>& curves) {
  if (curves.size() < 2) throw ParameterError("mean_regret needs at least two curves");
  const auto& first = curves.front();
  for (const auto& c : curves) {
    if (c.values.size() != first.values.size() || std::abs(c.step - first.step) > 1e-12 * first.step) {
      throw ParameterError("regret curves are on different grids");
    }
  }
  const std::size_t n = curves.size();
  MeanCurve out;
  out.step = first.step;
  out.n_seeds = n;
  out.mean.assign(first.values.size(), 0.0);
  out.stderr_.assign(first.values.size(), 0.0);
  for (std::size_t k = 0; k < first.values.size(); ++k) {
    double sum = 0;
    for (const auto& c : curves) sum += c.values[k];
    const double mean = sum / static_cast<double>(n);
    double ss = 0;
    for (const auto& c : curves) ss += (c.values[k] - mean) * (c.values[k] - mean);
    out.mean[k] = mean;
    out.stderr_[k] = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  return out;
}

void write_curve_csv(const MeanCurve& curve, std::ostream& out) {
  out << "T,R_mean,R_stderr,n_seeds\n";
  out.precision(17);
  for (std::size_t k = 0; k < curve.mean.size(); ++k) {
    out << curve.step * static_cast<double>(k) << ',' << curve.mean[k] << ',' << curve.stderr_[k] << ','
        << curve.n_seeds << '\n';
  }
}

nlohmann::json ColdStartEstimate::to_json() const {
  nlohmann::json j = {{"found", found},
                      {"threshold", threshold},
                      {"trailing_slope", trailing_slope},
                      {"window", {tail_start, tail_end}}};
  if (found) {
    j["T"] = t;
    j["Gamma"] = gamma;
    j["T_cold_start"] = value;
  }
  return j;
}

double window_slope(const std::vector<double>& values, double step, double t0, double t1) {
  if (values.size() < 2 || !(step > 0)) throw ParameterError("curve needs at least two grid points");
  if (!(t1 > t0)) throw ParameterError("window must have positive length");
  auto at = [&](double t) {
    const double x = std::clamp(t / step, 0.0, static_cast<double>(values.size() - 1));
    const auto k = std::min(static_cast<std::size_t>(x), values.size() - 2);
    const double f = x - static_cast<double>(k);
    return values[k] * (1 - f) + values[k + 1] * f;
  };
  return (at(t1) - at(t0)) / (t1 - t0);
}

ColdStartEstimate cold_start_time(const std::vector<double>& values, double step, double threshold,
                                  double min_tail_fraction) {
  if (values.size() < 2 || !(step > 0)) throw ParameterError("curve needs at least two grid points");
  if (!(threshold > 0)) throw ParameterError("threshold must be positive");
  const std::size_t last = values.size() - 1;
  const auto min_tail = static_cast<std::size_t>(std::ceil(min_tail_fraction * static_cast<double>(last) - 1e-9));

  // Violation of R_j - R_i <= thr * (j - i) * step is S_j > S_i.
  std::vector<double> s(values.size());
  for (std::size_t k = 0; k <= last; ++k) s[k] = values[k] - threshold * step * static_cast<double>(k);
  std::vector<double> suffix_max(values.size());
  suffix_max[last] = s[last];
  for (std::size_t k = last; k-- > 0;) suffix_max[k] = std::max(s[k], suffix_max[k + 1]);

  ColdStartEstimate est;
  est.threshold = threshold;
  std::size_t best = last + 1, best_i = 0;
  for (std::size_t i = 0; i <= last; ++i) {
    const double tol = 1e-12 * std::max(1.0, std::abs(s[i]));
    std::size_t end = i;  // all j > end satisfy the condition
    if (i < last && suffix_max[i + 1] > s[i] + tol) {
      std::size_t lo = i + 1, hi = last;
      while (lo < hi) {
        const std::size_t mid = lo + (hi - lo + 1) / 2;
        if (suffix_max[mid] > s[i] + tol) lo = mid;
        else hi = mid - 1;
      }
      end = lo;
    }
    if (last - end < std::max<std::size_t>(min_tail, 1)) continue;
    if (end < best) {
      best = end;
      best_i = i;
    }
  }
  if (best <= last) {
    est.found = true;
    est.t = static_cast<double>(best_i) * step;
    est.gamma = static_cast<double>(best - best_i) * step;
    est.value = static_cast<double>(best) * step;
    est.tail_start = est.value;
    est.tail_end = static_cast<double>(last) * step;
    est.trailing_slope = window_slope(values, step, est.tail_start, est.tail_end);
  } else {
    const std::size_t w = std::max<std::size_t>(min_tail, 1);
    est.tail_start = static_cast<double>(last - w) * step;
    est.tail_end = static_cast<double>(last) * step;
    est.trailing_slope = window_slope(values, step, est.tail_start, est.tail_end);
  }
  return est;
}

ColdStartEstimate cold_start_time(const MeanCurve& curve, double threshold, double min_tail_fraction) {
  return cold_start_time(curve.mean, curve.step, threshold, min_tail_fraction);
}

double linear_lower_bound(double nu, std::size_t n_users) {
  if (!(nu > 0 && nu <= 0.5)) throw ParameterError("nu must lie in (0, 1/2]");
  if (n_users == 0) throw ParameterError("need at least one user");
  return (1 - 2 * nu) / static_cast<double>(n_users);
}

nlohmann::json BoundsOverlay::to_json() const {
  return {{"scale", "paper"},   {"nu", nu},         {"d", d},         {"N", n_users},     {"C", c},
          {"eps_N", eps_n},     {"eps_1", eps1},    {"M_1", m1},      {"MP_1", mp1},      {"T_MP", t_mp},
          {"T_min_1", t_min1},  {"T_min", t_min},   {"C_M", c_m},     {"g", g},           {"T_max", t_max},
          {"C_prime", c_prime}, {"alpha", alpha},   {"beta", beta},   {"lower_slope", lower_slope}};
}

BoundsOverlay bounds_overlay(double nu, double d, std::size_t n_users) {
  const TheoryConstants k(d, nu, n_users, ScaleFactors::paper());
  BoundsOverlay b;
  b.nu = nu;
  b.d = d;
  b.n_users = n_users;
  b.c = k.c();
  b.eps_n = k.eps_n();
  b.eps1 = k.eps(1);
  b.m1 = k.m_raw(1);
  b.mp1 = k.mp1();
  b.t_mp = b.mp1 / static_cast<double>(n_users);
  b.t_min1 = 12.0 / b.eps1 * std::log(1.0 / b.eps1);
  b.t_min = b.t_mp + b.t_min1;
  b.c_m = std::pow(2.0, std::max(3.5 * d, 8.0)) * (3 * d + 1) / nu;
  const double x = nu / (630.0 * (2 * d + 11) * std::pow(d + 2, 4) * std::pow(2.0, 5 * d + 18));
  b.g = nu / 4.0 * b.c_m * std::pow(x, (d + 2) / (d + 5));
  b.t_max = b.g * std::pow(static_cast<double>(n_users), (d + 2) / (d + 5));
  const double l2c = std::log(2.0 / b.c);
  b.c_prime = b.c_m / 2.0 * std::log2(1.0 / (b.c * (d + 2)) / l2c / b.c_m) * std::pow(2.0, 4 * (d + 1));
  b.alpha = b.c_prime * std::pow(1.0 / (b.c_m * l2c), (d + 1) / (d + 2));
  const double span = b.t_max - b.t_min;
  b.beta = span > 1 ? b.t_min + b.alpha * std::pow(span, (d + 1) / (d + 2)) * std::log2(span)
                    : std::numeric_limits<double>::quiet_NaN();
  b.lower_slope = linear_lower_bound(nu, n_users);
  return b;
}

}  // namespace cfsim
