#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "json.hpp"

namespace cfsim {

// Multipliers on the magnitude constants of each formula family. All ones is
// the exact theory; the desk preset shrinks them so small runs show the
// algorithm's phases.
struct ScaleFactors {
  std::string preset = "paper";
  double q = 1;               // 630 in the SIMILAR sample size
  double eps_n = 1;           // 2^(5d+18) in the accuracy floor
  double epoch_accuracy = 1;  // the constant C multiplying epoch accuracies
  double m = 1;               // 2^max(3.5d,8) in the items per epoch
  double max_size = 1;        // net size cap
  double max_wait = 1;        // net termination patience
  double mp = 1;              // cold-start cost bound

  static ScaleFactors paper();
  static ScaleFactors desk();
  static ScaleFactors by_name(const std::string& name);

  nlohmann::json to_json() const;
  // Accepts {"preset": name} optionally followed by per-family overrides.
  static ScaleFactors from_json(const nlohmann::json& j);
};

// Rounds a real-valued count up; values within 1e-9 relative of an integer
// are treated as that integer so exact formula values do not gain a unit
// through floating-point noise.
std::uint64_t ceil_count(double x);

std::uint64_t q_sample_size(double eps, double delta, double d, double scale = 1.0);

class TheoryConstants {
 public:
  TheoryConstants(double d, double nu, std::size_t n_users, ScaleFactors scale = {});

  double d() const { return d_; }
  double nu() const { return nu_; }
  std::size_t n_users() const { return n_; }
  const ScaleFactors& scale() const { return scale_; }

  double c() const;
  double eps_n() const;
  double eps(int tau) const;
  double m_raw(int tau) const;
  std::uint64_t m(int tau) const;
  // Per-user duration of epoch tau.
  double duration(int tau) const;
  // Recommendations in epoch tau: ceil(N * duration).
  std::uint64_t epoch_steps(int tau) const;

  std::uint64_t q(double eps, double delta) const;
  double max_size_raw(double eps) const;
  std::uint64_t max_size(double eps) const;
  double max_wait_raw(double eps, double delta) const;
  std::uint64_t max_wait(double eps, double delta) const;
  double delta_prime(double eps, double delta) const;
  // Cold-start build cost, evaluated at the unrounded M_1.
  double mp1() const;

 private:
  double d_;
  double nu_;
  std::size_t n_;
  ScaleFactors scale_;
};

}  // namespace cfsim
