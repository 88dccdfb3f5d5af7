#include "cfsim/constants.hpp"

#include <algorithm>
#include <cmath>

#include "cfsim/common.hpp"

namespace cfsim {

ScaleFactors ScaleFactors::paper() { return ScaleFactors{}; }

ScaleFactors ScaleFactors::desk() {
  ScaleFactors s;
  s.preset = "desk";
  s.q = 2.5e-6;
  s.eps_n = 1e-18;
  s.epoch_accuracy = 296;
  s.m = 1.2e-8;
  s.max_size = 1;
  s.max_wait = 2e-3;
  s.mp = 1;
  return s;
}

ScaleFactors ScaleFactors::by_name(const std::string& name) {
  if (name == "paper") return paper();
  if (name == "desk") return desk();
  throw ConfigError("unknown scale preset '" + name + "' (expected paper or desk)");
}

nlohmann::json ScaleFactors::to_json() const {
  return {{"preset", preset},         {"q", q},   {"eps_n", eps_n},       {"epoch_accuracy", epoch_accuracy},
          {"m", m},                   {"max_size", max_size}, {"max_wait", max_wait}, {"mp", mp}};
}

ScaleFactors ScaleFactors::from_json(const nlohmann::json& j) {
  if (j.is_string()) return by_name(j.get<std::string>());
  if (!j.is_object()) throw ConfigError("scale must be a preset name or an object");
  std::string name = j.value("preset", std::string("paper"));
  if (name.starts_with("custom(") && name.ends_with(")")) name = name.substr(7, name.size() - 8);
  ScaleFactors s = by_name(name);
  auto take = [&](const char* key, double& field) {
    if (!j.contains(key)) return;
    if (!j[key].is_number() || !(j[key].get<double>() > 0)) {
      throw ConfigError(std::string("scale factor '") + key + "' must be a positive number");
    }
    const double v = j[key].get<double>();
    if (v == field) return;
    field = v;
    s.preset = "custom";
  };
  const std::string base = s.preset;
  take("q", s.q);
  take("eps_n", s.eps_n);
  take("epoch_accuracy", s.epoch_accuracy);
  take("m", s.m);
  take("max_size", s.max_size);
  take("max_wait", s.max_wait);
  take("mp", s.mp);
  if (s.preset == "custom") s.preset = "custom(" + base + ")";
  return s;
}

std::uint64_t ceil_count(double x) {
  if (!std::isfinite(x) || x < 0) throw ParameterError("count formula produced a non-finite or negative value");
  if (x >= 1.8e19) throw ParameterError("count formula exceeds the 64-bit range");
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::uint64_t>(r);
  return static_cast<std::uint64_t>(std::ceil(x));
}

std::uint64_t q_sample_size(double eps, double delta, double d, double scale) {
  if (!(eps > 0 && eps <= 1)) throw ParameterError("eps must lie in (0, 1]");
  if (!(delta > 0 && delta < 1)) throw ParameterError("delta must lie in (0, 1)");
  if (!(d >= 0)) throw ParameterError("d must be nonnegative");
  return ceil_count(scale * 630.0 * (d + 1.0) / eps * std::log(1.0 / delta));
}

TheoryConstants::TheoryConstants(double d, double nu, std::size_t n_users, ScaleFactors scale)
    : d_(d), nu_(nu), n_(n_users), scale_(std::move(scale)) {
  if (!(d >= 0) || !std::isfinite(d)) throw ParameterError("d must be a finite nonnegative number");
  if (!(nu > 0 && nu < 0.5)) throw ParameterError("nu must lie in (0, 1/2)");
  if (n_users == 0) throw ParameterError("need at least one user");
}

double TheoryConstants::c() const { return scale_.epoch_accuracy * nu_ / (148.0 * 20.0); }

double TheoryConstants::eps_n() const {
  const double d = d_;
  const double base = scale_.eps_n * std::pow(2.0, 5 * d + 18) / nu_ * 630.0 * (2 * d + 11) * std::pow(d + 2, 4) /
                      static_cast<double>(n_);
  return std::pow(base, 1.0 / (d + 5));
}

double TheoryConstants::eps(int tau) const {
  if (tau < 1) throw ParameterError("epochs are numbered from 1");
  return std::max(std::ldexp(1.0, -tau), eps_n()) * c();
}

double TheoryConstants::m_raw(int tau) const {
  const double e = eps(tau);
  return scale_.m * std::pow(2.0, std::max(3.5 * d_, 8.0)) / nu_ * (3 * d_ + 1) / std::pow(e, d_ + 2) *
         std::log(2.0 / e);
}

std::uint64_t TheoryConstants::m(int tau) const { return ceil_count(m_raw(tau)); }

double TheoryConstants::duration(int tau) const { return nu_ / 2.0 * m_raw(tau); }

std::uint64_t TheoryConstants::epoch_steps(int tau) const {
  return ceil_count(static_cast<double>(n_) * duration(tau));
}

std::uint64_t TheoryConstants::q(double eps, double delta) const { return q_sample_size(eps, delta, d_, scale_.q); }

double TheoryConstants::max_size_raw(double eps) const {
  if (!(eps > 0 && eps <= 1)) throw ParameterError("eps must lie in (0, 1]");
  return scale_.max_size * std::pow(4.0 / eps, d_);
}

std::uint64_t TheoryConstants::max_size(double eps) const { return std::max<std::uint64_t>(1, ceil_count(max_size_raw(eps))); }

double TheoryConstants::max_wait_raw(double eps, double delta) const {
  if (!(delta > 0 && delta < 1)) throw ParameterError("delta must lie in (0, 1)");
  return scale_.max_wait * std::pow(5.0 / eps, d_) * std::log(2.0 * static_cast<double>(max_size(eps)) / delta);
}

std::uint64_t TheoryConstants::max_wait(double eps, double delta) const { return ceil_count(max_wait_raw(eps, delta)); }

double TheoryConstants::delta_prime(double eps, double delta) const {
  const double w = static_cast<double>(std::max<std::uint64_t>(1, max_wait(eps, delta)));
  const double s = static_cast<double>(max_size(eps));
  return delta / (4.0 * w * s * s);
}

double TheoryConstants::mp1() const {
  const double e1 = eps(1);
  const double m1 = m_raw(1);
  const double l8 = std::log(8.0 / e1);
  return scale_.mp * std::pow(8.0 / e1, d_ + 1) * 4.0 * 630.0 * std::pow(d_ + 1, 3) * m1 * l8 * l8 * std::log(m1);
}

}  // namespace cfsim
