#include "levydyn/temporal.hpp"

#include <cmath>
#include <numbers>

#include "levydyn/errors.hpp"

namespace levydyn {

namespace {

void check_spec(const ArSpec& spec) {
  if (!(spec.sigma_sq > 0.0) || !std::isfinite(spec.sigma_sq))
    throw InvalidArgument("ar: sigma_sq must be positive");
  if (spec.mode == ArMode::iar) {
    if (!(spec.rho >= 0.0 && spec.rho < 1.0))
      throw InvalidArgument("ar: IAR mode needs 0 <= rho < 1");
  } else if (!(spec.rho > -1.0 && spec.rho < 1.0)) {
    throw InvalidArgument("ar: regular AR(1) needs -1 < rho < 1");
  }
}

double rho_pow(double rho, double gap) {
  if (rho < 0.0 && gap != std::floor(gap))
    throw InvalidArgument("ar: negative rho with non-integer gap");
  return std::pow(rho, gap);
}

}  // namespace

double normal_log_density(double x, double mean, double var) {
  double d = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * d * d / var;
}

double ar_transition_log_density(double x_curr, double x_prev, double gap,
                                 const ArSpec& spec) {
  check_spec(spec);
  if (!(gap > 0.0)) throw InvalidArgument("ar: gap must be positive");
  double rg = rho_pow(spec.rho, gap);
  double var = spec.sigma_sq * (1.0 - rg * rg);
  return normal_log_density(x_curr, rg * x_prev, var);
}

double ar_initial_log_density(double x1, const ArSpec& spec) {
  check_spec(spec);
  double var = spec.sigma_sq;
  if (spec.mode == ArMode::regular_ar1) var /= 1.0 - spec.rho * spec.rho;
  return normal_log_density(x1, 0.0, var);
}

std::vector<double> ar_sample_path(std::span<const double> times,
                                   const ArSpec& spec, Rng& rng) {
  check_spec(spec);
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1]))
      throw InvalidArgument("ar_sample_path: times must be strictly increasing");
  std::vector<double> path(times.size());
  if (times.empty()) return path;
  double v0 = spec.sigma_sq;
  if (spec.mode == ArMode::regular_ar1) v0 /= 1.0 - spec.rho * spec.rho;
  path[0] = std::sqrt(v0) * std_normal(rng);
  for (std::size_t k = 1; k < times.size(); ++k) {
    double rg = rho_pow(spec.rho, times[k] - times[k - 1]);
    path[k] = rg * path[k - 1] +
              std::sqrt(spec.sigma_sq * (1.0 - rg * rg)) * std_normal(rng);
  }
  return path;
}

double ar_autocov(double gap, const ArSpec& spec) {
  if (gap < 0.0) throw InvalidArgument("ar_autocov: gap must be >= 0");
  return spec.sigma_sq * rho_pow(spec.rho, gap);
}

ArMode select_ar_mode(std::span<const double> times) {
  for (std::size_t k = 1; k < times.size(); ++k)
    if (std::abs(times[k] - times[k - 1] - 1.0) > 1e-12) return ArMode::iar;
  return ArMode::regular_ar1;
}

std::vector<double> time_gaps(std::span<const double> times) {
  std::vector<double> gaps(times.size(), 0.0);
  for (std::size_t k = 1; k < times.size(); ++k) gaps[k] = times[k] - times[k - 1];
  return gaps;
}

}  // namespace levydyn
