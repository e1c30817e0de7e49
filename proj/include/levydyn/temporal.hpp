#pragma once

#include <span>
#include <vector>

#include "levydyn/rng.hpp"

namespace levydyn {

enum class ArMode { iar, regular_ar1 };

struct ArSpec {
  double rho = 0.0;
  double sigma_sq = 1.0;
  ArMode mode = ArMode::iar;
};

double normal_log_density(double x, double mean, double var);

// N(x_curr; rho^gap x_prev, sigma_sq (1 - rho^(2 gap))).
double ar_transition_log_density(double x_curr, double x_prev, double gap,
                                 const ArSpec& spec);

// IAR: N(0, sigma_sq). Regular AR(1): N(0, sigma_sq / (1 - rho^2)).
double ar_initial_log_density(double x1, const ArSpec& spec);

std::vector<double> ar_sample_path(std::span<const double> times,
                                   const ArSpec& spec, Rng& rng);

double ar_autocov(double gap, const ArSpec& spec);

// Unit gaps throughout select the regular AR(1) form.
ArMode select_ar_mode(std::span<const double> times);

std::vector<double> time_gaps(std::span<const double> times);

}  // namespace levydyn
