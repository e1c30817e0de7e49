#include <doctest.h>

#include <cmath>
#include <numbers>

#include "levydyn/errors.hpp"
#include "levydyn/rng.hpp"
#include "levydyn/temporal.hpp"

using namespace levydyn;

namespace {
double norm_lpdf(double x, double m, double v) {
  return -0.5 * std::log(2.0 * std::numbers::pi * v) - (x - m) * (x - m) / (2.0 * v);
}
}  // namespace

TEST_CASE("transition density") {
  ArSpec iar{0.5, 1.0, ArMode::iar};
  CHECK(ar_transition_log_density(1.0, 4.0, 2.0, iar) ==
        doctest::Approx(norm_lpdf(1.0, 1.0, 0.9375)));
  ArSpec ar1{0.5, 1.0, ArMode::regular_ar1};
  CHECK(ar_transition_log_density(0.3, -1.2, 1.0, iar) ==
        ar_transition_log_density(0.3, -1.2, 1.0, ar1));
  ArSpec zero{0.0, 2.0, ArMode::iar};
  CHECK(ar_transition_log_density(0.3, -5.0, 1.5, zero) ==
        ar_transition_log_density(0.3, 7.0, 1.5, zero));
  CHECK(ar_transition_log_density(0.3, -5.0, 1.5, zero) == doctest::Approx(norm_lpdf(0.3, 0.0, 2.0)));
  CHECK_THROWS_AS(ar_transition_log_density(0.0, 0.0, 0.0, iar), InvalidArgument);
  CHECK_THROWS_AS(ar_transition_log_density(0.0, 0.0, 1.0, ArSpec{1.0, 1.0, ArMode::iar}),
                  InvalidArgument);
  CHECK_THROWS_AS(ar_transition_log_density(0.0, 0.0, 0.5, ArSpec{-0.5, 1.0, ArMode::regular_ar1}),
                  InvalidArgument);
}

TEST_CASE("initial density") {
  CHECK(ar_initial_log_density(0.0, ArSpec{0.3, 1.0, ArMode::iar}) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)));
  CHECK(ar_initial_log_density(0.7, ArSpec{0.0, 1.0, ArMode::regular_ar1}) ==
        ar_initial_log_density(0.7, ArSpec{0.0, 1.0, ArMode::iar}));
  CHECK(ar_initial_log_density(1.0, ArSpec{0.6, 1.0, ArMode::regular_ar1}) ==
        doctest::Approx(norm_lpdf(1.0, 0.0, 1.0 / 0.64)));
}

TEST_CASE("autocovariance") {
  ArSpec s{0.5, 2.0, ArMode::iar};
  CHECK(ar_autocov(0.0, s) == 2.0);
  CHECK(ar_autocov(3.0, s) == doctest::Approx(0.25));
  CHECK(ar_autocov(400.0, s) < 1e-100);
  CHECK_THROWS_AS(ar_autocov(-1.0, s), InvalidArgument);
}

TEST_CASE("path moments on irregular times") {
  std::vector<double> times{0.0, 0.5, 2.0, 2.3, 5.0};
  ArSpec s{0.7, 1.5, ArMode::iar};
  const int reps = 100000;
  std::vector<double> sum(5, 0.0), sq(5, 0.0);
  double cross = 0.0, cross_sq = 0.0;
  Rng rng = stream_rng(3, StreamTag::user, 0, 0);
  for (int r = 0; r < reps; ++r) {
    auto path = ar_sample_path(times, s, rng);
    for (int k = 0; k < 5; ++k) {
      sum[k] += path[k];
      sq[k] += path[k] * path[k];
    }
    double c = path[1] * path[2];
    cross += c;
    cross_sq += c * c;
  }
  for (int k = 0; k < 5; ++k) {
    double v = sq[k] / reps;
    // var of x^2 for a normal is 2 sigma^4
    double se = std::sqrt(2.0) * 1.5 / std::sqrt(static_cast<double>(reps));
    CHECK(std::abs(v - 1.5) < 3.0 * se);
  }
  double c = cross / reps;
  double se = std::sqrt((cross_sq / reps - c * c) / reps);
  CHECK(std::abs(c - ar_autocov(1.5, s)) < 3.0 * se);
}

TEST_CASE("rho close to one keeps consecutive values close") {
  std::vector<double> times{1.0, 2.0, 3.0, 4.0};
  ArSpec s{0.999999, 1.0, ArMode::iar};
  Rng rng(5);
  auto path = ar_sample_path(times, s, rng);
  for (int k = 1; k < 4; ++k) CHECK(std::abs(path[k] - path[k - 1]) < 0.02);
}

TEST_CASE("mode selection and gaps") {
  std::vector<double> unit{3.0, 4.0, 5.0};
  std::vector<double> irregular{0.0, 1.0, 2.5};
  CHECK(select_ar_mode(unit) == ArMode::regular_ar1);
  CHECK(select_ar_mode(irregular) == ArMode::iar);
  auto g = time_gaps(irregular);
  CHECK(g == std::vector<double>{0.0, 1.0, 1.5});
}
