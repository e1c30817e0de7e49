#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "levydyn/diagnostics.hpp"
#include "levydyn/errors.hpp"
#include "levydyn/rng.hpp"

using namespace levydyn;

namespace {

std::vector<Region> iid_regions(std::size_t count, std::size_t size, std::uint64_t seed,
                                double drift = 0.0, double var_ramp = 0.0) {
  Rng rng = stream_rng(seed, StreamTag::user, 0, 0);
  std::vector<Region> out(count);
  for (std::size_t j = 0; j < count; ++j) {
    double frac = static_cast<double>(j) / static_cast<double>(count - 1);
    double sd = std::sqrt(1.0 + var_ramp * frac);
    for (std::size_t i = 0; i < size; ++i) {
      out[j].times.push_back(static_cast<double>(i));
      out[j].values.push_back(drift * frac + sd * std_normal(rng));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("ks distance") {
  std::vector<double> a{1, 2, 3}, b{2, 3, 4}, c{10, 11};
  CHECK(ks_distance(a, a) == 0.0);
  CHECK(ks_distance(a, c) == 1.0);
  CHECK(ks_distance(a, b) == doctest::Approx(1.0 / 3.0));
  CHECK(ks_distance(b, a) == ks_distance(a, b));
  std::vector<double> ties{1, 1, 2}, other{1, 2, 2};
  CHECK(ks_distance(ties, other) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(ks_distance({}, a), InvalidArgument);
}

TEST_CASE("threshold sequence") {
  auto c = threshold_sequence(5, 0.26, 0.1, 1e-6);
  CHECK(c[0] == 0.26);
  for (std::size_t j = 1; j < 5; ++j) {
    CHECK(c[j] < c[j - 1]);
    CHECK(c[j] == doctest::Approx(0.26 * std::pow(1.0 / static_cast<double>(j + 1), 0.1)));
  }
  auto fl = threshold_sequence(50, 1e-5, 5.0, 1e-6);
  CHECK(fl.back() == 1e-6);
  auto zero = threshold_sequence(4, 0.0, 0.1, 1e-6);
  for (double v : zero) CHECK(v == 0.0);
}

TEST_CASE("beta-bernoulli recursion") {
  StationarityOptions opt;
  std::vector<double> d(10, 0.0);
  auto r = stationarity_recursion(d, opt);
  CHECK(r.post_mean.back() == doctest::Approx(11.0 / 12.0));
  opt.c0 = 0.0;
  auto z = stationarity_recursion(d, opt);
  for (int v : z.indicator) CHECK(v == 0);
  CHECK(z.post_mean.back() == doctest::Approx(1.0 / 12.0));
  CHECK(z.verdict == Verdict::inconclusive);
  std::vector<double> many(200, 0.0);
  CHECK(stationarity_recursion(many, opt).verdict == Verdict::nonstationary);
  CHECK_THROWS_AS(stationarity_recursion({0.1}, opt), InvalidArgument);
}

TEST_CASE("stationarity detector on synthetic regions") {
  StationarityOptions opt;
  auto stat = recursive_stationarity_test(iid_regions(200, 100, 1), opt);
  CHECK(stat.post_mean.back() > 0.95);
  CHECK(stat.verdict == Verdict::stationary);
  auto drift = recursive_stationarity_test(iid_regions(200, 100, 2, 30.0), opt);
  CHECK(drift.post_mean.back() < 0.05);
  CHECK(drift.verdict == Verdict::nonstationary);
}

TEST_CASE("covariance stationarity") {
  StationarityOptions opt;
  opt.c0 = 0.5;
  LagBin bin{0.0, 1.5};
  auto white = recursive_cov_stationarity_test(iid_regions(100, 400, 3), bin, opt);
  CHECK(white.verdict == Verdict::stationary);
  auto ramp = recursive_cov_stationarity_test(iid_regions(100, 400, 4, 0.0, 99.0), bin, opt);
  CHECK(ramp.verdict == Verdict::nonstationary);
  std::vector<Region> single{{{0.0}, {1.0}}, {{0.0}, {2.0}}};
  CHECK_THROWS_AS(recursive_cov_stationarity_test(single, bin, opt), UndefinedBin);
}

TEST_CASE("lagged correlation") {
  Rng rng = stream_rng(5, StreamTag::user, 0, 0);
  SpaceTimeDataset d;
  d.locations.resize(15, 1);
  for (int i = 0; i < 15; ++i) d.locations(i, 0) = i;
  for (int k = 0; k < 15; ++k) d.times.push_back(k);
  d.y.resize(15, 15);
  for (int i = 0; i < 15; ++i)
    for (int k = 0; k < 15; ++k) d.y(i, k) = std_normal(rng);
  std::vector<double> edges{0.5, 3, 6, 9, 12};
  auto lb = lagged_correlation(d, edges);
  REQUIRE(lb.correlation.size() == 4);
  for (std::size_t b = 0; b < 4; ++b) {
    REQUIRE(lb.correlation[b].has_value());
    double se = 1.0 / std::sqrt(static_cast<double>(lb.counts[b]));
    // pairs share points, so inflate the independence SE
    CHECK(std::abs(*lb.correlation[b]) < 3.0 * 4.0 * se);
  }

  SpaceTimeDataset two;
  two.locations.resize(2, 1);
  two.locations << 0, 5;
  two.times = {0.0};
  two.y.resize(2, 1);
  two.y << 1, 2;
  auto single = lagged_correlation(two, {0.0, 10.0});
  CHECK(single.counts[0] == 1);
  CHECK_FALSE(single.correlation[0].has_value());
  CHECK_THROWS_AS(lagged_correlation(two, {1.0}), InvalidArgument);
}

TEST_CASE("moving average skips undefined entries") {
  std::vector<std::optional<double>> v{1.0, std::nullopt, 3.0, 5.0};
  auto s = smooth_moving_average(v, 1);
  CHECK(*s[0] == 1.0);
  CHECK_FALSE(s[1].has_value());
  CHECK(*s[2] == 4.0);
  CHECK(*s[3] == 4.0);
}

TEST_CASE("covariance oracle") {
  CovarianceOracleParams prm;
  std::vector<double> s{0.2, -0.1};
  auto r = covariance_oracle_check(prm, s, s, 0.5, 100000, 7);
  CHECK(r.analytic >= 0.0);
  CHECK(std::abs(r.mc - r.analytic) < 3.0 * r.combined_se());
  CovarianceOracleParams twice = prm;
  twice.lambda *= 2.0;
  auto r2 = covariance_oracle_check(twice, s, s, 0.5, 1000, 7);
  auto r1 = covariance_oracle_check(prm, s, s, 0.5, 1000, 7);
  CHECK(r2.analytic == doctest::Approx(2.0 * r1.analytic).epsilon(1e-14));
  std::vector<double> far{40.0, 40.0};
  auto rf = covariance_oracle_check(prm, s, far, 0.5, 20000, 8);
  CHECK(std::abs(rf.analytic) < 1e-12);
  CHECK(std::abs(rf.mc) < 1e-6);
}

TEST_CASE("normality summary") {
  Rng rng(3);
  std::vector<double> normal(20000), heavy(20000), flat(50, 2.0);
  std::cauchy_distribution<double> cauchy;
  for (auto& v : normal) v = std_normal(rng);
  for (auto& v : heavy) v = cauchy(rng);
  auto n = normality_summary(normal);
  CHECK(n.probs.size() == 19);
  CHECK(n.max_deviation < 0.05);
  auto h = normality_summary(heavy);
  CHECK(h.max_deviation > 1.0);
  auto f = normality_summary(flat);
  CHECK(f.degenerate);
  std::ostringstream out;
  write_normality_csv(out, f);
  CHECK(out.str().find("degenerate") != std::string::npos);
}

TEST_CASE("acceptance report formatting") {
  MoveStats st;
  st.birth = {100, 9};
  auto rows = acceptance_report(st);
  CHECK(format_rate(rows[0].rate) == "0.09");
  CHECK(format_rate(rows[1].rate) == "undefined");

  MoveStats paper;
  paper.birth = {4000, 360};
  paper.death = {1000, 726};
  paper.no_change = {4848, 3001};
  auto pr = acceptance_report(paper);
  CHECK(format_rate(pr[0].rate) == "0.09");
  CHECK(format_rate(pr[1].rate) == "0.726");
  CHECK(format_rate(pr[2].rate) == "0.619");
  CHECK(format_rate(pr[5].rate) == "0.415");
  std::ostringstream out;
  write_acceptance_report(out, pr);
  CHECK(out.str().find("ttmcmc_overall,9848,4087,0.415") != std::string::npos);
}
