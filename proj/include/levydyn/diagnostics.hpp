#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "levydyn/dataset.hpp"
#include "levydyn/sampler.hpp"

namespace levydyn {

double ks_distance(std::span<const double> a, std::span<const double> b);

enum class Verdict { stationary, nonstationary, inconclusive };
std::string verdict_name(Verdict v);

struct StationarityOptions {
  double c0 = 0.26;
  double decay = 0.1;
  double c_floor = 1e-6;
  double prior_a = 1.0;
  double prior_b = 1.0;
  double lower = 0.05;
  double upper = 0.95;
};

struct StationarityResult {
  std::vector<double> distance;
  std::vector<double> threshold;
  std::vector<int> indicator;
  std::vector<double> post_mean;
  std::vector<double> post_var;
  Verdict verdict = Verdict::inconclusive;
};

struct Region {
  std::vector<double> times;
  std::vector<double> values;
};

// c_1 = c0, c_{j+1} = max(c_j (1 - 1/(j+1))^decay, floor).
std::vector<double> threshold_sequence(std::size_t count, double c0, double decay, double floor);

// Beta-Bernoulli recursion on D_j = 1{distance_j < c_j}.
StationarityResult stationarity_recursion(const std::vector<double>& distances,
                                          const StationarityOptions& opt);

StationarityResult recursive_stationarity_test(const std::vector<Region>& regions,
                                               const StationarityOptions& opt);
StationarityResult recursive_stationarity_test(const SpaceTimeDataset& data,
                                               const StationarityOptions& opt);

struct LagBin {
  double lower = 0.0;
  double upper = 1.5;
};

// Centered covariance over within-region pairs whose time lag lies in the bin;
// lag zero includes each observation with itself.
double lag_covariance(const std::vector<Region>& regions, const LagBin& bin, double center,
                      std::size_t* pairs);

StationarityResult recursive_cov_stationarity_test(const std::vector<Region>& regions,
                                                   const LagBin& bin,
                                                   const StationarityOptions& opt);
StationarityResult recursive_cov_stationarity_test(const SpaceTimeDataset& data, const LagBin& bin,
                                                   const StationarityOptions& opt);

std::vector<Region> regions_from_dataset(const SpaceTimeDataset& data);

struct LagBins {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::vector<std::optional<double>> correlation;
};

LagBins lagged_correlation(const SpaceTimeDataset& data, const std::vector<double>& edges);

// Centered moving average; undefined entries stay undefined and are skipped.
std::vector<std::optional<double>> smooth_moving_average(
    const std::vector<std::optional<double>>& values, std::size_t half_width);

struct CovarianceOracleParams {
  double lambda = 5.0;
  std::vector<double> tilde_sigma_sq{1.0, 1.0};
  double tau = 0.5;
  double xi = 0.5;
  std::vector<double> sigma_sq_mu{1.0, 1.0};
  double sigma_sq_beta = 1.0;
};

struct CovarianceOracleResult {
  double mc = 0.0;
  double analytic = 0.0;
  double mc_se = 0.0;
  double analytic_se = 0.0;
  double combined_se() const;
};

// Same-time covariance of f at two mapped locations over fresh atom draws,
// against lambda * E[K1 K2 beta^2] from an independent run of 10 * n_mc draws.
CovarianceOracleResult covariance_oracle_check(const CovarianceOracleParams& params,
                                               std::span<const double> mapped_s1,
                                               std::span<const double> mapped_s2, double t,
                                               std::size_t n_mc, std::uint64_t seed);

struct NormalitySummary {
  std::vector<double> probs;
  std::vector<double> sample_quantiles;  // standardized sample
  std::vector<double> normal_quantiles;
  double max_deviation = 0.0;
  bool degenerate = false;
};

NormalitySummary normality_summary(std::span<const double> sample);

struct AcceptanceRow {
  std::string move;
  std::uint64_t proposed = 0;
  std::uint64_t accepted = 0;
  std::optional<double> rate;
};

std::vector<AcceptanceRow> acceptance_report(const MoveStats& stats);
std::string format_rate(const std::optional<double>& rate);

void write_acceptance_report(std::ostream& out, const std::vector<AcceptanceRow>& rows);
void write_stationarity_csv(std::ostream& out, const StationarityResult& res);
void write_lag_bins_csv(std::ostream& out, const LagBins& bins);
void write_normality_csv(std::ostream& out, const NormalitySummary& summary);

}  // namespace levydyn
