#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "levydyn/rng.hpp"

namespace levydyn {

struct Standardization {
  double mean = 0.0;
  double sd = 1.0;
};

struct SpaceTimeDataset {
  Eigen::MatrixXd locations;  // n x p
  std::vector<double> times;  // m, strictly increasing
  Eigen::MatrixXd y;          // n x m
  std::optional<Standardization> stats;

  std::size_t n() const { return static_cast<std::size_t>(locations.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(locations.cols()); }
  std::size_t m() const { return times.size(); }
  void validate() const;
};

std::pair<SpaceTimeDataset, Standardization> standardize(const SpaceTimeDataset& data);
double inverse_transform(double value, const Standardization& stats);
std::vector<double> inverse_transform(const std::vector<double>& values,
                                      const Standardization& stats);

// Long format, header s1,...,sp,t,y. Locations keep first-appearance order.
SpaceTimeDataset read_csv(std::istream& in);
SpaceTimeDataset load_csv(const std::string& path);
void write_csv(const SpaceTimeDataset& data, std::ostream& out);
void write_csv(const SpaceTimeDataset& data, const std::string& path);

// exp(-||a - b||)
double exp_covariance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Zero-mean GP draws with exponential covariance; the factor is computed once.
class GpSampler {
 public:
  explicit GpSampler(const Eigen::MatrixXd& locations);
  Eigen::VectorXd draw(Rng& rng) const;
  const Eigen::MatrixXd& covariance() const { return cov_; }
  double jitter() const { return jitter_; }

 private:
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd lower_;
  double jitter_ = 0.0;
};

Eigen::VectorXd gp_sample(const Eigen::MatrixXd& locations, Rng& rng);

struct GqnConfig {
  std::size_t n = 120;
  std::size_t m = 50;
  std::size_t p = 2;
  std::size_t n_test = 20;
  double coef_sd = 0.001;
  double tan_clamp = 1e6;
  std::uint64_t seed = 1;
  void validate() const;
};

struct GqnResult {
  SpaceTimeDataset train;
  SpaceTimeDataset test;
  Eigen::MatrixXd beta;   // latent state, all n locations x m
  std::vector<std::pair<std::size_t, std::size_t>> clamped;  // (location, time)
};

// beta_k(s_i) = sum_j a_ij beta_{k-1}(s_j)
//               + sum_j sum_l b_ijl beta_{k-1}(s_j) g(beta_{k-1}(s_l)) + eta_k(s_i)
// with g(x) = x^2. b is stored as n blocks of n x n.
struct GqnCoefficients {
  Eigen::MatrixXd a;
  std::vector<Eigen::MatrixXd> b;
};

Eigen::VectorXd gqn_evolve(const Eigen::VectorXd& prev, const GqnCoefficients& coef,
                           const Eigen::VectorXd& eta);

GqnResult gqn_simulate(const GqnConfig& cfg);

}  // namespace levydyn
