#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "levydyn/random_effects.hpp"
#include "levydyn/sampler.hpp"

namespace levydyn {

struct PredictOptions {
  std::vector<double> levels{1.0 / 16.0, 0.5, 15.0 / 16.0};
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

struct PredictionBands {
  std::vector<double> levels;
  Eigen::MatrixXd draws;  // samples x points, original scale
  Eigen::MatrixXd bands;  // points x levels, original scale
};

// Linear interpolation between order statistics (type 7).
double empirical_quantile(std::vector<double> values, double level);

// Index of t on the training grid; throws UnsupportedPrediction otherwise.
std::size_t time_index(const SpaceTimeDataset& data, double t);

PredictionBands posterior_predict(const std::vector<ChainSample>& chain,
                                  const std::vector<SpaceTimePoint>& points,
                                  const ModelContext& ctx, const PredictOptions& options);

}  // namespace levydyn
