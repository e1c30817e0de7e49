#pragma once

#include <Eigen/Dense>
#include <vector>

#include "levydyn/dataset.hpp"
#include "levydyn/model.hpp"
#include "levydyn/rng.hpp"

namespace levydyn {

struct SpaceTimePoint {
  std::vector<double> s;
  double t = 0.0;
};

struct NormalParams {
  double mean = 0.0;
  double var = 1.0;
};

struct GammaParams {
  double shape = 1.0;
  double rate = 1.0;
};

// Training mode: nearest other location at the same time (spatial distance).
// Prediction mode: nearest datum in squared space-time distance.
// Ties are averaged in both modes.
double compute_phi0(const SpaceTimeDataset& data, const SpaceTimePoint& target,
                    bool target_time_on_grid);
double phi0_training(const SpaceTimeDataset& data, std::size_t i, std::size_t k);
double phi0_prediction(const SpaceTimeDataset& data, std::span<const double> s, double t);
Eigen::MatrixXd training_baselines(const SpaceTimeDataset& data);

NormalParams phi_conditional(double y, double f, double alpha, double sigma_sq_phi,
                             double sigma_sq_eps, double phi0);
double gibbs_update_phi(double y, double f, double alpha, double sigma_sq_phi,
                        double sigma_sq_eps, double phi0, Rng& rng);

// resid_sum = sum over observations of (y - offset - f) where offset excludes alpha.
NormalParams alpha_conditional(double resid_sum, std::size_t count, double sigma_sq_alpha,
                               double mu_alpha, double sigma_sq_obs);
InvGammaPrior sigma_sq_alpha_conditional(double alpha, double mu_alpha, const InvGammaPrior& prior);
InvGammaPrior sigma_sq_phi_conditional(double sum_sq_dev, std::size_t count,
                                       const InvGammaPrior& prior);

struct EffectsUpdate {
  double alpha = 0.0;
  double sigma_sq_alpha = 1.0;
  double sigma_sq_phi = 0.0;
};

struct EffectsSums {
  double resid_sum = 0.0;   // sum (y - phi_or_phi0 - f)
  double phi_sq_dev = 0.0;  // sum (phi - phi0)^2
  std::size_t count = 0;
};

// Draws alpha (when estimated), sigma_sq_alpha (when estimated) and
// sigma_sq_phi (explicit mode) from their full conditionals.
EffectsUpdate gibbs_update_alpha_and_variances(const ModelState& state, const ModelContext& ctx,
                                               const EffectsSums& sums, Rng& rng);

}  // namespace levydyn
