#include "levydyn/random_effects.hpp"

#include <cmath>
#include <limits>

#include "levydyn/errors.hpp"

namespace levydyn {

namespace {

double tie_tol(double d) { return 1e-12 * std::max(1.0, d); }

std::vector<std::size_t> spatial_neighbors(const SpaceTimeDataset& data, std::size_t i) {
  std::vector<std::size_t> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < data.n(); ++j) {
    if (j == i) continue;
    double d = (data.locations.row(static_cast<Eigen::Index>(j)) -
                data.locations.row(static_cast<Eigen::Index>(i)))
                   .squaredNorm();
    if (best.empty() || d < best_d - tie_tol(best_d)) {
      best_d = d;
      best.assign(1, j);
    } else if (std::abs(d - best_d) <= tie_tol(best_d)) {
      best.push_back(j);
    }
  }
  if (best.empty()) throw InvalidState("phi0: no neighbor candidates");
  return best;
}

}  // namespace

double phi0_training(const SpaceTimeDataset& data, std::size_t i, std::size_t k) {
  auto nb = spatial_neighbors(data, i);
  double sum = 0.0;
  for (auto j : nb) sum += data.y(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
  return sum / static_cast<double>(nb.size());
}

Eigen::MatrixXd training_baselines(const SpaceTimeDataset& data) {
  Eigen::MatrixXd out(data.y.rows(), data.y.cols());
  for (std::size_t i = 0; i < data.n(); ++i) {
    auto nb = spatial_neighbors(data, i);
    for (std::size_t k = 0; k < data.m(); ++k) {
      double sum = 0.0;
      for (auto j : nb) sum += data.y(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          sum / static_cast<double>(nb.size());
    }
  }
  return out;
}

double phi0_prediction(const SpaceTimeDataset& data, std::span<const double> s, double t) {
  if (s.size() != data.p()) throw InvalidArgument("phi0: dimension mismatch");
  if (data.n() == 0 || data.m() == 0) throw InvalidState("phi0: empty data");
  double best_d = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    double ds = 0.0;
    for (std::size_t l = 0; l < data.p(); ++l) {
      double d = s[l] - data.locations(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l));
      ds += d * d;
    }
    for (std::size_t k = 0; k < data.m(); ++k) {
      double dt = t - data.times[k];
      double d = ds + dt * dt;
      double y = data.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      if (count == 0 || d < best_d - tie_tol(best_d)) {
        best_d = d;
        sum = y;
        count = 1;
      } else if (std::abs(d - best_d) <= tie_tol(best_d)) {
        sum += y;
        ++count;
      }
    }
  }
  return sum / static_cast<double>(count);
}

double compute_phi0(const SpaceTimeDataset& data, const SpaceTimePoint& target,
                    bool target_time_on_grid) {
  if (!target_time_on_grid) return phi0_prediction(data, target.s, target.t);
  if (target.s.size() != data.p()) throw InvalidArgument("phi0: dimension mismatch");
  std::size_t k = data.m();
  for (std::size_t kk = 0; kk < data.m(); ++kk)
    if (data.times[kk] == target.t) k = kk;
  if (k == data.m()) throw InvalidArgument("phi0: training-mode time not on grid");
  // Exclude the target's own location; other locations compete by spatial distance.
  std::size_t self = data.n();
  for (std::size_t i = 0; i < data.n(); ++i) {
    bool same = true;
    for (std::size_t l = 0; l < data.p(); ++l)
      same = same && data.locations(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) ==
                         target.s[l];
    if (same) self = i;
  }
  if (self < data.n()) return phi0_training(data, self, k);
  double best_d = std::numeric_limits<double>::infinity(), sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    double d = 0.0;
    for (std::size_t l = 0; l < data.p(); ++l) {
      double diff = target.s[l] - data.locations(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l));
      d += diff * diff;
    }
    double y = data.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    if (count == 0 || d < best_d - tie_tol(best_d)) {
      best_d = d;
      sum = y;
      count = 1;
    } else if (std::abs(d - best_d) <= tie_tol(best_d)) {
      sum += y;
      ++count;
    }
  }
  if (count == 0) throw InvalidState("phi0: no neighbor candidates");
  return sum / static_cast<double>(count);
}

NormalParams phi_conditional(double y, double f, double alpha, double sigma_sq_phi,
                             double sigma_sq_eps, double phi0) {
  if (!(sigma_sq_phi > 0.0) || !(sigma_sq_eps > 0.0))
    throw InvalidArgument("phi conditional: variances must be positive");
  double var = 1.0 / (1.0 / sigma_sq_phi + 1.0 / sigma_sq_eps);
  double mean = var * (phi0 / sigma_sq_phi + (y - alpha - f) / sigma_sq_eps);
  return {mean, var};
}

double gibbs_update_phi(double y, double f, double alpha, double sigma_sq_phi,
                        double sigma_sq_eps, double phi0, Rng& rng) {
  auto c = phi_conditional(y, f, alpha, sigma_sq_phi, sigma_sq_eps, phi0);
  return c.mean + std::sqrt(c.var) * std_normal(rng);
}

NormalParams alpha_conditional(double resid_sum, std::size_t count, double sigma_sq_alpha,
                               double mu_alpha, double sigma_sq_obs) {
  double var = 1.0 / (1.0 / sigma_sq_alpha + static_cast<double>(count) / sigma_sq_obs);
  double mean = var * (mu_alpha / sigma_sq_alpha + resid_sum / sigma_sq_obs);
  return {mean, var};
}

InvGammaPrior sigma_sq_alpha_conditional(double alpha, double mu_alpha, const InvGammaPrior& prior) {
  double d = alpha - mu_alpha;
  return {prior.shape + 0.5, prior.scale + 0.5 * d * d};
}

InvGammaPrior sigma_sq_phi_conditional(double sum_sq_dev, std::size_t count,
                                       const InvGammaPrior& prior) {
  return {prior.shape + 0.5 * static_cast<double>(count), prior.scale + 0.5 * sum_sq_dev};
}

EffectsUpdate gibbs_update_alpha_and_variances(const ModelState& state, const ModelContext& ctx,
                                               const EffectsSums& sums, Rng& rng) {
  const ModelOptions& opt = ctx.options();
  EffectsUpdate out{state.hypers.alpha, state.hypers.sigma_sq_alpha, state.hypers.sigma_sq_phi};
  if (opt.estimate_alpha) {
    auto c = alpha_conditional(sums.resid_sum, sums.count, out.sigma_sq_alpha,
                               state.hypers.mu_alpha, observation_variance(state.hypers, opt));
    out.alpha = c.mean + std::sqrt(c.var) * std_normal(rng);
    auto ig = sigma_sq_alpha_conditional(out.alpha, state.hypers.mu_alpha, opt.prior.sigma_sq_alpha);
    out.sigma_sq_alpha = inv_gamma_draw(rng, ig.shape, ig.scale);
  }
  if (opt.effects == EffectsMode::explicit_effects) {
    if (sums.phi_sq_dev < 0.0) throw InvalidState("sigma_sq_phi update: negative sum of squares");
    auto ig = sigma_sq_phi_conditional(sums.phi_sq_dev, ctx.n() * ctx.m(), opt.prior.sigma_sq_phi);
    out.sigma_sq_phi = inv_gamma_draw(rng, ig.shape, ig.scale);
  }
  return out;
}

}  // namespace levydyn
