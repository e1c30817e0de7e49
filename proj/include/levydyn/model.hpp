#pragma once

#include <Eigen/Dense>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "levydyn/dataset.hpp"
#include "levydyn/temporal.hpp"

namespace levydyn {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// Truncation bounds of the reparameterized quantities.
inline constexpr double log_lower = -20.0;
inline constexpr double log_upper = 5.0;
inline constexpr double z_bound = 10.0;
inline constexpr double rho_raw_bound = 10.0;
inline constexpr double mu_bound = 10.0;

struct InvGammaPrior {
  double shape = 2.01;
  double scale = 1.01;
};

struct PriorConfig {
  InvGammaPrior c_tilde, c, sigma_tilde_sq, tau, xi, sigma_sq_mu, sigma_sq_beta, omega_sq;
  InvGammaPrior sigma_sq_eps{1e4, 1.0};
  InvGammaPrior sigma_sq_alpha{1e4, 1.0};
  InvGammaPrior sigma_sq_phi{1e4, 1.0};
  double lambda_rate = 0.001;
  double lambda_shape = 0.01;
  double nu_var = 100.0;
  double rho_var = 100.0;
  double mu_alpha = 0.0;
  void validate() const;
};

enum class EffectsMode { marginalized, explicit_effects, none };

struct ModelOptions {
  EffectsMode effects = EffectsMode::marginalized;
  bool estimate_alpha = false;
  // Marginalized mode keeps sigma_sq_phi fixed at this value.
  double fixed_sigma_sq_phi = 0.0;
  int r = 2;
  std::size_t j_max = 50;
  PriorConfig prior;
};

struct KernelParams {
  std::vector<double> tilde_sigma_sq;
  double tau = 1.0;
  double xi = 1.0;
};

struct MonotoneMapParams {
  std::vector<double> c, c_tilde, x;
  int r = 2;
};

struct MonotoneMapFit {
  std::vector<std::vector<double>> knots;   // per dim, ascending
  std::vector<std::vector<double>> values;  // M_l at the knots
};

struct LatentAtoms {
  std::size_t p = 1;
  std::vector<double> beta;
  std::vector<double> mu;  // row-major J x p

  LatentAtoms() = default;
  explicit LatentAtoms(std::size_t dim) : p(dim) {}

  std::size_t count() const { return beta.size(); }
  std::span<const double> mu_row(std::size_t j) const { return {mu.data() + j * p, p}; }
  double& mu_at(std::size_t j, std::size_t l) { return mu[j * p + l]; }
  double mu_at(std::size_t j, std::size_t l) const { return mu[j * p + l]; }
  // Coordinate c of atom j: 0 is beta, 1..p are mu components.
  double coord(std::size_t j, std::size_t c) const { return c == 0 ? beta[j] : mu[j * p + c - 1]; }
  double& coord(std::size_t j, std::size_t c) { return c == 0 ? beta[j] : mu[j * p + c - 1]; }
  void push_back(double b, std::span<const double> m);
  void pop_back();
  bool within_bounds() const;
  bool operator==(const LatentAtoms&) const = default;
};

// The TMCMC block. Layout:
// z (p), log c_tilde (p), log c (p), log sigma_tilde_sq (p), log tau, log xi,
// rho_raw_mu (p), log sigma_sq_mu (p), rho_raw_beta, log sigma_sq_beta.
class GlobalParams {
 public:
  GlobalParams() = default;
  GlobalParams(std::size_t p, ArMode mode);

  std::size_t p() const { return p_; }
  std::size_t size() const { return values_.size(); }
  ArMode mode() const { return mode_; }
  std::vector<double>& raw() { return values_; }
  const std::vector<double>& raw() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::size_t z_idx(std::size_t l) const { return l; }
  std::size_t c_tilde_idx(std::size_t l) const { return p_ + l; }
  std::size_t c_idx(std::size_t l) const { return 2 * p_ + l; }
  std::size_t sigma_tilde_idx(std::size_t l) const { return 3 * p_ + l; }
  std::size_t tau_idx() const { return 4 * p_; }
  std::size_t xi_idx() const { return 4 * p_ + 1; }
  std::size_t rho_mu_idx(std::size_t l) const { return 4 * p_ + 2 + l; }
  std::size_t sigma_mu_idx(std::size_t l) const { return 5 * p_ + 2 + l; }
  std::size_t rho_beta_idx() const { return 6 * p_ + 2; }
  std::size_t sigma_beta_idx() const { return 6 * p_ + 3; }

  enum class Kind { z, log_scale, rho_raw };
  Kind kind(std::size_t i) const;
  bool in_bounds() const;

  double x(std::size_t l) const;
  KernelParams kernel() const;
  MonotoneMapParams map_params(int r) const;
  ArSpec mu_ar(std::size_t l) const;
  ArSpec beta_ar() const;
  std::vector<std::string> names() const;

  static double rho_from_raw(double raw, ArMode mode);
  static double raw_from_rho(double rho, ArMode mode);

  bool operator==(const GlobalParams&) const = default;

 private:
  std::size_t p_ = 0;
  ArMode mode_ = ArMode::iar;
  std::vector<double> values_;
};

struct ScalarHypers {
  double lambda = 10.0;
  double sigma_sq_eps = 1.0;
  double alpha = 0.0;
  double sigma_sq_alpha = 1.0;
  double sigma_sq_phi = 0.0;
  double mu_alpha = 0.0;
  std::vector<double> nu, omega_sq;
  bool operator==(const ScalarHypers&) const = default;
};

struct ModelState {
  GlobalParams theta;
  ScalarHypers hypers;
  std::vector<LatentAtoms> atoms;  // one per time index
  Eigen::MatrixXd phi;             // explicit mode only
};

// Precomputed, read-only view of a dataset for model evaluation.
class ModelContext {
 public:
  ModelContext(SpaceTimeDataset data, ModelOptions options);

  const SpaceTimeDataset& data() const { return data_; }
  const ModelOptions& options() const { return options_; }
  const PriorConfig& prior() const { return options_.prior; }
  std::size_t n() const { return data_.n(); }
  std::size_t m() const { return data_.m(); }
  std::size_t p() const { return data_.p(); }
  ArMode ar_mode() const { return ar_mode_; }
  double gap(std::size_t k) const { return gaps_[k]; }
  double time(std::size_t k) const { return data_.times[k]; }
  const Eigen::MatrixXd& y() const { return data_.y; }
  const Eigen::MatrixXd& phi0() const { return phi0_; }
  const std::vector<std::vector<double>>& knots() const { return knots_; }
  std::size_t knot_index(std::size_t i, std::size_t l) const { return knot_index_[i * p() + l]; }

  // Replaces the response and recomputes the baselines.
  void set_response(const Eigen::MatrixXd& y);

 private:
  SpaceTimeDataset data_;
  ModelOptions options_;
  ArMode ar_mode_;
  std::vector<double> gaps_;
  std::vector<std::vector<double>> knots_;
  std::vector<std::size_t> knot_index_;
  Eigen::MatrixXd phi0_;
};

double kernel_eval(std::span<const double> delta_s, double delta_t, const KernelParams& kp);

MonotoneMapFit monotone_map_fit(const std::vector<std::vector<double>>& coords_per_dim,
                                const MonotoneMapParams& mp);
double monotone_map_extend(double s_new, std::size_t dim, const MonotoneMapFit& fit,
                           const MonotoneMapParams& mp);

double f_eval(std::span<const double> mapped_s, double t, const LatentAtoms& atoms,
              const KernelParams& kp);

double log_observation_density(double y, double alpha, double phi, double f,
                               double sigma_sq_eff);

double log_inv_gamma(double x, const InvGammaPrior& prior);
// Density of log(x) when x ~ IG, i.e. includes the Jacobian x.
double log_inv_gamma_log_scale(double log_x, const InvGammaPrior& prior);
double log_gamma_density(double x, double shape, double rate);
double poisson_log_mass(std::size_t j, double lambda);

double log_prior_theta(const GlobalParams& theta, const PriorConfig& prior);
double log_prior_hypers(const ScalarHypers& hypers, const ModelOptions& options);
double log_prior(const GlobalParams& theta, const ScalarHypers& hypers,
                 const ModelOptions& options);

// Sum of N(z_l; nu_l, omega_sq_l).
double map_variable_log_density(const GlobalParams& theta, const ScalarHypers& hypers);

// Mapped training locations, n x p.
Eigen::MatrixXd mapped_locations(const GlobalParams& theta, const ModelContext& ctx);

// f at all n training locations for time index k.
void f_column(const Eigen::MatrixXd& mapped, double t, const LatentAtoms& atoms,
              const KernelParams& kp, double* out);

// AR factors of the atoms at k given the atoms at k-1 (prev == nullptr at k = 0).
// Atom j pairs with atom j of the previous time when it exists; otherwise the
// initial density applies.
double atoms_log_density(const GlobalParams& theta, const LatentAtoms& curr,
                         const LatentAtoms* prev, double gap);

double observation_mean_offset(const ModelState& state, const ModelContext& ctx,
                               std::size_t i, std::size_t k);
double observation_variance(const ScalarHypers& hypers, const ModelOptions& options);

// Likelihood of column k given f values for that column.
double column_log_likelihood(const ModelState& state, const ModelContext& ctx, std::size_t k,
                             const double* f);

double log_joint_posterior(const ModelState& state, const ModelContext& ctx);

void check_state(const ModelState& state, const ModelContext& ctx);

}  // namespace levydyn
