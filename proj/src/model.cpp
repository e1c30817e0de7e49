#include "levydyn/model.hpp"

#include <algorithm>
#include <cmath>

#include "levydyn/errors.hpp"
#include "levydyn/random_effects.hpp"

namespace levydyn {

void PriorConfig::validate() const {
  for (const auto* ig : {&c_tilde, &c, &sigma_tilde_sq, &tau, &xi, &sigma_sq_mu, &sigma_sq_beta,
                         &omega_sq, &sigma_sq_eps, &sigma_sq_alpha, &sigma_sq_phi})
    if (!(ig->shape > 0.0) || !(ig->scale > 0.0))
      throw ConfigError("prior: inverse-gamma parameters must be positive");
  if (!(lambda_shape > 0.0) || !(lambda_rate > 0.0))
    throw ConfigError("prior: gamma parameters must be positive");
  if (!(nu_var > 0.0) || !(rho_var > 0.0)) throw ConfigError("prior: variances must be positive");
}

void LatentAtoms::push_back(double b, std::span<const double> m) {
  if (m.size() != p) throw InvalidArgument("atoms: mu dimension mismatch");
  beta.push_back(b);
  mu.insert(mu.end(), m.begin(), m.end());
}

void LatentAtoms::pop_back() {
  if (beta.empty()) throw InvalidState("atoms: pop from empty set");
  beta.pop_back();
  mu.resize(mu.size() - p);
}

bool LatentAtoms::within_bounds() const {
  for (double v : mu)
    if (!(std::abs(v) <= mu_bound)) return false;
  for (double v : beta)
    if (!std::isfinite(v)) return false;
  return true;
}

GlobalParams::GlobalParams(std::size_t p, ArMode mode)
    : p_(p), mode_(mode), values_(6 * p + 4, 0.0) {
  if (p == 0) throw InvalidArgument("theta: p must be >= 1");
}

GlobalParams::Kind GlobalParams::kind(std::size_t i) const {
  if (i < p_) return Kind::z;
  if (i == rho_beta_idx()) return Kind::rho_raw;
  if (i >= rho_mu_idx(0) && i < rho_mu_idx(0) + p_) return Kind::rho_raw;
  return Kind::log_scale;
}

bool GlobalParams::in_bounds() const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    double v = values_[i];
    switch (kind(i)) {
      case Kind::z:
        if (!(std::abs(v) <= z_bound)) return false;
        break;
      case Kind::rho_raw:
        if (!(std::abs(v) <= rho_raw_bound)) return false;
        break;
      case Kind::log_scale:
        if (!(v >= log_lower && v <= log_upper)) return false;
        break;
    }
  }
  return true;
}

double GlobalParams::x(std::size_t l) const { return std::abs(values_[z_idx(l)]); }

KernelParams GlobalParams::kernel() const {
  KernelParams kp;
  kp.tilde_sigma_sq.resize(p_);
  for (std::size_t l = 0; l < p_; ++l) kp.tilde_sigma_sq[l] = std::exp(values_[sigma_tilde_idx(l)]);
  kp.tau = std::exp(values_[tau_idx()]);
  kp.xi = std::exp(values_[xi_idx()]);
  return kp;
}

MonotoneMapParams GlobalParams::map_params(int r) const {
  MonotoneMapParams mp;
  mp.r = r;
  for (std::size_t l = 0; l < p_; ++l) {
    mp.c.push_back(std::exp(values_[c_idx(l)]));
    mp.c_tilde.push_back(std::exp(values_[c_tilde_idx(l)]));
    mp.x.push_back(x(l));
  }
  return mp;
}

double GlobalParams::rho_from_raw(double raw, ArMode mode) {
  double s = 1.0 / (1.0 + std::exp(-raw));
  return mode == ArMode::iar ? s : std::tanh(0.5 * raw);
}

double GlobalParams::raw_from_rho(double rho, ArMode mode) {
  if (mode == ArMode::iar) return std::log(rho / (1.0 - rho));
  return 2.0 * std::atanh(rho);
}

ArSpec GlobalParams::mu_ar(std::size_t l) const {
  return {rho_from_raw(values_[rho_mu_idx(l)], mode_), std::exp(values_[sigma_mu_idx(l)]), mode_};
}

ArSpec GlobalParams::beta_ar() const {
  return {rho_from_raw(values_[rho_beta_idx()], mode_), std::exp(values_[sigma_beta_idx()]), mode_};
}

std::vector<std::string> GlobalParams::names() const {
  std::vector<std::string> out(values_.size());
  for (std::size_t l = 0; l < p_; ++l) {
    auto s = std::to_string(l + 1);
    out[z_idx(l)] = "z_" + s;
    out[c_tilde_idx(l)] = "log_c_tilde_" + s;
    out[c_idx(l)] = "log_c_" + s;
    out[sigma_tilde_idx(l)] = "log_sigma_tilde_sq_" + s;
    out[rho_mu_idx(l)] = "rho_raw_mu_" + s;
    out[sigma_mu_idx(l)] = "log_sigma_sq_mu_" + s;
  }
  out[tau_idx()] = "log_tau";
  out[xi_idx()] = "log_xi";
  out[rho_beta_idx()] = "rho_raw_beta";
  out[sigma_beta_idx()] = "log_sigma_sq_beta";
  return out;
}

ModelContext::ModelContext(SpaceTimeDataset data, ModelOptions options)
    : data_(std::move(data)), options_(std::move(options)) {
  data_.validate();
  options_.prior.validate();
  if (options_.j_max < 1) throw ConfigError("model: j_max must be >= 1");
  if (options_.r < 1) throw ConfigError("model: r must be >= 1");
  ar_mode_ = select_ar_mode(data_.times);
  gaps_ = time_gaps(data_.times);
  const std::size_t n = data_.n(), p = data_.p();
  knots_.resize(p);
  knot_index_.resize(n * p);
  for (std::size_t l = 0; l < p; ++l) {
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = data_.locations(i, l);
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    for (std::size_t i = 0; i < n; ++i)
      knot_index_[i * p + l] = static_cast<std::size_t>(
          std::lower_bound(c.begin(), c.end(), data_.locations(i, l)) - c.begin());
    knots_[l] = std::move(c);
  }
  set_response(data_.y);
}

void ModelContext::set_response(const Eigen::MatrixXd& y) {
  if (y.rows() != data_.y.rows() || y.cols() != data_.y.cols())
    throw InvalidArgument("context: response shape mismatch");
  data_.y = y;
  if (options_.effects == EffectsMode::none)
    phi0_.setZero(y.rows(), y.cols());
  else
    phi0_ = training_baselines(data_);
}

double kernel_eval(std::span<const double> delta_s, double delta_t, const KernelParams& kp) {
  if (delta_s.size() != kp.tilde_sigma_sq.size())
    throw InvalidArgument("kernel_eval: dimension mismatch");
  double q = 0.0;
  for (std::size_t l = 0; l < delta_s.size(); ++l) {
    if (!std::isfinite(delta_s[l])) throw InvalidArgument("kernel_eval: non-finite offset");
    q += kp.tilde_sigma_sq[l] * delta_s[l] * delta_s[l];
  }
  if (!std::isfinite(delta_t)) throw InvalidArgument("kernel_eval: non-finite time offset");
  return std::exp(-0.5 * q - kp.xi * std::abs(delta_t));
}

MonotoneMapFit monotone_map_fit(const std::vector<std::vector<double>>& coords_per_dim,
                                const MonotoneMapParams& mp) {
  const std::size_t p = coords_per_dim.size();
  if (mp.c.size() != p || mp.c_tilde.size() != p || mp.x.size() != p)
    throw InvalidArgument("monotone_map_fit: parameter dimension mismatch");
  MonotoneMapFit fit;
  fit.knots = coords_per_dim;
  fit.values.resize(p);
  for (std::size_t l = 0; l < p; ++l) {
    const auto& s = coords_per_dim[l];
    if (s.empty()) throw InvalidArgument("monotone_map_fit: empty coordinates");
    if (!std::is_sorted(s.begin(), s.end()))
      throw InvalidArgument("monotone_map_fit: coordinates must be sorted");
    const double cx = mp.c[l] * mp.x[l];
    auto& v = fit.values[l];
    v.resize(s.size());
    v[0] = mp.c_tilde[l] - cx * std::pow(std::abs(s[0]), mp.r);
    for (std::size_t i = 1; i < s.size(); ++i) v[i] = v[i - 1] + cx * std::pow(s[i] - s[i - 1], mp.r);
  }
  return fit;
}

double monotone_map_extend(double s_new, std::size_t dim, const MonotoneMapFit& fit,
                           const MonotoneMapParams& mp) {
  if (dim >= fit.knots.size() || fit.knots[dim].empty())
    throw InvalidArgument("monotone_map_extend: no fit for dimension");
  if (!std::isfinite(s_new)) throw InvalidArgument("monotone_map_extend: non-finite input");
  const auto& s = fit.knots[dim];
  const auto& v = fit.values[dim];
  const double cx = mp.c[dim] * mp.x[dim];
  if (s_new < s.front()) return v.front() - cx * std::pow(s.front() - s_new, mp.r);
  auto i = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), s_new) - s.begin()) - 1;
  if (s_new == s[i]) return v[i];
  return v[i] + cx * std::pow(s_new - s[i], mp.r);
}

double f_eval(std::span<const double> mapped_s, double t, const LatentAtoms& atoms,
              const KernelParams& kp) {
  const std::size_t p = mapped_s.size();
  if (atoms.count() > 0 && atoms.p != p) throw InvalidArgument("f_eval: dimension mismatch");
  if (kp.tilde_sigma_sq.size() != p) throw InvalidArgument("f_eval: kernel dimension mismatch");
  double sum = 0.0;
  for (std::size_t j = 0; j < atoms.count(); ++j) {
    double q = 0.0;
    for (std::size_t l = 0; l < p; ++l) {
      double d = mapped_s[l] - atoms.mu_at(j, l);
      q += kp.tilde_sigma_sq[l] * d * d;
    }
    sum += std::exp(-0.5 * q - kp.xi * std::abs(t - kp.tau)) * atoms.beta[j];
  }
  return sum;
}

void f_column(const Eigen::MatrixXd& mapped, double t, const LatentAtoms& atoms,
              const KernelParams& kp, double* out) {
  const auto n = static_cast<std::size_t>(mapped.rows());
  const std::size_t p = atoms.p;
  const double tpart = kp.xi * std::abs(t - kp.tau);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < atoms.count(); ++j) {
      double q = 0.0;
      for (std::size_t l = 0; l < p; ++l) {
        double d = mapped(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) -
                   atoms.mu_at(j, l);
        q += kp.tilde_sigma_sq[l] * d * d;
      }
      sum += std::exp(-0.5 * q - tpart) * atoms.beta[j];
    }
    out[i] = sum;
  }
}

double log_observation_density(double y, double alpha, double phi, double f,
                               double sigma_sq_eff) {
  if (!(sigma_sq_eff > 0.0)) throw InvalidArgument("observation density: variance must be > 0");
  return normal_log_density(y, alpha + phi + f, sigma_sq_eff);
}

double log_inv_gamma(double x, const InvGammaPrior& prior) {
  if (!(x > 0.0)) return neg_inf;
  const double a = prior.shape, b = prior.scale;
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

double log_inv_gamma_log_scale(double log_x, const InvGammaPrior& prior) {
  const double a = prior.shape, b = prior.scale;
  return a * std::log(b) - std::lgamma(a) - a * log_x - b * std::exp(-log_x);
}

double log_gamma_density(double x, double shape, double rate) {
  if (!(x > 0.0)) return neg_inf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double poisson_log_mass(std::size_t j, double lambda) {
  double jd = static_cast<double>(j);
  return jd * std::log(lambda) - lambda - std::lgamma(jd + 1.0);
}

double log_prior_theta(const GlobalParams& theta, const PriorConfig& prior) {
  if (!theta.in_bounds()) return neg_inf;
  const std::size_t p = theta.p();
  double lp = 0.0;
  for (std::size_t l = 0; l < p; ++l) {
    lp += log_inv_gamma_log_scale(theta[theta.c_tilde_idx(l)], prior.c_tilde);
    lp += log_inv_gamma_log_scale(theta[theta.c_idx(l)], prior.c);
    lp += log_inv_gamma_log_scale(theta[theta.sigma_tilde_idx(l)], prior.sigma_tilde_sq);
    lp += normal_log_density(theta[theta.rho_mu_idx(l)], 0.0, prior.rho_var);
    lp += log_inv_gamma_log_scale(theta[theta.sigma_mu_idx(l)], prior.sigma_sq_mu);
  }
  lp += log_inv_gamma_log_scale(theta[theta.tau_idx()], prior.tau);
  lp += log_inv_gamma_log_scale(theta[theta.xi_idx()], prior.xi);
  lp += normal_log_density(theta[theta.rho_beta_idx()], 0.0, prior.rho_var);
  lp += log_inv_gamma_log_scale(theta[theta.sigma_beta_idx()], prior.sigma_sq_beta);
  return lp;
}

double log_prior_hypers(const ScalarHypers& h, const ModelOptions& options) {
  const PriorConfig& prior = options.prior;
  double lp = log_gamma_density(h.lambda, prior.lambda_shape, prior.lambda_rate);
  lp += log_inv_gamma(h.sigma_sq_eps, prior.sigma_sq_eps);
  for (std::size_t l = 0; l < h.nu.size(); ++l) {
    lp += normal_log_density(h.nu[l], 0.0, prior.nu_var);
    lp += log_inv_gamma(h.omega_sq[l], prior.omega_sq);
  }
  if (options.estimate_alpha) {
    if (!(h.sigma_sq_alpha > 0.0)) return neg_inf;
    lp += normal_log_density(h.alpha, h.mu_alpha, h.sigma_sq_alpha);
    lp += log_inv_gamma(h.sigma_sq_alpha, prior.sigma_sq_alpha);
  }
  if (options.effects == EffectsMode::explicit_effects)
    lp += log_inv_gamma(h.sigma_sq_phi, prior.sigma_sq_phi);
  return lp;
}

double log_prior(const GlobalParams& theta, const ScalarHypers& hypers,
                 const ModelOptions& options) {
  double a = log_prior_theta(theta, options.prior);
  if (a == neg_inf) return neg_inf;
  return a + log_prior_hypers(hypers, options);
}

double map_variable_log_density(const GlobalParams& theta, const ScalarHypers& hypers) {
  double lp = 0.0;
  for (std::size_t l = 0; l < theta.p(); ++l)
    lp += normal_log_density(theta[theta.z_idx(l)], hypers.nu[l], hypers.omega_sq[l]);
  return lp;
}

Eigen::MatrixXd mapped_locations(const GlobalParams& theta, const ModelContext& ctx) {
  const std::size_t n = ctx.n(), p = ctx.p();
  MonotoneMapParams mp = theta.map_params(ctx.options().r);
  MonotoneMapFit fit = monotone_map_fit(ctx.knots(), mp);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < p; ++l)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) =
          fit.values[l][ctx.knot_index(i, l)];
  return out;
}

double atoms_log_density(const GlobalParams& theta, const LatentAtoms& curr,
                         const LatentAtoms* prev, double gap) {
  const std::size_t p = theta.p();
  const ArSpec beta_spec = theta.beta_ar();
  std::vector<ArSpec> mu_spec(p);
  for (std::size_t l = 0; l < p; ++l) mu_spec[l] = theta.mu_ar(l);
  const std::size_t paired = prev ? std::min(prev->count(), curr.count()) : 0;
  double lp = 0.0;
  for (std::size_t j = 0; j < curr.count(); ++j) {
    if (j < paired) {
      lp += ar_transition_log_density(curr.beta[j], prev->beta[j], gap, beta_spec);
      for (std::size_t l = 0; l < p; ++l)
        lp += ar_transition_log_density(curr.mu_at(j, l), prev->mu_at(j, l), gap, mu_spec[l]);
    } else {
      lp += ar_initial_log_density(curr.beta[j], beta_spec);
      for (std::size_t l = 0; l < p; ++l) lp += ar_initial_log_density(curr.mu_at(j, l), mu_spec[l]);
    }
  }
  return lp;
}

double observation_variance(const ScalarHypers& hypers, const ModelOptions& options) {
  if (options.effects == EffectsMode::marginalized)
    return hypers.sigma_sq_eps + options.fixed_sigma_sq_phi;
  return hypers.sigma_sq_eps;
}

double observation_mean_offset(const ModelState& state, const ModelContext& ctx, std::size_t i,
                               std::size_t k) {
  const auto ii = static_cast<Eigen::Index>(i), kk = static_cast<Eigen::Index>(k);
  double off = state.hypers.alpha;
  switch (ctx.options().effects) {
    case EffectsMode::marginalized: off += ctx.phi0()(ii, kk); break;
    case EffectsMode::explicit_effects: off += state.phi(ii, kk); break;
    case EffectsMode::none: break;
  }
  return off;
}

double column_log_likelihood(const ModelState& state, const ModelContext& ctx, std::size_t k,
                             const double* f) {
  const double var = observation_variance(state.hypers, ctx.options());
  if (!(var > 0.0)) return neg_inf;
  double ll = 0.0;
  for (std::size_t i = 0; i < ctx.n(); ++i) {
    double mean = observation_mean_offset(state, ctx, i, k) + f[i];
    ll += normal_log_density(ctx.y()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)),
                             mean, var);
  }
  return ll;
}

void check_state(const ModelState& state, const ModelContext& ctx) {
  if (state.theta.p() != ctx.p()) throw InvalidState("state: theta dimension mismatch");
  if (state.atoms.size() != ctx.m()) throw InvalidState("state: need atoms for every time index");
  for (const auto& a : state.atoms) {
    if (a.p != ctx.p() || a.mu.size() != a.count() * a.p)
      throw InvalidState("state: atom dimension mismatch");
  }
  if (state.hypers.nu.size() != ctx.p() || state.hypers.omega_sq.size() != ctx.p())
    throw InvalidState("state: nu/omega dimension mismatch");
  if (ctx.options().effects == EffectsMode::explicit_effects &&
      (static_cast<std::size_t>(state.phi.rows()) != ctx.n() ||
       static_cast<std::size_t>(state.phi.cols()) != ctx.m()))
    throw InvalidState("state: phi must be n x m in explicit mode");
}

double log_joint_posterior(const ModelState& state, const ModelContext& ctx) {
  check_state(state, ctx);
  const ModelOptions& opt = ctx.options();
  double lp = log_prior(state.theta, state.hypers, opt);
  if (lp == neg_inf) return neg_inf;
  lp += map_variable_log_density(state.theta, state.hypers);
  Eigen::MatrixXd mapped = mapped_locations(state.theta, ctx);
  KernelParams kp = state.theta.kernel();
  std::vector<double> f(ctx.n());
  for (std::size_t k = 0; k < ctx.m(); ++k) {
    const LatentAtoms& a = state.atoms[k];
    if (a.count() < 1 || a.count() > opt.j_max || !a.within_bounds()) return neg_inf;
    lp += poisson_log_mass(a.count(), state.hypers.lambda);
    lp += atoms_log_density(state.theta, a, k > 0 ? &state.atoms[k - 1] : nullptr, ctx.gap(k));
    f_column(mapped, ctx.time(k), a, kp, f.data());
    lp += column_log_likelihood(state, ctx, k, f.data());
  }
  if (opt.effects == EffectsMode::explicit_effects) {
    for (std::size_t k = 0; k < ctx.m(); ++k)
      for (std::size_t i = 0; i < ctx.n(); ++i) {
        auto ii = static_cast<Eigen::Index>(i), kk = static_cast<Eigen::Index>(k);
        lp += normal_log_density(state.phi(ii, kk), ctx.phi0()(ii, kk), state.hypers.sigma_sq_phi);
      }
  }
  return lp;
}

}  // namespace levydyn
