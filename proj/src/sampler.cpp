#include "levydyn/sampler.hpp"

#include <algorithm>
#include <boost/math/distributions/gamma.hpp>
#include <cmath>

#include "levydyn/errors.hpp"

namespace levydyn {

namespace {

double inv_gamma_median(const InvGammaPrior& ig) {
  boost::math::gamma_distribution<double> g(ig.shape, 1.0);
  return ig.scale / boost::math::quantile(g, 0.5);
}

double clamp_log(double v) { return std::clamp(v, log_lower, log_upper); }

double normal_residual_loglik(double rss, std::size_t count, double var) {
  return -0.5 * static_cast<double>(count) * std::log(2.0 * M_PI * var) - 0.5 * rss / var;
}

}  // namespace

void gibbs_update_zeta(ModelState& state, const ModelContext& ctx, const ZetaSums& sums,
                       const SamplerConfig& cfg, Rng& rng) {
  const ModelOptions& opt = ctx.options();
  const PriorConfig& prior = opt.prior;
  ScalarHypers& h = state.hypers;

  auto lg = lambda_conditional(sums.sum_j, ctx.m(), prior);
  h.lambda = gamma_draw(rng, lg.shape, lg.rate);

  if (opt.effects == EffectsMode::marginalized && opt.fixed_sigma_sq_phi > 0.0) {
    const double extra = opt.fixed_sigma_sq_phi;
    auto log_target = [&](double s) {
      return log_inv_gamma(s, prior.sigma_sq_eps) + std::log(s) +
             normal_residual_loglik(sums.rss, sums.count, s + extra);
    };
    double cur = h.sigma_sq_eps;
    double prop = cur * std::exp(cfg.eps_rw_step * std_normal(rng));
    if (std::log(uniform01(rng)) < log_target(prop) - log_target(cur)) h.sigma_sq_eps = prop;
  } else {
    auto ig = sigma_sq_eps_conditional(sums.rss, sums.count, prior);
    h.sigma_sq_eps = inv_gamma_draw(rng, ig.shape, ig.scale);
  }

  EffectsSums es{sums.resid_sum, sums.phi_sq_dev, sums.count};
  auto eu = gibbs_update_alpha_and_variances(state, ctx, es, rng);
  h.alpha = eu.alpha;
  h.sigma_sq_alpha = eu.sigma_sq_alpha;
  h.sigma_sq_phi = eu.sigma_sq_phi;

  for (std::size_t l = 0; l < ctx.p(); ++l) {
    double z = state.theta[state.theta.z_idx(l)];
    auto nc = nu_conditional(z, h.omega_sq[l], prior.nu_var);
    h.nu[l] = nc.mean + std::sqrt(nc.var) * std_normal(rng);
    auto oc = omega_sq_conditional(z, h.nu[l], prior.omega_sq);
    h.omega_sq[l] = inv_gamma_draw(rng, oc.shape, oc.scale);
  }
}

ModelState initial_state(const ModelContext& ctx, const SamplerConfig& cfg) {
  const ModelOptions& opt = ctx.options();
  const PriorConfig& prior = opt.prior;
  const std::size_t p = ctx.p(), m = ctx.m();
  ModelState st;
  st.theta = GlobalParams(p, ctx.ar_mode());
  GlobalParams& th = st.theta;
  ScalarHypers& h = st.hypers;
  h.nu.assign(p, 0.0);
  h.omega_sq.assign(p, inv_gamma_median(prior.omega_sq));
  for (std::size_t l = 0; l < p; ++l) {
    th[th.z_idx(l)] = std::clamp(0.6745 * std::sqrt(h.omega_sq[l]), -z_bound, z_bound);
    th[th.c_tilde_idx(l)] = clamp_log(std::log(inv_gamma_median(prior.c_tilde)));
    th[th.c_idx(l)] = clamp_log(std::log(inv_gamma_median(prior.c)));
    th[th.sigma_tilde_idx(l)] = clamp_log(std::log(inv_gamma_median(prior.sigma_tilde_sq)));
    th[th.rho_mu_idx(l)] = 0.0;
    th[th.sigma_mu_idx(l)] = clamp_log(std::log(inv_gamma_median(prior.sigma_sq_mu)));
  }
  th[th.tau_idx()] = clamp_log(std::log(inv_gamma_median(prior.tau)));
  th[th.xi_idx()] = clamp_log(std::log(inv_gamma_median(prior.xi)));
  th[th.rho_beta_idx()] = 0.0;
  th[th.sigma_beta_idx()] = clamp_log(std::log(inv_gamma_median(prior.sigma_sq_beta)));

  const double lambda0 = prior.lambda_shape / prior.lambda_rate;
  h.lambda = lambda0;
  h.sigma_sq_eps = inv_gamma_median(prior.sigma_sq_eps);
  h.mu_alpha = prior.mu_alpha;
  h.alpha = opt.estimate_alpha ? prior.mu_alpha : 0.0;
  h.sigma_sq_alpha = inv_gamma_median(prior.sigma_sq_alpha);
  switch (opt.effects) {
    case EffectsMode::explicit_effects: h.sigma_sq_phi = inv_gamma_median(prior.sigma_sq_phi); break;
    case EffectsMode::marginalized: h.sigma_sq_phi = opt.fixed_sigma_sq_phi; break;
    case EffectsMode::none: h.sigma_sq_phi = 0.0; break;
  }

  auto j0 = static_cast<std::size_t>(std::max(1.0, std::round(lambda0)));
  j0 = std::min(j0, opt.j_max);
  Rng rng = stream_rng(cfg.seed, StreamTag::init, 0, 0);
  auto marginal_sd = [](const ArSpec& s) {
    double v = s.sigma_sq;
    if (s.mode == ArMode::regular_ar1) v /= 1.0 - s.rho * s.rho;
    return std::sqrt(v);
  };
  const double sd_beta = marginal_sd(th.beta_ar());
  st.atoms.assign(m, LatentAtoms(p));
  std::vector<double> mu(p);
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t j = 0; j < j0; ++j) {
      double b = sd_beta * std_normal(rng);
      for (std::size_t l = 0; l < p; ++l)
        mu[l] = std::clamp(marginal_sd(th.mu_ar(l)) * std_normal(rng), -mu_bound, mu_bound);
      st.atoms[k].push_back(b, mu);
    }
  if (opt.effects == EffectsMode::explicit_effects) st.phi = ctx.phi0();
  return st;
}

Sampler::Sampler(std::shared_ptr<ModelContext> ctx, SamplerConfig cfg)
    : ctx_(std::move(ctx)), cfg_(cfg), pool_(cfg.workers) {
  cfg_.validate();
  state_ = initial_state(*ctx_, cfg_);
  refresh();
}

Sampler::Sampler(std::shared_ptr<ModelContext> ctx, SamplerConfig cfg, ModelState state)
    : ctx_(std::move(ctx)), cfg_(cfg), pool_(cfg.workers) {
  cfg_.validate();
  set_state(std::move(state));
}

void Sampler::set_state(ModelState state) {
  check_state(state, *ctx_);
  state_ = std::move(state);
  refresh();
}

void Sampler::set_response(const Eigen::MatrixXd& y) { ctx_->set_response(y); }

void Sampler::refresh() {
  mapped_ = mapped_locations(state_.theta, *ctx_);
  const KernelParams kp = state_.theta.kernel();
  f_.resize(static_cast<Eigen::Index>(ctx_->n()), static_cast<Eigen::Index>(ctx_->m()));
  for (std::size_t k = 0; k < ctx_->m(); ++k)
    f_column(mapped_, ctx_->time(k), state_.atoms[k], kp, f_.col(static_cast<Eigen::Index>(k)).data());
}

void Sampler::update_blocks(Parity parity, std::size_t r) {
  const WorkPlan plan = schedule_parity(ctx_->m(), parity, cfg_.workers);
  std::vector<MoveStats> local(ctx_->m());
  BlockInputs base{ctx_.get(), &state_, &mapped_, state_.theta.kernel(), 0};
  pool_.run(plan, [&](std::size_t k) {
    BlockInputs in = base;
    in.k = k;
    Rng rng = stream_rng(cfg_.seed, StreamTag::block, k, r);
    BlockState bs;
    bs.atoms = state_.atoms[k];
    const auto kk = static_cast<Eigen::Index>(k);
    bs.f.assign(f_.col(kk).data(), f_.col(kk).data() + f_.rows());
    bs.log_target = block_log_target(in, bs.atoms, bs.f.data());
    update_time_block(in, bs, cfg_, rng, local[k]);
    state_.atoms[k] = std::move(bs.atoms);
    std::copy(bs.f.begin(), bs.f.end(), f_.col(kk).data());
  });
  for (const auto& s : local) stats_.merge(s);
}

Sampler::ThetaEval Sampler::evaluate_theta(const GlobalParams& theta) {
  ThetaEval ev;
  double head = log_prior_theta(theta, ctx_->prior());
  if (head == neg_inf) return ev;
  head += map_variable_log_density(theta, state_.hypers);
  ev.mapped = mapped_locations(theta, *ctx_);
  const KernelParams kp = theta.kernel();
  const std::size_t m = ctx_->m();
  ev.f.resize(static_cast<Eigen::Index>(ctx_->n()), static_cast<Eigen::Index>(m));
  std::vector<double> partial(m);
  pool_.parallel_for(m, [&](std::size_t k) {
    double* col = ev.f.col(static_cast<Eigen::Index>(k)).data();
    f_column(ev.mapped, ctx_->time(k), state_.atoms[k], kp, col);
    partial[k] = atoms_log_density(theta, state_.atoms[k], k > 0 ? &state_.atoms[k - 1] : nullptr,
                                   ctx_->gap(k)) +
                 column_log_likelihood(state_, *ctx_, k, col);
  });
  ev.log_target = head + reduce_sum(partial);
  return ev;
}

double Sampler::current_theta_target() {
  const GlobalParams& theta = state_.theta;
  double head = log_prior_theta(theta, ctx_->prior());
  if (head == neg_inf) return neg_inf;
  head += map_variable_log_density(theta, state_.hypers);
  const std::size_t m = ctx_->m();
  std::vector<double> partial(m);
  pool_.parallel_for(m, [&](std::size_t k) {
    const double* col = f_.col(static_cast<Eigen::Index>(k)).data();
    partial[k] = atoms_log_density(theta, state_.atoms[k], k > 0 ? &state_.atoms[k - 1] : nullptr,
                                   ctx_->gap(k)) +
                 column_log_likelihood(state_, *ctx_, k, col);
  });
  return head + reduce_sum(partial);
}

bool Sampler::try_theta(const GlobalParams& proposal, double log_jacobian, double u) {
  if (!proposal.in_bounds()) return false;
  const double cur = current_theta_target();
  ThetaEval prop = evaluate_theta(proposal);
  if (prop.log_target == neg_inf) return false;
  if (std::log(u) < prop.log_target - cur + log_jacobian) {
    state_.theta = proposal;
    mapped_ = std::move(prop.mapped);
    f_ = std::move(prop.f);
    return true;
  }
  return false;
}

void Sampler::update_theta(std::size_t r) {
  Rng rng = stream_rng(cfg_.seed, StreamTag::theta, 0, r);
  GlobalParams prop = state_.theta;
  double log_jac = 0.0;
  if (uniform01(rng) < cfg_.p_tilde) {
    const double step = cfg_.scale * std::abs(std_normal(rng));
    for (auto& v : prop.raw()) v += random_sign(rng) * step;
  } else {
    const double eps = floored_uniform(rng, cfg_.mult_floor);
    std::vector<int> b(prop.size());
    for (auto& v : b) v = static_cast<int>(std::floor(3.0 * uniform01(rng))) - 1;
    for (std::size_t i = 0; i < prop.size(); ++i) {
      if (b[i] == 1) prop[i] *= eps;
      else if (b[i] == -1) prop[i] /= eps;
    }
    log_jac = tmcmc_log_jacobian(eps, b);
  }
  const double u = uniform01(rng);
  stats_.tmcmc.record(try_theta(prop, log_jac, u));
}

void Sampler::enhance_theta(std::size_t r) {
  Rng rng = stream_rng(cfg_.seed, StreamTag::enhance, 0, r);
  GlobalParams prop = state_.theta;
  double log_jac = 0.0;
  if (uniform01(rng) < cfg_.q_tilde) {
    const double shift = random_sign(rng) * cfg_.shrink * cfg_.scale * std::abs(std_normal(rng));
    for (auto& v : prop.raw()) v += shift;
  } else {
    const double eps = floored_uniform(rng, cfg_.mult_floor);
    const int b = random_sign(rng);
    for (auto& v : prop.raw()) v = b == 1 ? v * eps : v / eps;
    log_jac = b * static_cast<double>(prop.size()) * std::log(std::abs(eps));
  }
  const double u = uniform01(rng);
  stats_.enhancement.record(try_theta(prop, log_jac, u));
}

void Sampler::update_phi(std::size_t r) {
  if (ctx_->options().effects != EffectsMode::explicit_effects) return;
  const ScalarHypers h = state_.hypers;
  pool_.parallel_for(ctx_->m(), [&](std::size_t k) {
    Rng rng = stream_rng(cfg_.seed, StreamTag::phi, k, r);
    const auto kk = static_cast<Eigen::Index>(k);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(ctx_->n()); ++i)
      state_.phi(i, kk) = gibbs_update_phi(ctx_->y()(i, kk), f_(i, kk), h.alpha, h.sigma_sq_phi,
                                           h.sigma_sq_eps, ctx_->phi0()(i, kk), rng);
  });
}

void Sampler::update_zeta(std::size_t r) {
  const std::size_t m = ctx_->m(), n = ctx_->n();
  std::vector<double> rss(m), resid(m), dev(m);
  const bool explicit_mode = ctx_->options().effects == EffectsMode::explicit_effects;
  pool_.parallel_for(m, [&](std::size_t k) {
    const auto kk = static_cast<Eigen::Index>(k);
    double a = 0.0, b = 0.0, c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      double off = observation_mean_offset(state_, *ctx_, i, k) - state_.hypers.alpha;
      double res = ctx_->y()(ii, kk) - off - f_(ii, kk);
      double full = res - state_.hypers.alpha;
      a += full * full;
      b += res;
      if (explicit_mode) {
        double d = state_.phi(ii, kk) - ctx_->phi0()(ii, kk);
        c += d * d;
      }
    }
    rss[k] = a;
    resid[k] = b;
    dev[k] = c;
  });
  ZetaSums sums;
  for (const auto& a : state_.atoms) sums.sum_j += a.count();
  sums.rss = reduce_sum(rss);
  sums.resid_sum = reduce_sum(resid);
  sums.phi_sq_dev = reduce_sum(dev);
  sums.count = n * m;
  Rng rng = stream_rng(cfg_.seed, StreamTag::zeta, 0, r);
  gibbs_update_zeta(state_, *ctx_, sums, cfg_, rng);
}

void Sampler::iterate(std::size_t r) {
  update_blocks(Parity::odd, r);
  update_blocks(Parity::even, r);
  update_theta(r);
  enhance_theta(r);
  update_phi(r);
  update_zeta(r);
}

ChainSample Sampler::snapshot(std::size_t r) const {
  ChainSample s;
  s.iteration = r;
  s.theta = state_.theta;
  s.hypers = state_.hypers;
  s.atoms = state_.atoms;
  if (cfg_.store_phi && ctx_->options().effects == EffectsMode::explicit_effects) s.phi = state_.phi;
  return s;
}

ChainResult Sampler::run() {
  ChainResult out;
  out.samples.reserve(cfg_.stored_count());
  for (std::size_t r = 0; r < cfg_.iterations; ++r) {
    iterate(r);
    if (r >= cfg_.burn_in && (r - cfg_.burn_in + 1) % cfg_.thin == 0)
      out.samples.push_back(snapshot(r));
  }
  out.stats = stats_;
  return out;
}

ChainResult run_chain(const SpaceTimeDataset& data, const SamplerConfig& cfg,
                      const ModelOptions& options) {
  cfg.validate();
  if (!data.stats && !options.estimate_alpha)
    throw ConfigError("run_chain: data must be standardized unless alpha is estimated");
  auto ctx = std::make_shared<ModelContext>(data, options);
  Sampler sampler(ctx, cfg);
  return sampler.run();
}

}  // namespace levydyn
