#include "geweke.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "levydyn/sampler.hpp"

namespace geweke {

using namespace levydyn;

double MomentCheck::z() const {
  return (forward - chain) / std::sqrt(forward_se * forward_se + chain_se * chain_se);
}

double Report::max_abs_z() const {
  double z = 0.0;
  for (const auto& c : checks) z = std::max(z, std::abs(c.z()));
  return z;
}

namespace {

constexpr std::size_t kN = 2, kM = 3;

ModelOptions options() {
  ModelOptions opt;
  opt.effects = EffectsMode::none;
  opt.j_max = 8;
  PriorConfig& pc = opt.prior;
  InvGammaPrior ig{5.0, 4.0};
  pc.c_tilde = pc.c = pc.sigma_tilde_sq = pc.tau = pc.xi = pc.sigma_sq_mu = pc.sigma_sq_beta = ig;
  pc.omega_sq = ig;
  pc.sigma_sq_eps = {5.0, 1.0};
  pc.lambda_shape = 6.0;
  pc.lambda_rate = 2.0;
  pc.nu_var = 1.0;
  pc.rho_var = 1.0;
  return opt;
}

SpaceTimeDataset base_data() {
  SpaceTimeDataset d;
  d.locations.resize(kN, 1);
  d.locations << 0.0, 1.0;
  d.times = {1.0, 2.0, 3.0};
  d.y = Eigen::MatrixXd::Zero(kN, kM);
  return d;
}

double draw_ar(double prev, bool paired, double gap, const ArSpec& s, Rng& rng) {
  if (!paired) {
    double v = s.sigma_sq;
    if (s.mode == ArMode::regular_ar1) v /= 1.0 - s.rho * s.rho;
    return std::sqrt(v) * std_normal(rng);
  }
  double rg = std::pow(s.rho, gap);
  return rg * prev + std::sqrt(s.sigma_sq * (1.0 - rg * rg)) * std_normal(rng);
}

// One exact draw from the truncated joint by rejection of the whole hierarchy.
ModelState forward_draw(const ModelContext& ctx, Rng& rng) {
  const ModelOptions& opt = ctx.options();
  const PriorConfig& pc = opt.prior;
  std::poisson_distribution<std::size_t> pois;
  for (;;) {
    ModelState st;
    st.theta = GlobalParams(1, ctx.ar_mode());
    GlobalParams& th = st.theta;
    ScalarHypers& h = st.hypers;
    h.nu = {std::sqrt(pc.nu_var) * std_normal(rng)};
    h.omega_sq = {inv_gamma_draw(rng, pc.omega_sq.shape, pc.omega_sq.scale)};
    th[th.z_idx(0)] = h.nu[0] + std::sqrt(h.omega_sq[0]) * std_normal(rng);
    auto log_ig = [&](const InvGammaPrior& ig) { return std::log(inv_gamma_draw(rng, ig.shape, ig.scale)); };
    th[th.c_tilde_idx(0)] = log_ig(pc.c_tilde);
    th[th.c_idx(0)] = log_ig(pc.c);
    th[th.sigma_tilde_idx(0)] = log_ig(pc.sigma_tilde_sq);
    th[th.tau_idx()] = log_ig(pc.tau);
    th[th.xi_idx()] = log_ig(pc.xi);
    th[th.rho_mu_idx(0)] = std::sqrt(pc.rho_var) * std_normal(rng);
    th[th.sigma_mu_idx(0)] = log_ig(pc.sigma_sq_mu);
    th[th.rho_beta_idx()] = std::sqrt(pc.rho_var) * std_normal(rng);
    th[th.sigma_beta_idx()] = log_ig(pc.sigma_sq_beta);
    if (!th.in_bounds()) continue;

    h.lambda = gamma_draw(rng, pc.lambda_shape, pc.lambda_rate);
    h.sigma_sq_eps = inv_gamma_draw(rng, pc.sigma_sq_eps.shape, pc.sigma_sq_eps.scale);
    h.alpha = 0.0;
    h.sigma_sq_phi = 0.0;
    pois = std::poisson_distribution<std::size_t>(h.lambda);
    bool ok = true;
    st.atoms.assign(kM, LatentAtoms(1));
    const ArSpec sb = th.beta_ar(), sm = th.mu_ar(0);
    for (std::size_t k = 0; k < kM && ok; ++k) {
      std::size_t jc = pois(rng);
      if (jc < 1 || jc > opt.j_max) {
        ok = false;
        break;
      }
      const LatentAtoms* prev = k > 0 ? &st.atoms[k - 1] : nullptr;
      for (std::size_t j = 0; j < jc; ++j) {
        bool paired = prev && j < prev->count();
        double b = draw_ar(paired ? prev->beta[j] : 0.0, paired, ctx.gap(k), sb, rng);
        double m = draw_ar(paired ? prev->mu[j] : 0.0, paired, ctx.gap(k), sm, rng);
        std::vector<double> mu{m};
        st.atoms[k].push_back(b, mu);
      }
      if (!st.atoms[k].within_bounds()) ok = false;
    }
    if (ok) return st;
  }
}

Eigen::MatrixXd draw_response(const ModelState& st, const ModelContext& ctx, Rng& rng) {
  Eigen::MatrixXd mapped = mapped_locations(st.theta, ctx);
  Eigen::MatrixXd y(kN, kM);
  std::vector<double> f(kN);
  const double sd = std::sqrt(st.hypers.sigma_sq_eps);
  for (std::size_t k = 0; k < kM; ++k) {
    f_column(mapped, ctx.time(k), st.atoms[k], st.theta.kernel(), f.data());
    for (std::size_t i = 0; i < kN; ++i)
      y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = f[i] + sd * std_normal(rng);
  }
  return y;
}

std::vector<double> stats_of(const ModelState& st) {
  const double lambda = st.hypers.lambda;
  const double sbeta = std::exp(st.theta[st.theta.sigma_beta_idx()]);
  const double rho = st.theta.beta_ar().rho;
  const double j = static_cast<double>(st.atoms[0].count());
  return {lambda, lambda * lambda, sbeta, sbeta * sbeta, rho, rho * rho, j, j * j};
}

const char* const kNames[] = {"E[lambda]",  "E[lambda^2]", "E[sigma_sq_beta]", "E[sigma_sq_beta^2]",
                              "E[rho_beta]", "E[rho_beta^2]", "E[J_1]",          "E[J_1^2]"};

}  // namespace

Report run(std::size_t forward_draws, std::size_t sweeps, std::uint64_t seed) {
  const std::size_t ns = std::size(kNames);
  Report rep;
  rep.forward_draws = forward_draws;
  rep.sweeps = sweeps;
  auto ctx = std::make_shared<ModelContext>(base_data(), options());

  // marginal-conditional
  Rng rng = stream_rng(seed, StreamTag::user, 100, 0);
  std::vector<double> s(ns, 0.0), s2(ns, 0.0);
  for (std::size_t r = 0; r < forward_draws; ++r) {
    auto v = stats_of(forward_draw(*ctx, rng));
    for (std::size_t i = 0; i < ns; ++i) {
      s[i] += v[i];
      s2[i] += v[i] * v[i];
    }
  }

  // successive-conditional
  Rng yrng = stream_rng(seed, StreamTag::user, 101, 0);
  ModelState st = forward_draw(*ctx, rng);
  ctx->set_response(draw_response(st, *ctx, yrng));
  SamplerConfig cfg;
  cfg.seed = seed;
  cfg.scale = 0.3;
  cfg.shrink = 0.3;
  cfg.iterations = sweeps;
  cfg.burn_in = 0;
  cfg.thin = 1;
  Sampler sampler(ctx, cfg, st);
  const std::size_t batches = 40, per = sweeps / batches;
  std::vector<std::vector<double>> batch(ns, std::vector<double>(batches, 0.0));
  for (std::size_t r = 0; r < batches * per; ++r) {
    sampler.iterate(r);
    sampler.set_response(draw_response(sampler.state(), *ctx, yrng));
    auto v = stats_of(sampler.state());
    for (std::size_t i = 0; i < ns; ++i) batch[i][r / per] += v[i] / static_cast<double>(per);
  }

  const double nf = static_cast<double>(forward_draws), nb = static_cast<double>(batches);
  for (std::size_t i = 0; i < ns; ++i) {
    MomentCheck c;
    c.name = kNames[i];
    c.forward = s[i] / nf;
    c.forward_se = std::sqrt(std::max(s2[i] / nf - c.forward * c.forward, 0.0) / nf);
    double bm = 0.0, bv = 0.0;
    for (double b : batch[i]) bm += b;
    bm /= nb;
    for (double b : batch[i]) bv += (b - bm) * (b - bm);
    bv /= nb - 1.0;
    c.chain = bm;
    c.chain_se = std::sqrt(bv / nb);
    rep.checks.push_back(c);
  }
  return rep;
}

}  // namespace geweke
