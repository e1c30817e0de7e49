#include <cmath>
#include <numbers>

#include "levydyn/errors.hpp"
#include "levydyn/sampler.hpp"

namespace levydyn {

MoveProbabilities SamplerConfig::move_probabilities(std::size_t j, std::size_t j_max) const {
  double wb = j < j_max ? weight_birth : 0.0;
  double wd = j > 1 ? weight_death : 0.0;
  double wn = weight_no_change;
  double tot = wb + wd + wn;
  return {wb / tot, wd / tot, wn / tot};
}

void SamplerConfig::validate() const {
  if (!(p_tilde >= 0.0 && p_tilde <= 1.0) || !(q_tilde >= 0.0 && q_tilde <= 1.0))
    throw ConfigError("sampler: mixture weights must lie in [0,1]");
  if (!(scale > 0.0) || !(shrink > 0.0)) throw ConfigError("sampler: scales must be positive");
  if (!(mult_floor > 0.0 && mult_floor < 1.0)) throw ConfigError("sampler: floor must lie in (0,1)");
  if (!(weight_birth > 0.0) || !(weight_death > 0.0) || !(weight_no_change > 0.0))
    throw ConfigError("sampler: move weights must be positive");
  if (thin < 1) throw ConfigError("sampler: thin must be >= 1");
  if (burn_in > iterations) throw ConfigError("sampler: burn-in exceeds the iteration budget");
  if (iterations > 0 && thin > iterations) throw ConfigError("sampler: thinning exceeds the budget");
  if (workers < 1) throw ConfigError("sampler: workers must be >= 1");
  if (!(eps_rw_step > 0.0)) throw ConfigError("sampler: eps_rw_step must be positive");
}

std::size_t SamplerConfig::stored_count() const { return (iterations - burn_in) / thin; }

double MoveCounter::rate() const {
  if (proposed == 0) return std::nan("");
  return static_cast<double>(accepted) / static_cast<double>(proposed);
}

void MoveStats::merge(const MoveStats& o) {
  auto add = [](MoveCounter& a, const MoveCounter& b) {
    a.proposed += b.proposed;
    a.accepted += b.accepted;
  };
  add(birth, o.birth);
  add(death, o.death);
  add(no_change, o.no_change);
  add(tmcmc, o.tmcmc);
  add(enhancement, o.enhancement);
}

double MoveStats::ttmcmc_rate() const {
  MoveCounter pooled;
  pooled.proposed = birth.proposed + death.proposed + no_change.proposed;
  pooled.accepted = birth.accepted + death.accepted + no_change.accepted;
  return pooled.rate();
}

double block_log_target(const BlockInputs& in, const LatentAtoms& atoms, const double* f) {
  const ModelContext& ctx = *in.ctx;
  const ModelState& st = *in.state;
  const std::size_t k = in.k, jc = atoms.count();
  if (jc < 1 || jc > ctx.options().j_max || !atoms.within_bounds()) return neg_inf;
  double lp = poisson_log_mass(jc, st.hypers.lambda);
  lp += atoms_log_density(st.theta, atoms, k > 0 ? &st.atoms[k - 1] : nullptr, ctx.gap(k));
  if (k + 1 < ctx.m()) lp += atoms_log_density(st.theta, st.atoms[k + 1], &atoms, ctx.gap(k + 1));
  lp += column_log_likelihood(st, ctx, k, f);
  return lp;
}

BlockState make_block_state(const BlockInputs& in, const LatentAtoms& atoms) {
  BlockState bs;
  bs.atoms = atoms;
  bs.f.resize(in.ctx->n());
  f_column(*in.mapped, in.ctx->time(in.k), atoms, in.kernel, bs.f.data());
  bs.log_target = block_log_target(in, atoms, bs.f.data());
  return bs;
}

LatentAtoms additive_birth_apply(const LatentAtoms& atoms, std::size_t parent,
                                 std::span<const double> eps, double a) {
  const std::size_t d = atoms.p + 1;
  if (eps.size() != d || parent >= atoms.count()) throw InvalidArgument("birth: bad inputs");
  LatentAtoms out = atoms;
  std::vector<double> born(d);
  for (std::size_t c = 0; c < d; ++c) {
    double x = atoms.coord(parent, c);
    out.coord(parent, c) = x + a * eps[c];
    born[c] = x - a * eps[c];
  }
  out.push_back(born[0], std::span<const double>(born).subspan(1));
  return out;
}

LatentAtoms additive_death_apply(const LatentAtoms& atoms, std::size_t j, double a,
                                 std::vector<double>* eps_out) {
  const std::size_t jc = atoms.count(), d = atoms.p + 1;
  if (jc < 2 || j + 1 >= jc) throw InvalidArgument("death: bad inputs");
  LatentAtoms out = atoms;
  if (eps_out) eps_out->resize(d);
  for (std::size_t c = 0; c < d; ++c) {
    double x1 = atoms.coord(j, c), x2 = atoms.coord(jc - 1, c);
    out.coord(j, c) = 0.5 * (x1 + x2);
    if (eps_out) (*eps_out)[c] = (x1 - x2) / (2.0 * a);
  }
  out.pop_back();
  return out;
}

LatentAtoms multiplicative_birth_apply(const LatentAtoms& atoms, std::size_t parent,
                                       std::span<const double> eps) {
  const std::size_t d = atoms.p + 1;
  if (eps.size() != d || parent >= atoms.count()) throw InvalidArgument("birth: bad inputs");
  LatentAtoms out = atoms;
  std::vector<double> born(d);
  for (std::size_t c = 0; c < d; ++c) {
    double x = atoms.coord(parent, c);
    out.coord(parent, c) = x * eps[c];
    born[c] = x / eps[c];
  }
  out.push_back(born[0], std::span<const double>(born).subspan(1));
  return out;
}

bool multiplicative_death_apply(const LatentAtoms& atoms, std::size_t j, std::span<const int> signs,
                                double floor, LatentAtoms* out) {
  const std::size_t jc = atoms.count(), d = atoms.p + 1;
  if (jc < 2 || j + 1 >= jc || signs.size() != d) throw InvalidArgument("death: bad inputs");
  LatentAtoms res = atoms;
  for (std::size_t c = 0; c < d; ++c) {
    double x1 = atoms.coord(j, c), x2 = atoms.coord(jc - 1, c);
    if (!(x1 * x2 > 0.0)) return false;
    double ratio = x1 / x2;
    if (!(ratio > floor * floor && ratio < 1.0)) return false;
    res.coord(j, c) = signs[c] * std::sqrt(x1 * x2);
  }
  res.pop_back();
  if (out) *out = std::move(res);
  return true;
}

namespace {

double log_std_normal(double x) { return -0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * x * x; }

double log_move_ratio_birth(std::size_t j, std::size_t j_max, const SamplerConfig& cfg) {
  auto from = cfg.move_probabilities(j, j_max);
  auto to = cfg.move_probabilities(j + 1, j_max);
  return std::log(to.death) - std::log(from.birth);
}

}  // namespace

double additive_birth_log_structural(std::size_t j, std::size_t j_max, std::span<const double> eps,
                                     double a, const SamplerConfig& cfg) {
  double s = log_move_ratio_birth(j, j_max, cfg);
  for (double e : eps) s += std::log(2.0 * a) - log_std_normal(e);
  return s;
}

double additive_death_log_structural(std::size_t j, std::size_t j_max, std::span<const double> eps,
                                     double a, const SamplerConfig& cfg) {
  return -additive_birth_log_structural(j - 1, j_max, eps, a, cfg);
}

double multiplicative_birth_log_structural(std::size_t j, std::size_t j_max,
                                           std::span<const double> parent,
                                           std::span<const double> eps, const SamplerConfig& cfg) {
  double s = log_move_ratio_birth(j, j_max, cfg);
  const double inv_q = std::log(2.0 * (1.0 - cfg.mult_floor));
  for (std::size_t c = 0; c < eps.size(); ++c)
    s += inv_q + std::log(std::abs(parent[c])) - std::log(std::abs(eps[c]));
  return s;
}

double multiplicative_death_log_structural(std::size_t j, std::size_t j_max,
                                           std::span<const double> last, const SamplerConfig& cfg) {
  double s = -log_move_ratio_birth(j - 1, j_max, cfg);
  const double inv_q = std::log(2.0 * (1.0 - cfg.mult_floor));
  for (double x : last) s -= inv_q + std::log(std::abs(x));
  return s;
}

double tmcmc_log_jacobian(double eps, std::span<const int> b) {
  int total = 0;
  for (int v : b) total += v;
  return total * std::log(std::abs(eps));
}

namespace {

bool accept_proposal(const BlockInputs& in, BlockState& bs, LatentAtoms proposal,
                     double log_structural, Rng& rng, MoveResult& res) {
  std::vector<double> f(in.ctx->n());
  double target = neg_inf;
  if (proposal.count() >= 1 && proposal.count() <= in.ctx->options().j_max &&
      proposal.within_bounds()) {
    f_column(*in.mapped, in.ctx->time(in.k), proposal, in.kernel, f.data());
    target = block_log_target(in, proposal, f.data());
  }
  res.log_ratio = target - bs.log_target + log_structural;
  double u = uniform01(rng);
  if (target != neg_inf && std::log(u) < res.log_ratio) {
    bs.atoms = std::move(proposal);
    bs.f = std::move(f);
    bs.log_target = target;
    res.accepted = true;
  }
  return res.accepted;
}

}  // namespace

MoveResult ttmcmc_birth(const BlockInputs& in, BlockState& bs, const SamplerConfig& cfg, Rng& rng) {
  const std::size_t jc = bs.atoms.count(), j_max = in.ctx->options().j_max, d = bs.atoms.p + 1;
  if (jc >= j_max) throw InvalidState("birth: J is already at J_max");
  MoveResult res;
  auto parent = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(jc));
  if (parent >= jc) parent = jc - 1;
  std::vector<double> eps(d);
  if (uniform01(rng) < cfg.p_tilde) {
    for (auto& e : eps) e = std_normal(rng);
    auto prop = additive_birth_apply(bs.atoms, parent, eps, cfg.scale);
    double ls = additive_birth_log_structural(jc, j_max, eps, cfg.scale, cfg);
    accept_proposal(in, bs, std::move(prop), ls, rng, res);
  } else {
    for (auto& e : eps) e = floored_uniform(rng, cfg.mult_floor);
    std::vector<double> x(d);
    for (std::size_t c = 0; c < d; ++c) x[c] = bs.atoms.coord(parent, c);
    for (double v : x)
      if (v == 0.0) {
        res.log_ratio = neg_inf;
        return res;
      }
    auto prop = multiplicative_birth_apply(bs.atoms, parent, eps);
    double ls = multiplicative_birth_log_structural(jc, j_max, x, eps, cfg);
    accept_proposal(in, bs, std::move(prop), ls, rng, res);
  }
  return res;
}

MoveResult ttmcmc_death(const BlockInputs& in, BlockState& bs, const SamplerConfig& cfg, Rng& rng) {
  const std::size_t jc = bs.atoms.count(), j_max = in.ctx->options().j_max, d = bs.atoms.p + 1;
  if (jc < 2) throw InvalidState("death: needs at least two atoms");
  MoveResult res;
  auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(jc - 1));
  if (j >= jc - 1) j = jc - 2;
  if (uniform01(rng) < cfg.p_tilde) {
    std::vector<double> eps;
    auto prop = additive_death_apply(bs.atoms, j, cfg.scale, &eps);
    double ls = additive_death_log_structural(jc, j_max, eps, cfg.scale, cfg);
    accept_proposal(in, bs, std::move(prop), ls, rng, res);
  } else {
    std::vector<int> signs(d);
    for (auto& s : signs) s = random_sign(rng);
    LatentAtoms prop;
    if (!multiplicative_death_apply(bs.atoms, j, signs, cfg.mult_floor, &prop)) {
      res.log_ratio = neg_inf;
      return res;
    }
    std::vector<double> last(d);
    for (std::size_t c = 0; c < d; ++c) last[c] = bs.atoms.coord(jc - 1, c);
    double ls = multiplicative_death_log_structural(jc, j_max, last, cfg);
    accept_proposal(in, bs, std::move(prop), ls, rng, res);
  }
  return res;
}

MoveResult ttmcmc_no_change(const BlockInputs& in, BlockState& bs, const SamplerConfig& cfg,
                            Rng& rng) {
  const std::size_t jc = bs.atoms.count(), d = bs.atoms.p + 1;
  MoveResult res;
  LatentAtoms prop = bs.atoms;
  double log_jac = 0.0;
  if (uniform01(rng) < cfg.p_tilde) {
    const double step = cfg.shrink * cfg.scale * std::abs(std_normal(rng));
    for (std::size_t j = 0; j < jc; ++j)
      for (std::size_t c = 0; c < d; ++c) prop.coord(j, c) += random_sign(rng) * step;
  } else {
    const double eps = floored_uniform(rng, cfg.mult_floor);
    std::vector<int> b(jc * d);
    for (auto& v : b) v = static_cast<int>(std::floor(3.0 * uniform01(rng))) - 1;
    for (std::size_t j = 0; j < jc; ++j)
      for (std::size_t c = 0; c < d; ++c) {
        int bv = b[j * d + c];
        if (bv == 1) prop.coord(j, c) *= eps;
        else if (bv == -1) prop.coord(j, c) /= eps;
      }
    log_jac = tmcmc_log_jacobian(eps, b);
  }
  accept_proposal(in, bs, std::move(prop), log_jac, rng, res);
  return res;
}

MoveKind update_time_block(const BlockInputs& in, BlockState& bs, const SamplerConfig& cfg, Rng& rng,
                           MoveStats& stats) {
  auto w = cfg.move_probabilities(bs.atoms.count(), in.ctx->options().j_max);
  double u = uniform01(rng);
  if (u < w.birth) {
    stats.birth.record(ttmcmc_birth(in, bs, cfg, rng).accepted);
    return MoveKind::birth;
  }
  if (u < w.birth + w.death) {
    stats.death.record(ttmcmc_death(in, bs, cfg, rng).accepted);
    return MoveKind::death;
  }
  stats.no_change.record(ttmcmc_no_change(in, bs, cfg, rng).accepted);
  return MoveKind::no_change;
}

GammaParams lambda_conditional(std::size_t sum_j, std::size_t m, const PriorConfig& prior) {
  return {prior.lambda_shape + static_cast<double>(sum_j),
          prior.lambda_rate + static_cast<double>(m)};
}

InvGammaPrior sigma_sq_eps_conditional(double rss, std::size_t count, const PriorConfig& prior) {
  if (rss < 0.0) throw InvalidState("sigma_sq_eps update: negative residual sum of squares");
  return {prior.sigma_sq_eps.shape + 0.5 * static_cast<double>(count),
          prior.sigma_sq_eps.scale + 0.5 * rss};
}

NormalParams nu_conditional(double z, double omega_sq, double nu_var) {
  double var = 1.0 / (1.0 / omega_sq + 1.0 / nu_var);
  return {var * z / omega_sq, var};
}

InvGammaPrior omega_sq_conditional(double z, double nu, const InvGammaPrior& prior) {
  double d = z - nu;
  return {prior.shape + 0.5, prior.scale + 0.5 * d * d};
}

}  // namespace levydyn
