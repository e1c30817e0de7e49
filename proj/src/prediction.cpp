#include "levydyn/prediction.hpp"

#include <algorithm>
#include <cmath>

#include "levydyn/errors.hpp"

namespace levydyn {

double empirical_quantile(std::vector<double> values, double level) {
  if (values.empty()) throw InvalidArgument("quantile: empty sample");
  if (!(level >= 0.0 && level <= 1.0)) throw InvalidArgument("quantile: level outside [0,1]");
  std::sort(values.begin(), values.end());
  double h = level * static_cast<double>(values.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::size_t time_index(const SpaceTimeDataset& data, double t) {
  for (std::size_t k = 0; k < data.m(); ++k)
    if (std::abs(data.times[k] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return k;
  throw UnsupportedPrediction("prediction time is not on the training grid");
}

PredictionBands posterior_predict(const std::vector<ChainSample>& chain,
                                  const std::vector<SpaceTimePoint>& points,
                                  const ModelContext& ctx, const PredictOptions& options) {
  if (chain.empty()) throw InvalidArgument("posterior_predict: empty chain");
  for (double q : options.levels)
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("posterior_predict: bad quantile level");
  const SpaceTimeDataset& data = ctx.data();
  const std::size_t np = points.size(), ns = chain.size(), p = ctx.p();
  std::vector<std::size_t> kidx(np);
  std::vector<double> base(np);
  for (std::size_t j = 0; j < np; ++j) {
    if (points[j].s.size() != p) throw InvalidArgument("posterior_predict: dimension mismatch");
    kidx[j] = time_index(data, points[j].t);
    base[j] = ctx.options().effects == EffectsMode::none
                  ? 0.0
                  : phi0_prediction(data, points[j].s, points[j].t);
  }

  PredictionBands out;
  out.levels = options.levels;
  out.draws.resize(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(np));
  WorkerPool pool(options.workers);
  pool.parallel_for(ns, [&](std::size_t si) {
    const ChainSample& s = chain[si];
    Rng rng = stream_rng(options.seed, StreamTag::predict, si, 0);
    const MonotoneMapParams mp = s.theta.map_params(ctx.options().r);
    const MonotoneMapFit fit = monotone_map_fit(ctx.knots(), mp);
    const KernelParams kp = s.theta.kernel();
    std::vector<double> mapped(p);
    for (std::size_t j = 0; j < np; ++j) {
      for (std::size_t l = 0; l < p; ++l) mapped[l] = monotone_map_extend(points[j].s[l], l, fit, mp);
      double f = f_eval(mapped, data.times[kidx[j]], s.atoms[kidx[j]], kp);
      double y = s.hypers.alpha + f;
      switch (ctx.options().effects) {
        case EffectsMode::marginalized:
          y += base[j] + std::sqrt(observation_variance(s.hypers, ctx.options())) * std_normal(rng);
          break;
        case EffectsMode::explicit_effects:
          y += base[j] + std::sqrt(s.hypers.sigma_sq_phi) * std_normal(rng);
          y += std::sqrt(s.hypers.sigma_sq_eps) * std_normal(rng);
          break;
        case EffectsMode::none:
          y += std::sqrt(s.hypers.sigma_sq_eps) * std_normal(rng);
          break;
      }
      if (data.stats) y = inverse_transform(y, *data.stats);
      out.draws(static_cast<Eigen::Index>(si), static_cast<Eigen::Index>(j)) = y;
    }
  });

  out.bands.resize(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(options.levels.size()));
  for (std::size_t j = 0; j < np; ++j) {
    const auto col = out.draws.col(static_cast<Eigen::Index>(j));
    std::vector<double> v(col.data(), col.data() + col.size());
    for (std::size_t q = 0; q < options.levels.size(); ++q)
      out.bands(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(q)) =
          empirical_quantile(v, options.levels[q]);
  }
  return out;
}

}  // namespace levydyn
