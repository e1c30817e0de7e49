#include "levydyn/diagnostics.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "levydyn/errors.hpp"
#include "levydyn/model.hpp"
#include "levydyn/prediction.hpp"

namespace levydyn {

double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("ks_distance: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::stationary: return "stationary";
    case Verdict::nonstationary: return "nonstationary";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

std::vector<double> threshold_sequence(std::size_t count, double c0, double decay, double floor) {
  std::vector<double> c(count);
  if (count == 0) return c;
  c[0] = c0;
  for (std::size_t j = 1; j < count; ++j) {
    double jd = static_cast<double>(j);
    c[j] = std::max(c[j - 1] * std::pow(1.0 - 1.0 / (jd + 1.0), decay), floor);
  }
  if (c0 <= 0.0) std::fill(c.begin(), c.end(), 0.0);
  return c;
}

StationarityResult stationarity_recursion(const std::vector<double>& distances,
                                          const StationarityOptions& opt) {
  if (distances.size() < 2) throw InvalidArgument("stationarity test: need at least two regions");
  if (!(opt.prior_a > 0.0) || !(opt.prior_b > 0.0))
    throw InvalidArgument("stationarity test: Beta prior must be proper");
  StationarityResult res;
  res.distance = distances;
  res.threshold = threshold_sequence(distances.size(), opt.c0, opt.decay, opt.c_floor);
  double a = opt.prior_a, b = opt.prior_b;
  for (std::size_t j = 0; j < distances.size(); ++j) {
    int dj = distances[j] < res.threshold[j] ? 1 : 0;
    res.indicator.push_back(dj);
    a += dj;
    b += 1 - dj;
    double s = a + b;
    res.post_mean.push_back(a / s);
    res.post_var.push_back(a * b / (s * s * (s + 1.0)));
  }
  double last = res.post_mean.back();
  res.verdict = last < opt.lower   ? Verdict::nonstationary
                : last > opt.upper ? Verdict::stationary
                                   : Verdict::inconclusive;
  return res;
}

std::vector<Region> regions_from_dataset(const SpaceTimeDataset& data) {
  std::vector<Region> regions(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    regions[i].times = data.times;
    for (std::size_t k = 0; k < data.m(); ++k)
      regions[i].values.push_back(data.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
  }
  return regions;
}

StationarityResult recursive_stationarity_test(const std::vector<Region>& regions,
                                               const StationarityOptions& opt) {
  if (regions.size() < 2) throw InvalidArgument("stationarity test: need at least two regions");
  std::vector<double> pooled;
  for (const auto& r : regions) pooled.insert(pooled.end(), r.values.begin(), r.values.end());
  std::vector<double> dist;
  for (const auto& r : regions) dist.push_back(ks_distance(r.values, pooled));
  return stationarity_recursion(dist, opt);
}

StationarityResult recursive_stationarity_test(const SpaceTimeDataset& data,
                                               const StationarityOptions& opt) {
  return recursive_stationarity_test(regions_from_dataset(data), opt);
}

double lag_covariance(const std::vector<Region>& regions, const LagBin& bin, double center,
                      std::size_t* pairs) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& r : regions) {
    for (std::size_t a = 0; a < r.values.size(); ++a)
      for (std::size_t b = a; b < r.values.size(); ++b) {
        double lag = std::abs(r.times[b] - r.times[a]);
        if (lag < bin.lower || lag >= bin.upper) continue;
        sum += (r.values[a] - center) * (r.values[b] - center);
        ++count;
      }
  }
  if (pairs) *pairs = count;
  return count ? sum / static_cast<double>(count) : 0.0;
}

StationarityResult recursive_cov_stationarity_test(const std::vector<Region>& regions,
                                                   const LagBin& bin,
                                                   const StationarityOptions& opt) {
  if (regions.size() < 2) throw InvalidArgument("stationarity test: need at least two regions");
  double gsum = 0.0;
  std::size_t gcount = 0;
  for (const auto& r : regions)
    for (double v : r.values) {
      gsum += v;
      ++gcount;
    }
  std::size_t pairs = 0;
  double global = lag_covariance(regions, bin, gsum / static_cast<double>(gcount), &pairs);
  if (pairs < 2) throw UndefinedBin("covariance test: lag bin has fewer than two global pairs");
  std::vector<double> dist;
  for (const auto& r : regions) {
    double mean = 0.0;
    for (double v : r.values) mean += v;
    mean /= static_cast<double>(r.values.size());
    double local = lag_covariance({r}, bin, mean, &pairs);
    if (pairs < 2) throw UndefinedBin("covariance test: lag bin has fewer than two local pairs");
    dist.push_back(std::abs(local - global));
  }
  return stationarity_recursion(dist, opt);
}

StationarityResult recursive_cov_stationarity_test(const SpaceTimeDataset& data, const LagBin& bin,
                                                   const StationarityOptions& opt) {
  return recursive_cov_stationarity_test(regions_from_dataset(data), bin, opt);
}

LagBins lagged_correlation(const SpaceTimeDataset& data, const std::vector<double>& edges) {
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()))
    throw InvalidArgument("lagged_correlation: bin edges must be ordered");
  if (data.n() == 0 || data.m() == 0) throw InvalidArgument("lagged_correlation: empty data");
  const std::size_t nb = edges.size() - 1;
  struct Acc {
    std::size_t n = 0;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  };
  std::vector<Acc> acc(nb);
  const std::size_t n = data.n(), m = data.m(), p = data.p();
  const std::size_t total = n * m;
  auto loc = [&](std::size_t a) { return a / m; };
  auto tim = [&](std::size_t a) { return a % m; };
  for (std::size_t a = 0; a < total; ++a)
    for (std::size_t b = a + 1; b < total; ++b) {
      double d2 = 0.0;
      for (std::size_t l = 0; l < p; ++l) {
        double d = data.locations(static_cast<Eigen::Index>(loc(a)), static_cast<Eigen::Index>(l)) -
                   data.locations(static_cast<Eigen::Index>(loc(b)), static_cast<Eigen::Index>(l));
        d2 += d * d;
      }
      double dt = data.times[tim(a)] - data.times[tim(b)];
      double h = std::sqrt(d2 + dt * dt);
      if (h < edges.front() || h >= edges.back()) continue;
      auto bin = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), h) -
                                          edges.begin()) - 1;
      double x = data.y(static_cast<Eigen::Index>(loc(a)), static_cast<Eigen::Index>(tim(a)));
      double y = data.y(static_cast<Eigen::Index>(loc(b)), static_cast<Eigen::Index>(tim(b)));
      Acc& c = acc[bin];
      ++c.n;
      c.sx += x;
      c.sy += y;
      c.sxx += x * x;
      c.syy += y * y;
      c.sxy += x * y;
    }
  LagBins out;
  out.edges = edges;
  for (const auto& c : acc) {
    out.counts.push_back(c.n);
    if (c.n < 2) {
      out.correlation.emplace_back();
      continue;
    }
    double nn = static_cast<double>(c.n);
    double vx = c.sxx - c.sx * c.sx / nn, vy = c.syy - c.sy * c.sy / nn;
    double cxy = c.sxy - c.sx * c.sy / nn;
    if (!(vx > 1e-14 * std::max(1.0, c.sxx)) || !(vy > 1e-14 * std::max(1.0, c.syy))) {
      out.correlation.emplace_back();
      continue;
    }
    out.correlation.emplace_back(cxy / std::sqrt(vx * vy));
  }
  return out;
}

std::vector<std::optional<double>> smooth_moving_average(
    const std::vector<std::optional<double>>& values, std::size_t half_width) {
  std::vector<std::optional<double>> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i]) continue;
    double s = 0.0;
    std::size_t c = 0;
    std::size_t lo = i >= half_width ? i - half_width : 0;
    std::size_t hi = std::min(values.size() - 1, i + half_width);
    for (std::size_t j = lo; j <= hi; ++j)
      if (values[j]) {
        s += *values[j];
        ++c;
      }
    out[i] = s / static_cast<double>(c);
  }
  return out;
}

double CovarianceOracleResult::combined_se() const {
  return std::sqrt(mc_se * mc_se + analytic_se * analytic_se);
}

CovarianceOracleResult covariance_oracle_check(const CovarianceOracleParams& prm,
                                               std::span<const double> s1,
                                               std::span<const double> s2, double t,
                                               std::size_t n_mc, std::uint64_t seed) {
  const std::size_t p = s1.size();
  if (s2.size() != p || prm.tilde_sigma_sq.size() != p || prm.sigma_sq_mu.size() != p)
    throw InvalidArgument("covariance oracle: dimension mismatch");
  if (n_mc < 2) throw InvalidArgument("covariance oracle: need at least two draws");
  KernelParams kp{prm.tilde_sigma_sq, prm.tau, prm.xi};
  std::vector<double> sd_mu(p);
  for (std::size_t l = 0; l < p; ++l) sd_mu[l] = std::sqrt(prm.sigma_sq_mu[l]);
  const double sd_beta = std::sqrt(prm.sigma_sq_beta);

  Rng rng = stream_rng(seed, StreamTag::user, 1, 0);
  std::poisson_distribution<std::size_t> pois(prm.lambda);
  std::vector<double> f1(n_mc), f2(n_mc);
  LatentAtoms atoms(p);
  std::vector<double> mu(p);
  for (std::size_t r = 0; r < n_mc; ++r) {
    atoms = LatentAtoms(p);
    std::size_t jc = pois(rng);
    for (std::size_t j = 0; j < jc; ++j) {
      for (std::size_t l = 0; l < p; ++l) mu[l] = sd_mu[l] * std_normal(rng);
      atoms.push_back(sd_beta * std_normal(rng), mu);
    }
    f1[r] = f_eval(s1, t, atoms, kp);
    f2[r] = f_eval(s2, t, atoms, kp);
  }
  const double n = static_cast<double>(n_mc);
  double m1 = 0, m2 = 0;
  for (std::size_t r = 0; r < n_mc; ++r) {
    m1 += f1[r];
    m2 += f2[r];
  }
  m1 /= n;
  m2 /= n;
  double c = 0, c2 = 0;
  for (std::size_t r = 0; r < n_mc; ++r) {
    double v = (f1[r] - m1) * (f2[r] - m2);
    c += v;
    c2 += v * v;
  }
  CovarianceOracleResult res;
  res.mc = c / (n - 1.0);
  double var_prod = (c2 - c * c / n) / (n - 1.0);
  res.mc_se = std::sqrt(std::max(var_prod, 0.0) / n);

  Rng rng2 = stream_rng(seed, StreamTag::user, 2, 0);
  const std::size_t n2 = 10 * n_mc;
  double g = 0, g2 = 0;
  for (std::size_t r = 0; r < n2; ++r) {
    double q1 = 0, q2 = 0;
    for (std::size_t l = 0; l < p; ++l) {
      double u = sd_mu[l] * std_normal(rng2);
      double d1 = s1[l] - u, d2 = s2[l] - u;
      q1 += prm.tilde_sigma_sq[l] * d1 * d1;
      q2 += prm.tilde_sigma_sq[l] * d2 * d2;
    }
    double tp = prm.xi * std::abs(t - prm.tau);
    double b = sd_beta * std_normal(rng2);
    double v = std::exp(-0.5 * q1 - tp) * std::exp(-0.5 * q2 - tp) * b * b;
    g += v;
    g2 += v * v;
  }
  const double nn2 = static_cast<double>(n2);
  double mean_g = g / nn2;
  double var_g = (g2 - g * g / nn2) / (nn2 - 1.0);
  res.analytic = prm.lambda * mean_g;
  res.analytic_se = prm.lambda * std::sqrt(std::max(var_g, 0.0) / nn2);
  return res;
}

NormalitySummary normality_summary(std::span<const double> sample) {
  if (sample.size() < 20) throw InvalidArgument("normality_summary: need at least 20 values");
  NormalitySummary out;
  const double n = static_cast<double>(sample.size());
  double mean = 0.0;
  for (double v : sample) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : sample) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / (n - 1.0));
  boost::math::normal_distribution<double> z;
  std::vector<double> stdz(sample.size());
  out.degenerate = !(sd > 0.0);
  for (std::size_t i = 0; i < sample.size(); ++i) stdz[i] = out.degenerate ? 0.0 : (sample[i] - mean) / sd;
  out.max_deviation = out.degenerate ? std::nan("") : 0.0;
  for (int i = 1; i <= 19; ++i) {
    double pr = 0.05 * i;
    double qn = boost::math::quantile(z, pr);
    double qs = empirical_quantile(stdz, pr);
    out.probs.push_back(pr);
    out.normal_quantiles.push_back(qn);
    out.sample_quantiles.push_back(qs);
    if (!out.degenerate) out.max_deviation = std::max(out.max_deviation, std::abs(qs - qn));
  }
  return out;
}

std::vector<AcceptanceRow> acceptance_report(const MoveStats& st) {
  auto row = [](const char* name, const MoveCounter& c) {
    AcceptanceRow r{name, c.proposed, c.accepted, std::nullopt};
    if (c.proposed > 0) r.rate = c.rate();
    return r;
  };
  MoveCounter pooled;
  pooled.proposed = st.birth.proposed + st.death.proposed + st.no_change.proposed;
  pooled.accepted = st.birth.accepted + st.death.accepted + st.no_change.accepted;
  return {row("birth", st.birth),     row("death", st.death),
          row("no_change", st.no_change), row("tmcmc", st.tmcmc),
          row("enhancement", st.enhancement), row("ttmcmc_overall", pooled)};
}

std::string format_rate(const std::optional<double>& rate) {
  if (!rate) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", *rate);
  return buf;
}

void write_acceptance_report(std::ostream& out, const std::vector<AcceptanceRow>& rows) {
  out << "move,proposed,accepted,rate\n";
  for (const auto& r : rows)
    out << r.move << ',' << r.proposed << ',' << r.accepted << ',' << format_rate(r.rate) << '\n';
}

namespace {
std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

void write_stationarity_csv(std::ostream& out, const StationarityResult& res) {
  out << "region,distance,threshold,indicator,post_mean,post_var\n";
  for (std::size_t j = 0; j < res.distance.size(); ++j)
    out << j + 1 << ',' << g17(res.distance[j]) << ',' << g17(res.threshold[j]) << ','
        << res.indicator[j] << ',' << g17(res.post_mean[j]) << ',' << g17(res.post_var[j]) << '\n';
  out << "# verdict=" << verdict_name(res.verdict) << '\n';
}

void write_lag_bins_csv(std::ostream& out, const LagBins& bins) {
  out << "lower,upper,pairs,correlation\n";
  for (std::size_t b = 0; b < bins.counts.size(); ++b)
    out << g17(bins.edges[b]) << ',' << g17(bins.edges[b + 1]) << ',' << bins.counts[b] << ','
        << (bins.correlation[b] ? g17(*bins.correlation[b]) : std::string("undefined")) << '\n';
}

void write_normality_csv(std::ostream& out, const NormalitySummary& s) {
  out << "prob,sample_quantile,normal_quantile\n";
  for (std::size_t i = 0; i < s.probs.size(); ++i)
    out << g17(s.probs[i]) << ',' << g17(s.sample_quantiles[i]) << ',' << g17(s.normal_quantiles[i])
        << '\n';
  out << "# max_deviation=" << (s.degenerate ? std::string("degenerate") : g17(s.max_deviation))
      << '\n';
}

}  // namespace levydyn
