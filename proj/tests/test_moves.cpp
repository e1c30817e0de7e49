#include <doctest.h>

#include <cmath>
#include <numbers>

#include "levydyn/errors.hpp"
#include "levydyn/sampler.hpp"
#include "test_util.hpp"

using namespace levydyn;

namespace {

double norm_lpdf(double x, double m, double v) {
  return -0.5 * std::log(2.0 * std::numbers::pi * v) - (x - m) * (x - m) / (2.0 * v);
}

// One location, one time, no random effects: the block target is the Poisson
// mass, the stationary start of every atom and a single Gaussian likelihood term.
struct Tiny {
  std::shared_ptr<ModelContext> ctx;
  ModelState st;
  Eigen::MatrixXd mapped;
  BlockInputs in;

  explicit Tiny(LatentAtoms atoms) {
    SpaceTimeDataset d;
    d.locations.resize(1, 1);
    d.locations << 0.4;
    d.times = {1.0};
    d.y.resize(1, 1);
    d.y << 0.8;
    ModelOptions opt;
    opt.effects = EffectsMode::none;
    opt.j_max = 5;
    ctx = std::make_shared<ModelContext>(d, opt);
    st.theta = GlobalParams(1, ctx->ar_mode());
    auto& th = st.theta;
    th[th.z_idx(0)] = 0.5;
    th[th.c_tilde_idx(0)] = 0.2;
    th[th.c_idx(0)] = -0.1;
    th[th.sigma_tilde_idx(0)] = 0.3;
    th[th.tau_idx()] = -0.2;
    th[th.xi_idx()] = 0.1;
    th[th.rho_mu_idx(0)] = 0.4;
    th[th.sigma_mu_idx(0)] = 0.2;
    th[th.rho_beta_idx()] = -0.3;
    th[th.sigma_beta_idx()] = 0.1;
    st.hypers.lambda = 1.7;
    st.hypers.sigma_sq_eps = 0.3;
    st.hypers.nu = {0.0};
    st.hypers.omega_sq = {1.0};
    st.atoms = {std::move(atoms)};
    mapped = mapped_locations(st.theta, *ctx);
    in.ctx = ctx.get();
    in.state = &st;
    in.mapped = &mapped;
    in.kernel = st.theta.kernel();
    in.k = 0;
  }

  // independent evaluation of the block target
  double target(const LatentAtoms& a) const {
    const double M = std::exp(0.2) - std::exp(-0.1) * 0.5 * 0.4 * 0.4;
    const double st2 = std::exp(0.3), tau = std::exp(-0.2), xi = std::exp(0.1);
    const double rmu = std::tanh(0.2), smu = std::exp(0.2);
    const double rb = std::tanh(-0.15), sb = std::exp(0.1);
    const double J = static_cast<double>(a.count());
    double lp = J * std::log(1.7) - 1.7 - std::lgamma(J + 1.0);
    double f = 0.0;
    for (std::size_t j = 0; j < a.count(); ++j) {
      lp += norm_lpdf(a.beta[j], 0.0, sb / (1.0 - rb * rb));
      lp += norm_lpdf(a.mu[j], 0.0, smu / (1.0 - rmu * rmu));
      f += std::exp(-0.5 * st2 * (M - a.mu[j]) * (M - a.mu[j]) - xi * std::abs(1.0 - tau)) * a.beta[j];
    }
    return lp + norm_lpdf(0.8, f, 0.3);
  }
};

LatentAtoms atoms1(std::initializer_list<std::pair<double, double>> v) {
  LatentAtoms a(1);
  for (auto [b, m] : v) {
    std::vector<double> mu{m};
    a.push_back(b, mu);
  }
  return a;
}

double log_phi(double e) { return -0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * e * e; }

}  // namespace

TEST_CASE("move probabilities renormalize at the edges") {
  SamplerConfig cfg;
  auto w1 = cfg.move_probabilities(1, 5);
  CHECK(w1.death == 0.0);
  CHECK(w1.birth == doctest::Approx(0.5));
  auto wm = cfg.move_probabilities(5, 5);
  CHECK(wm.birth == 0.0);
  CHECK(wm.death == doctest::Approx(0.5));
  auto w3 = cfg.move_probabilities(3, 5);
  CHECK(w3.no_change == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("additive birth then matched death restores the atoms") {
  // dyadic values keep every operation exact
  auto a = atoms1({{0.5, -0.25}, {1.5, 0.75}});
  std::vector<double> eps{0.75, -1.25};
  auto born = additive_birth_apply(a, 1, eps, 0.25);
  REQUIRE(born.count() == 3);
  CHECK(born.beta[1] == 1.5 + 0.1875);
  CHECK(born.beta[2] == 1.5 - 0.1875);
  std::vector<double> rec;
  auto back = additive_death_apply(born, 1, 0.25, &rec);
  CHECK(back == a);
  CHECK(rec == eps);

  // equal atoms merge to themselves
  auto same = atoms1({{0.3, 0.1}, {0.3, 0.1}});
  auto merged = additive_death_apply(same, 0, 0.05, nullptr);
  CHECK(merged.count() == 1);
  CHECK(merged.beta[0] == 0.3);
  CHECK(merged.mu[0] == 0.1);
}

TEST_CASE("additive round trip on random inputs agrees to rounding") {
  Rng rng(17);
  for (int rep = 0; rep < 1000; ++rep) {
    LatentAtoms a(2);
    std::size_t J = 1 + static_cast<std::size_t>(uniform01(rng) * 4);
    for (std::size_t j = 0; j < J; ++j) {
      std::vector<double> mu{std_normal(rng), std_normal(rng)};
      a.push_back(std_normal(rng), mu);
    }
    std::size_t parent = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(J));
    std::vector<double> eps{std_normal(rng), std_normal(rng), std_normal(rng)};
    double scale = 0.05;
    auto back = additive_death_apply(additive_birth_apply(a, parent, eps, scale), parent, scale, nullptr);
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t c = 0; c < 3; ++c)
        CHECK(std::abs(back.coord(j, c) - a.coord(j, c)) <= 4e-16 * (std::abs(a.coord(j, c)) + scale * 4));
  }
}

TEST_CASE("multiplicative birth and death are inverse") {
  auto a = atoms1({{0.5, -2.0}});
  std::vector<double> eps{0.5, -0.25};
  auto born = multiplicative_birth_apply(a, 0, eps);
  CHECK(born.beta == std::vector<double>{0.25, 1.0});
  CHECK(born.mu == std::vector<double>{0.5, 8.0});
  std::vector<int> signs{1, -1};
  LatentAtoms back;
  REQUIRE(multiplicative_death_apply(born, 0, signs, 0.01, &back));
  CHECK(back == a);
  std::vector<int> wrong{-1, -1};
  REQUIRE(multiplicative_death_apply(born, 0, wrong, 0.01, &back));
  CHECK(back.beta[0] == -0.5);
  // opposite signs cannot come from a multiplicative birth
  auto mixed = atoms1({{0.5, 1.0}, {-0.5, 1.0}});
  CHECK_FALSE(multiplicative_death_apply(mixed, 0, signs, 0.01, &back));
}

TEST_CASE("structural factors are reciprocal on matched pairs") {
  SamplerConfig cfg;
  const std::size_t jmax = 6;
  Rng rng(23);
  for (std::size_t J = 1; J < jmax; ++J) {
    std::vector<double> eps{std_normal(rng), std_normal(rng), std_normal(rng)};
    auto a = atoms1({{0.7, -0.3}});
    double b = additive_birth_log_structural(J, jmax, eps, cfg.scale, cfg);
    double d = additive_death_log_structural(J + 1, jmax, eps, cfg.scale, cfg);
    CHECK(b == -d);
    std::vector<double> x{0.7, -0.3}, me{0.4, -0.9};
    std::vector<double> last{0.7 / 0.4, -0.3 / -0.9};
    double mb = multiplicative_birth_log_structural(J, jmax, x, me, cfg);
    double md = multiplicative_death_log_structural(J + 1, jmax, last, cfg);
    CHECK(mb == doctest::Approx(-md).epsilon(1e-14));
  }
  // hand value: J = 1 -> 2 with J_max 6 moves from w_b = 1/2 to w_d = 1/3
  std::vector<double> e{0.0};
  double expect = std::log((1.0 / 3.0) / 0.5) + std::log(2.0 * 0.05) - log_phi(0.0);
  CHECK(additive_birth_log_structural(1, 6, e, 0.05, cfg) == doctest::Approx(expect));
}

TEST_CASE("tmcmc jacobian") {
  std::vector<int> b{1, 1, -1};
  CHECK(std::exp(tmcmc_log_jacobian(0.5, b)) == doctest::Approx(0.5));
  std::vector<int> zero{0, 0, 0};
  CHECK(tmcmc_log_jacobian(0.3, zero) == 0.0);
  std::vector<int> neg{-1};
  CHECK(std::exp(tmcmc_log_jacobian(-0.25, neg)) == doctest::Approx(4.0));
}

TEST_CASE("block target matches the independent evaluation") {
  Tiny t(atoms1({{0.6, 0.3}}));
  auto bs = make_block_state(t.in, t.st.atoms[0]);
  CHECK(bs.log_target == doctest::Approx(t.target(t.st.atoms[0])).epsilon(1e-13));
  auto two = atoms1({{0.6, 0.3}, {-0.2, 1.1}});
  auto bs2 = make_block_state(t.in, two);
  CHECK(bs2.log_target == doctest::Approx(t.target(two)).epsilon(1e-13));
}

TEST_CASE("additive birth acceptance ratio oracle") {
  Tiny t(atoms1({{0.6, 0.3}}));
  SamplerConfig cfg;
  cfg.p_tilde = 1.0;
  cfg.scale = 0.4;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto bs = make_block_state(t.in, t.st.atoms[0]);
    Rng rng = stream_rng(s, StreamTag::user, 0, 0);
    Rng replay = rng;
    auto res = ttmcmc_birth(t.in, bs, cfg, rng);
    uniform01(replay);  // parent, only one candidate
    uniform01(replay);  // branch
    double e0 = std_normal(replay), e1 = std_normal(replay);
    auto prop = atoms1({{0.6 + 0.4 * e0, 0.3 + 0.4 * e1}, {0.6 - 0.4 * e0, 0.3 - 0.4 * e1}});
    double expect = t.target(prop) - t.target(t.st.atoms[0]) + std::log((1.0 / 3.0) / 0.5) +
                    2.0 * std::log(0.8) - log_phi(e0) - log_phi(e1);
    CHECK(res.log_ratio == doctest::Approx(expect).epsilon(1e-12));
    double u = uniform01(replay);
    CHECK(res.accepted == (std::log(u) < expect));
  }
}

TEST_CASE("additive death acceptance ratio oracle") {
  auto start = atoms1({{0.6, 0.3}, {0.2, -0.5}, {0.9, 0.1}});
  Tiny t(start);
  SamplerConfig cfg;
  cfg.p_tilde = 1.0;
  cfg.scale = 0.4;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto bs = make_block_state(t.in, start);
    Rng rng = stream_rng(s, StreamTag::user, 1, 0);
    Rng replay = rng;
    auto res = ttmcmc_death(t.in, bs, cfg, rng);
    auto j = static_cast<std::size_t>(uniform01(replay) * 2.0);
    uniform01(replay);
    double e0 = (start.beta[j] - start.beta[2]) / 0.8, e1 = (start.mu[j] - start.mu[2]) / 0.8;
    LatentAtoms prop(1);
    for (std::size_t i = 0; i < 2; ++i) {
      std::vector<double> mu{i == j ? 0.5 * (start.mu[j] + start.mu[2]) : start.mu[i]};
      prop.push_back(i == j ? 0.5 * (start.beta[j] + start.beta[2]) : start.beta[i], mu);
    }
    // J = 3 -> 2 with J_max 5: w_b(2) = 1/3, w_d(3) = 1/3
    double expect = t.target(prop) - t.target(start) - std::log(1.0) - 2.0 * std::log(0.8) +
                    log_phi(e0) + log_phi(e1);
    CHECK(res.log_ratio == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("multiplicative birth acceptance ratio oracle") {
  Tiny t(atoms1({{0.6, 0.3}}));
  SamplerConfig cfg;
  cfg.p_tilde = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto bs = make_block_state(t.in, t.st.atoms[0]);
    Rng rng = stream_rng(s, StreamTag::user, 2, 0);
    Rng replay = rng;
    auto res = ttmcmc_birth(t.in, bs, cfg, rng);
    uniform01(replay);
    uniform01(replay);
    double e0 = floored_uniform(replay, 0.01), e1 = floored_uniform(replay, 0.01);
    auto prop = atoms1({{0.6 * e0, 0.3 * e1}, {0.6 / e0, 0.3 / e1}});
    double expect = t.target(prop) - t.target(t.st.atoms[0]) + std::log((1.0 / 3.0) / 0.5) +
                    2.0 * std::log(2.0 * 0.99) + std::log(0.6 / std::abs(e0)) +
                    std::log(0.3 / std::abs(e1));
    CHECK(res.log_ratio == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("identity no-change proposals are accepted") {
  Tiny t(atoms1({{0.6, 0.3}, {-0.4, 0.2}}));
  SamplerConfig cfg;
  cfg.p_tilde = 1.0;
  cfg.scale = 1e-300;
  auto bs = make_block_state(t.in, t.st.atoms[0]);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    auto r = ttmcmc_no_change(t.in, bs, cfg, rng);
    CHECK(r.accepted);
    CHECK(r.log_ratio == 0.0);
  }
  CHECK(bs.atoms == t.st.atoms[0]);
}

TEST_CASE("no-change ratio is the target difference plus the jacobian") {
  Tiny t(atoms1({{0.6, 0.3}, {-0.4, 0.2}}));
  SamplerConfig cfg;
  cfg.p_tilde = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto bs = make_block_state(t.in, t.st.atoms[0]);
    Rng rng = stream_rng(s, StreamTag::user, 3, 0);
    Rng replay = rng;
    auto res = ttmcmc_no_change(t.in, bs, cfg, rng);
    uniform01(replay);
    double e = floored_uniform(replay, 0.01);
    LatentAtoms prop = t.st.atoms[0];
    int total = 0;
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t c = 0; c < 2; ++c) {
        int b = static_cast<int>(std::floor(3.0 * uniform01(replay))) - 1;
        total += b;
        if (b == 1) prop.coord(j, c) *= e;
        if (b == -1) prop.coord(j, c) /= e;
      }
    double tp = prop.within_bounds() ? t.target(prop) : neg_inf;
    double expect = tp - t.target(t.st.atoms[0]) + total * std::log(std::abs(e));
    if (std::isfinite(expect)) CHECK(res.log_ratio == doctest::Approx(expect).epsilon(1e-12));
    else CHECK_FALSE(res.accepted);
  }
}

TEST_CASE("block conditional structure") {
  auto d = testutil::tiny_dataset(3, 4, 1);
  ModelOptions opt;
  auto ctx = std::make_shared<ModelContext>(d, opt);
  SamplerConfig cfg;
  ModelState st = initial_state(*ctx, cfg);
  Eigen::MatrixXd mapped = mapped_locations(st.theta, *ctx);
  BlockInputs in{ctx.get(), &st, &mapped, st.theta.kernel(), 0};

  // first block: initial density, no backward factor; last block: no forward factor
  for (std::size_t k : {0u, 3u}) {
    in.k = k;
    auto bs = make_block_state(in, st.atoms[k]);
    double expect = poisson_log_mass(st.atoms[k].count(), st.hypers.lambda);
    expect += atoms_log_density(st.theta, st.atoms[k], k > 0 ? &st.atoms[k - 1] : nullptr, ctx->gap(k));
    if (k + 1 < 4) expect += atoms_log_density(st.theta, st.atoms[k + 1], &st.atoms[k], 1.0);
    expect += column_log_likelihood(st, *ctx, k, bs.f.data());
    CHECK(bs.log_target == doctest::Approx(expect));
  }

  // responses at other times do not enter the block
  in.k = 1;
  double before = make_block_state(in, st.atoms[1]).log_target;
  Eigen::MatrixXd y = d.y;
  y.col(3).array() += 5.0;
  ctx->set_response(y);
  CHECK(make_block_state(in, st.atoms[1]).log_target == before);
  y.col(1).array() += 5.0;
  ctx->set_response(y);
  CHECK(make_block_state(in, st.atoms[1]).log_target != before);
}

TEST_CASE("closed-form scalar conditionals") {
  PriorConfig prior;
  auto g = lambda_conditional(7, 2, prior);
  CHECK(g.shape == doctest::Approx(7.01));
  CHECK(g.rate == doctest::Approx(2.001));
  auto ig = sigma_sq_eps_conditional(0.0, 12, prior);
  CHECK(ig.shape == 1e4 + 6.0);
  CHECK(ig.scale == 1.0);
  CHECK_THROWS_AS(sigma_sq_eps_conditional(-1.0, 3, prior), InvalidState);
  auto nu = nu_conditional(2.0, 1.0, 100.0);
  CHECK(nu.var == doctest::Approx(100.0 / 101.0));
  CHECK(nu.mean == doctest::Approx(200.0 / 101.0));
  auto om = omega_sq_conditional(1.0, 0.0, {2.01, 1.01});
  CHECK(om.shape == doctest::Approx(2.51));
  CHECK(om.scale == doctest::Approx(1.51));
}
