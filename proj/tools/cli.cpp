#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "levydyn/chain_io.hpp"
#include "levydyn/dataset.hpp"
#include "levydyn/diagnostics.hpp"
#include "levydyn/errors.hpp"
#include "levydyn/prediction.hpp"
#include "levydyn/sampler.hpp"
#include "levydyn/version.hpp"

namespace levydyn::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PriorFlags {
  double a = 2.01, b = 1.01;
  double eps_a = 1e4, eps_b = 1.0;
  double phi_a = 1e4, phi_b = 1.0;
  double lambda_b = 0.001;
  double lambda_a = 0.01;
  double nu_var = 100.0, rho_var = 100.0;

  PriorConfig to_prior() const {
    PriorConfig pc;
    InvGammaPrior ig{a, b};
    pc.c_tilde = pc.c = pc.sigma_tilde_sq = pc.tau = pc.xi = ig;
    pc.sigma_sq_mu = pc.sigma_sq_beta = pc.omega_sq = ig;
    pc.sigma_sq_eps = {eps_a, eps_b};
    pc.sigma_sq_phi = {phi_a, phi_b};
    pc.lambda_shape = lambda_a;
    pc.lambda_rate = lambda_b;
    pc.nu_var = nu_var;
    pc.rho_var = rho_var;
    return pc;
  }
};

void write_manifest(const fs::path& dir, const std::string& command, const CLI::App& sub) {
  std::ofstream out(dir / "manifest.txt");
  out << "# " << version_string << '\n' << "# command=" << command << '\n';
  out << sub.config_to_str(true, false);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory " + dir.string());
}

std::vector<SpaceTimePoint> points_of(const SpaceTimeDataset& d) {
  std::vector<SpaceTimePoint> pts;
  for (std::size_t i = 0; i < d.n(); ++i)
    for (std::size_t k = 0; k < d.m(); ++k) {
      SpaceTimePoint pt;
      for (std::size_t l = 0; l < d.p(); ++l)
        pt.s.push_back(d.locations(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)));
      pt.t = d.times[k];
      pts.push_back(std::move(pt));
    }
  return pts;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Flat key=value lines become --key=value tokens placed right after the
// subcommand, so anything given on the command line wins (last value taken).
std::vector<std::string> expand_config(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.size() < 2) return args;
  std::ifstream in(path);
  if (!in) return args;  // the parser reports the missing file
  std::vector<std::string> extra;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (key.empty() || key == "config")
      throw UsageError(path + ":" + std::to_string(lineno) + ": bad key");
    extra.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin() + 2, extra.begin(), extra.end());
  return args;
}

std::vector<double> parse_edges(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(trim(tok), &used));
      if (used != trim(tok).size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError("bad --edges value: " + tok);
    }
  }
  return out;
}

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int run(int argc, const char* const* argv) {
  std::string config_path;
  CLI::App app{"Levy-dynamic spatio-temporal process: simulate, fit, predict, diagnose"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // simulate
  GqnConfig gqn;
  std::string sim_out;
  auto* sim = app.add_subcommand("simulate", "generate a GQN train/test pair");
  sim->add_option("--config", config_path, "flat key=value file, flags override it")->check(CLI::ExistingFile);
  sim->add_option("--out", sim_out, "output directory")->required();
  sim->add_option("--seed", gqn.seed, "base seed")->capture_default_str();
  sim->add_option("--n", gqn.n, "total locations")->capture_default_str();
  sim->add_option("--m", gqn.m, "time points")->capture_default_str();
  sim->add_option("--p", gqn.p, "spatial dimension")->capture_default_str();
  sim->add_option("--n-test", gqn.n_test, "held-out locations")->capture_default_str();
  sim->add_option("--coef-sd", gqn.coef_sd, "sd of a_ij and b_ijl")->capture_default_str();

  // fit
  SamplerConfig scfg;
  scfg.workers = default_workers();
  ModelOptions mopt;
  PriorFlags pflags;
  std::string fit_data, fit_out;
  bool explicit_mode = false;
  bool marginalized = false;
  auto* fit = app.add_subcommand("fit", "run the sampler on a CSV dataset");
  fit->add_option("--config", config_path, "flat key=value file, flags override it")->check(CLI::ExistingFile);
  fit->add_option("--data", fit_data, "training CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", fit_out, "output directory")->required();
  fit->add_option("--seed", scfg.seed, "base seed")->capture_default_str();
  fit->add_option("--workers", scfg.workers, "worker threads")->capture_default_str();
  fit->add_option("--iters", scfg.iterations, "iteration budget")->capture_default_str();
  fit->add_option("--burnin", scfg.burn_in, "burn-in iterations")->capture_default_str();
  fit->add_option("--thin", scfg.thin, "thinning stride")->capture_default_str();
  auto* mflag = fit->add_flag("--marginalized", marginalized, "integrate out the random effects (default)");
  fit->add_flag("--explicit", explicit_mode, "sample the random effects")->excludes(mflag);
  fit->add_option("--sigma-sq-phi", mopt.fixed_sigma_sq_phi, "fixed sigma_sq_phi in marginalized mode")
      ->capture_default_str();
  fit->add_option("--jmax", mopt.j_max, "maximum atoms per time")->capture_default_str();
  fit->add_option("--scale", scfg.scale, "scaling constant a")->capture_default_str();
  fit->add_option("--shrink", scfg.shrink, "shrink factor c")->capture_default_str();
  fit->add_option("--p-tilde", scfg.p_tilde, "additive branch probability")->capture_default_str();
  fit->add_option("--q-tilde", scfg.q_tilde, "enhancement additive probability")->capture_default_str();
  fit->add_option("--store-phi", scfg.store_phi, "store random effects in the chain")->capture_default_str();
  fit->add_option("--prior-a", pflags.a, "default inverse-gamma shape")->capture_default_str();
  fit->add_option("--prior-b", pflags.b, "default inverse-gamma scale")->capture_default_str();
  fit->add_option("--eps-a", pflags.eps_a, "sigma_sq_eps shape")->capture_default_str();
  fit->add_option("--eps-b", pflags.eps_b, "sigma_sq_eps scale")->capture_default_str();
  fit->add_option("--phi-a", pflags.phi_a, "sigma_sq_phi shape")->capture_default_str();
  fit->add_option("--phi-b", pflags.phi_b, "sigma_sq_phi scale")->capture_default_str();
  fit->add_option("--lambda-a", pflags.lambda_a, "lambda gamma shape")->capture_default_str();
  fit->add_option("--lambda-b", pflags.lambda_b, "lambda gamma rate")->capture_default_str();
  fit->add_option("--nu-var", pflags.nu_var, "prior variance of nu")->capture_default_str();
  fit->add_option("--rho-var", pflags.rho_var, "prior variance of transformed rho")->capture_default_str();

  // predict
  std::string pred_data, pred_chain, pred_points, pred_out;
  PredictOptions popt;
  popt.workers = default_workers();
  double lower = 1.0 / 16.0, upper = 15.0 / 16.0;
  auto* pred = app.add_subcommand("predict", "posterior predictive bands at new points");
  pred->add_option("--config", config_path, "flat key=value file, flags override it")->check(CLI::ExistingFile);
  pred->add_option("--data", pred_data, "training CSV used for the fit")->required()->check(CLI::ExistingFile);
  pred->add_option("--chain", pred_chain, "chain file from fit")->required()->check(CLI::ExistingFile);
  pred->add_option("--points", pred_points, "CSV of prediction points (y column compared if present)")
      ->required()
      ->check(CLI::ExistingFile);
  pred->add_option("--out", pred_out, "output directory")->required();
  pred->add_option("--seed", popt.seed, "base seed")->capture_default_str();
  pred->add_option("--workers", popt.workers, "worker threads")->capture_default_str();
  pred->add_option("--lower", lower, "lower band level")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  pred->add_option("--upper", upper, "upper band level")->capture_default_str()->check(CLI::Range(0.0, 1.0));

  // diagnose
  std::string diag_data, diag_out;
  StationarityOptions ks_opt;
  StationarityOptions cov_opt;
  cov_opt.c0 = 0.05;
  LagBin lag_bin{0.0, 1.5};
  std::string edges_str = "0,1.5,3,4.5,6,7.5,9";
  auto* diag = app.add_subcommand("diagnose", "stationarity, correlation and normality reports");
  diag->add_option("--config", config_path, "flat key=value file, flags override it")->check(CLI::ExistingFile);
  diag->add_option("--data", diag_data, "dataset CSV")->required()->check(CLI::ExistingFile);
  diag->add_option("--out", diag_out, "output directory")->required();
  diag->add_option("--c0", ks_opt.c0, "initial KS threshold")->capture_default_str();
  diag->add_option("--cov-c0", cov_opt.c0, "initial covariance threshold")->capture_default_str();
  diag->add_option("--lag-lower", lag_bin.lower, "covariance lag bin lower edge")->capture_default_str();
  diag->add_option("--lag-upper", lag_bin.upper, "covariance lag bin upper edge")->capture_default_str();
  diag->add_option("--edges", edges_str, "comma-separated correlation lag bin edges")->capture_default_str();

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  }
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    if (sim->parsed()) {
      gqn.validate();
      fs::path dir(sim_out);
      ensure_dir(dir);
      auto res = gqn_simulate(gqn);
      write_csv(res.train, (dir / "train.csv").string());
      write_csv(res.test, (dir / "test.csv").string());
      write_manifest(dir, "simulate", *sim);
      std::cout << "simulate: " << res.train.n() << " train and " << res.test.n()
                << " test locations, " << res.train.m() << " times, " << res.clamped.size()
                << " clamped cells\n";
      return 0;
    }
    if (fit->parsed()) {
      mopt.effects = explicit_mode ? EffectsMode::explicit_effects : EffectsMode::marginalized;
      mopt.prior = pflags.to_prior();
      mopt.prior.validate();
      scfg.validate();
      fs::path dir(fit_out);
      ensure_dir(dir);
      auto raw = load_csv(fit_data);
      auto [data, stats] = standardize(raw);
      auto ctx = std::make_shared<ModelContext>(data, mopt);
      Sampler sampler(ctx, scfg);
      auto chain = sampler.run();
      write_chain_file((dir / "chain.csv").string(), make_chain_header(*ctx, scfg), chain.samples);
      {
        std::ofstream ms(dir / "move_stats.csv");
        write_acceptance_report(ms, acceptance_report(chain.stats));
      }
      write_manifest(dir, "fit", *fit);
      std::cout << "fit: " << chain.samples.size() << " stored samples, overall TTMCMC acceptance "
                << format_rate(acceptance_report(chain.stats).back().rate) << '\n';
      return 0;
    }
    if (pred->parsed()) {
      if (!(lower < upper)) throw UsageError("--lower must be below --upper");
      auto chain = read_chain_file(pred_chain);
      const auto& h = chain.header;
      auto raw = load_csv(pred_data);
      if (raw.p() != h.p || raw.n() != h.n || raw.m() != h.m)
        throw UsageError("training data does not match the chain header");
      SpaceTimeDataset data = raw;
      if (h.stats) {
        data.y = (raw.y.array() - h.stats->mean) / h.stats->sd;
        data.stats = h.stats;
      }
      ModelOptions o;
      o.effects = h.effects;
      o.r = h.r;
      o.fixed_sigma_sq_phi = h.fixed_sigma_sq_phi;
      o.estimate_alpha = h.estimate_alpha;
      ModelContext ctx(data, o);
      auto targets = load_csv(pred_points);
      auto pts = points_of(targets);
      popt.levels = {lower, 0.5, upper};
      auto bands = posterior_predict(chain.samples, pts, ctx, popt);
      fs::path dir(pred_out);
      ensure_dir(dir);
      std::ofstream out(dir / "bands.csv");
      for (std::size_t l = 0; l < targets.p(); ++l) out << 's' << l + 1 << ',';
      out << "t,lower,median,upper,y,covered\n";
      std::size_t covered = 0;
      for (std::size_t j = 0; j < pts.size(); ++j) {
        for (double v : pts[j].s) out << g17(v) << ',';
        auto jj = static_cast<Eigen::Index>(j);
        double y = targets.y(static_cast<Eigen::Index>(j / targets.m()),
                             static_cast<Eigen::Index>(j % targets.m()));
        bool cov = bands.bands(jj, 0) <= y && y <= bands.bands(jj, 2);
        covered += cov ? 1 : 0;
        out << g17(pts[j].t) << ',' << g17(bands.bands(jj, 0)) << ',' << g17(bands.bands(jj, 1))
            << ',' << g17(bands.bands(jj, 2)) << ',' << g17(y) << ',' << (cov ? 1 : 0) << '\n';
      }
      write_manifest(dir, "predict", *pred);
      std::cout << "predict: " << pts.size() << " points, coverage "
                << static_cast<double>(covered) / static_cast<double>(pts.size()) << '\n';
      return 0;
    }
    if (diag->parsed()) {
      auto edges = parse_edges(edges_str);
      auto data = load_csv(diag_data);
      fs::path dir(diag_out);
      ensure_dir(dir);
      {
        std::ofstream out(dir / "stationarity.csv");
        write_stationarity_csv(out, recursive_stationarity_test(data, ks_opt));
      }
      {
        std::ofstream out(dir / "cov_stationarity.csv");
        write_stationarity_csv(out, recursive_cov_stationarity_test(data, lag_bin, cov_opt));
      }
      {
        std::ofstream out(dir / "lagged_correlation.csv");
        write_lag_bins_csv(out, lagged_correlation(data, edges));
      }
      {
        std::vector<double> all(data.y.data(), data.y.data() + data.y.size());
        std::ofstream out(dir / "normality.csv");
        write_normality_csv(out, normality_summary(all));
      }
      write_manifest(dir, "diagnose", *diag);
      std::cout << "diagnose: reports written to " << dir.string() << '\n';
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: parse: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace levydyn::cli
