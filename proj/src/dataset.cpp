#include "levydyn/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "levydyn/errors.hpp"

namespace levydyn {

void SpaceTimeDataset::validate() const {
  if (n() == 0 || m() == 0 || p() == 0) throw InvalidArgument("dataset: empty");
  if (static_cast<std::size_t>(y.rows()) != n() || static_cast<std::size_t>(y.cols()) != m())
    throw InvalidArgument("dataset: y must be n x m");
  for (std::size_t k = 1; k < m(); ++k)
    if (!(times[k] > times[k - 1]))
      throw InvalidArgument("dataset: times must be strictly increasing");
  if (!locations.allFinite() || !y.allFinite())
    throw InvalidArgument("dataset: non-finite value");
  if (stats && !(stats->sd > 0.0)) throw InvalidArgument("dataset: sd must be positive");
}

std::pair<SpaceTimeDataset, Standardization> standardize(const SpaceTimeDataset& data) {
  const double count = static_cast<double>(data.y.size());
  if (data.y.size() < 2) throw DegenerateData("standardize: need at least two values");
  double mean = data.y.mean();
  double ss = (data.y.array() - mean).square().sum();
  double sd = std::sqrt(ss / (count - 1.0));
  if (!(sd > 0.0)) throw DegenerateData("standardize: constant response");
  SpaceTimeDataset out = data;
  out.y = (data.y.array() - mean) / sd;
  Standardization st{mean, sd};
  out.stats = st;
  return {out, st};
}

double inverse_transform(double value, const Standardization& stats) {
  return value * stats.sd + stats.mean;
}

std::vector<double> inverse_transform(const std::vector<double>& values,
                                      const Standardization& stats) {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = inverse_transform(values[i], stats);
  return out;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) fields.push_back(cur);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& raw, std::size_t row) {
  std::string s = trim(raw);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ParseError("csv row " + std::to_string(row) + ": bad number '" + s + "'");
  return v;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

SpaceTimeDataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("csv row 1: missing header");
  auto header = split_fields(line);
  if (header.size() < 3) throw ParseError("csv row 1: header needs s1..sp,t,y");
  const std::size_t p = header.size() - 2;
  for (std::size_t l = 0; l < p; ++l)
    if (trim(header[l]) != "s" + std::to_string(l + 1))
      throw ParseError("csv row 1: expected column s" + std::to_string(l + 1));
  if (trim(header[p]) != "t" || trim(header[p + 1]) != "y")
    throw ParseError("csv row 1: expected columns t,y");

  struct Row {
    std::vector<double> s;
    double t, y;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    auto f = split_fields(line);
    if (f.size() != p + 2)
      throw ParseError("csv row " + std::to_string(row_no) + ": expected " +
                       std::to_string(p + 2) + " fields");
    Row r;
    r.line = row_no;
    for (std::size_t l = 0; l < p; ++l) r.s.push_back(parse_number(f[l], row_no));
    r.t = parse_number(f[p], row_no);
    r.y = parse_number(f[p + 1], row_no);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ParseError("csv: no data rows");

  std::map<std::vector<double>, std::size_t> loc_index;
  std::vector<std::vector<double>> locs;
  std::map<double, std::size_t> time_index;
  for (const auto& r : rows) {
    if (loc_index.emplace(r.s, locs.size()).second) locs.push_back(r.s);
    time_index.emplace(r.t, 0);
  }
  SpaceTimeDataset data;
  for (auto& [t, idx] : time_index) {
    idx = data.times.size();
    data.times.push_back(t);
  }
  const std::size_t n = locs.size(), m = data.times.size();
  data.locations.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < p; ++l) data.locations(i, l) = locs[i][l];
  data.y.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  std::vector<char> seen(n * m, 0);
  for (const auto& r : rows) {
    std::size_t i = loc_index.at(r.s), k = time_index.at(r.t);
    if (seen[i * m + k])
      throw ParseError("csv row " + std::to_string(r.line) + ": duplicate (location, time)");
    seen[i * m + k] = 1;
    data.y(i, k) = r.y;
  }
  if (rows.size() != n * m)
    throw ParseError("csv: ragged grid (" + std::to_string(rows.size()) + " rows for " +
                     std::to_string(n) + " locations x " + std::to_string(m) + " times)");
  return data;
}

SpaceTimeDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_csv(in);
}

void write_csv(const SpaceTimeDataset& data, std::ostream& out) {
  for (std::size_t l = 0; l < data.p(); ++l) out << 's' << l + 1 << ',';
  out << "t,y\n";
  for (std::size_t i = 0; i < data.n(); ++i)
    for (std::size_t k = 0; k < data.m(); ++k) {
      for (std::size_t l = 0; l < data.p(); ++l) out << fmt17(data.locations(i, l)) << ',';
      out << fmt17(data.times[k]) << ',' << fmt17(data.y(i, k)) << '\n';
    }
}

void write_csv(const SpaceTimeDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  write_csv(data, out);
}

double exp_covariance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::exp(-(a - b).norm());
}

GpSampler::GpSampler(const Eigen::MatrixXd& locations) {
  const Eigen::Index n = locations.rows();
  cov_.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      cov_(i, j) = exp_covariance(locations.row(i).transpose(), locations.row(j).transpose());
  double jitter = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::MatrixXd c = cov_;
    c.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() == Eigen::Success) {
      lower_ = llt.matrixL();
      jitter_ = jitter;
      return;
    }
    jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
  }
  throw NumericError("gp_sample: covariance factorization failed after jitter");
}

Eigen::VectorXd GpSampler::draw(Rng& rng) const {
  Eigen::VectorXd z(lower_.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = std_normal(rng);
  return lower_ * z;
}

Eigen::VectorXd gp_sample(const Eigen::MatrixXd& locations, Rng& rng) {
  return GpSampler(locations).draw(rng);
}

void GqnConfig::validate() const {
  if (n == 0 || m == 0 || p == 0) throw ConfigError("gqn: n, m, p must be >= 1");
  if (n_test >= n) throw ConfigError("gqn: n_test must leave training locations");
  if (!(coef_sd >= 0.0)) throw ConfigError("gqn: coef_sd must be >= 0");
  if (!(tan_clamp > 0.0)) throw ConfigError("gqn: tan_clamp must be positive");
}

Eigen::VectorXd gqn_evolve(const Eigen::VectorXd& prev, const GqnCoefficients& coef,
                           const Eigen::VectorXd& eta) {
  Eigen::VectorXd g = prev.array().square();
  Eigen::VectorXd next = coef.a * prev + eta;
  for (Eigen::Index i = 0; i < prev.size(); ++i)
    next(i) += prev.dot(coef.b[static_cast<std::size_t>(i)] * g);
  return next;
}

GqnResult gqn_simulate(const GqnConfig& cfg) {
  cfg.validate();
  Rng rng = stream_rng(cfg.seed, StreamTag::simulate, 0, 0);
  const auto n = static_cast<Eigen::Index>(cfg.n);
  const auto m = static_cast<Eigen::Index>(cfg.m);
  Eigen::MatrixXd locs(n, static_cast<Eigen::Index>(cfg.p));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index l = 0; l < locs.cols(); ++l) locs(i, l) = uniform01(rng);

  GqnCoefficients coef;
  coef.a.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) coef.a(i, j) = cfg.coef_sd * std_normal(rng);
  coef.b.assign(cfg.n, Eigen::MatrixXd(n, n));
  for (auto& bi : coef.b)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index l = 0; l < n; ++l) bi(j, l) = cfg.coef_sd * std_normal(rng);

  GpSampler gp(locs);
  GqnResult out;
  out.beta.resize(n, m);
  Eigen::MatrixXd y(n, m);
  Eigen::VectorXd beta = gp.draw(rng);
  for (Eigen::Index k = 0; k < m; ++k) {
    Eigen::VectorXd eta = gp.draw(rng);
    beta = gqn_evolve(beta, coef, eta);
    Eigen::VectorXd phi1 = gp.draw(rng), phi2 = gp.draw(rng), eps = gp.draw(rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      double tb = std::tan(beta(i));
      if (!std::isfinite(tb) || std::abs(tb) > cfg.tan_clamp) {
        tb = std::copysign(cfg.tan_clamp, std::isfinite(tb) ? tb : beta(i));
        out.clamped.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(k));
      }
      y(i, k) = phi1(i) + phi2(i) * tb + eps(i);
    }
    out.beta.col(k) = beta;
  }

  std::vector<double> times(cfg.m);
  for (std::size_t k = 0; k < cfg.m; ++k) times[k] = static_cast<double>(k + 1);
  const Eigen::Index n_train = n - static_cast<Eigen::Index>(cfg.n_test);
  out.train.locations = locs.topRows(n_train);
  out.train.y = y.topRows(n_train);
  out.train.times = times;
  out.test.locations = locs.bottomRows(static_cast<Eigen::Index>(cfg.n_test));
  out.test.y = y.bottomRows(static_cast<Eigen::Index>(cfg.n_test));
  out.test.times = times;
  return out;
}

}  // namespace levydyn
