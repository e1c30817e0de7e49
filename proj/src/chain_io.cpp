#include "levydyn/chain_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "levydyn/errors.hpp"

namespace levydyn {

namespace {

constexpr const char* format_tag = "# levydyn-chain 1";

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, std::size_t row) {
  if (s == "nan") return std::nan("");
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError("chain row " + std::to_string(row) + ": bad number '" + s + "'");
  return v;
}

std::size_t parse_size(const std::string& s, std::size_t row) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError("chain row " + std::to_string(row) + ": bad count '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::vector<double> parse_list(const std::string& s, std::size_t row) {
  std::vector<double> out;
  std::istringstream ss(s);
  std::string tok;
  while (ss >> tok) out.push_back(parse_double(tok, row));
  return out;
}

std::vector<std::string> scalar_columns(const ChainHeader& h) {
  std::vector<std::string> cols = {"iteration", "lambda", "sigma_sq_eps", "alpha",
                                   "sigma_sq_alpha", "sigma_sq_phi", "mu_alpha"};
  for (std::size_t l = 0; l < h.p; ++l) cols.push_back("nu_" + std::to_string(l + 1));
  for (std::size_t l = 0; l < h.p; ++l) cols.push_back("omega_sq_" + std::to_string(l + 1));
  auto names = GlobalParams(h.p, h.ar_mode).names();
  cols.insert(cols.end(), names.begin(), names.end());
  return cols;
}

}  // namespace

std::string effects_name(EffectsMode mode) {
  switch (mode) {
    case EffectsMode::marginalized: return "marginalized";
    case EffectsMode::explicit_effects: return "explicit";
    case EffectsMode::none: return "none";
  }
  return "marginalized";
}

EffectsMode parse_effects(const std::string& name) {
  if (name == "marginalized") return EffectsMode::marginalized;
  if (name == "explicit") return EffectsMode::explicit_effects;
  if (name == "none") return EffectsMode::none;
  throw ParseError("unknown effects mode '" + name + "'");
}

std::string ar_mode_name(ArMode mode) { return mode == ArMode::iar ? "iar" : "ar1"; }

ArMode parse_ar_mode(const std::string& name) {
  if (name == "iar") return ArMode::iar;
  if (name == "ar1") return ArMode::regular_ar1;
  throw ParseError("unknown AR mode '" + name + "'");
}

ChainHeader make_chain_header(const ModelContext& ctx, const SamplerConfig& cfg) {
  ChainHeader h;
  h.p = ctx.p();
  h.m = ctx.m();
  h.n = ctx.n();
  h.effects = ctx.options().effects;
  h.ar_mode = ctx.ar_mode();
  h.r = ctx.options().r;
  h.fixed_sigma_sq_phi = ctx.options().fixed_sigma_sq_phi;
  h.estimate_alpha = ctx.options().estimate_alpha;
  h.has_phi = cfg.store_phi && h.effects == EffectsMode::explicit_effects;
  h.seed = cfg.seed;
  h.stats = ctx.data().stats;
  return h;
}

void write_chain(std::ostream& out, const ChainHeader& h, const std::vector<ChainSample>& samples) {
  out << format_tag << '\n';
  out << "# p=" << h.p << " m=" << h.m << " n=" << h.n << " effects=" << effects_name(h.effects)
      << " ar=" << ar_mode_name(h.ar_mode) << " r=" << h.r
      << " fixed_sigma_sq_phi=" << num(h.fixed_sigma_sq_phi)
      << " estimate_alpha=" << (h.estimate_alpha ? 1 : 0) << " has_phi=" << (h.has_phi ? 1 : 0)
      << " seed=" << h.seed;
  if (h.stats) out << " std_mean=" << num(h.stats->mean) << " std_sd=" << num(h.stats->sd);
  out << '\n';
  auto cols = scalar_columns(h);
  for (std::size_t k = 0; k < h.m; ++k) {
    cols.push_back("J_" + std::to_string(k + 1));
    cols.push_back("atoms_" + std::to_string(k + 1));
  }
  if (h.has_phi) cols.push_back("phi");
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  for (const auto& s : samples) {
    if (s.atoms.size() != h.m || s.theta.p() != h.p)
      throw InvalidState("write_chain: sample does not match header");
    out << s.iteration << ',' << num(s.hypers.lambda) << ',' << num(s.hypers.sigma_sq_eps) << ','
        << num(s.hypers.alpha) << ',' << num(s.hypers.sigma_sq_alpha) << ','
        << num(s.hypers.sigma_sq_phi) << ',' << num(s.hypers.mu_alpha);
    for (double v : s.hypers.nu) out << ',' << num(v);
    for (double v : s.hypers.omega_sq) out << ',' << num(v);
    for (double v : s.theta.raw()) out << ',' << num(v);
    for (const auto& a : s.atoms) {
      out << ',' << a.count() << ',';
      for (std::size_t j = 0; j < a.count(); ++j)
        for (std::size_t c = 0; c <= a.p; ++c) out << ((j || c) ? " " : "") << num(a.coord(j, c));
    }
    if (h.has_phi) {
      out << ',';
      for (Eigen::Index i = 0; i < s.phi.size(); ++i) out << (i ? " " : "") << num(s.phi.data()[i]);
    }
    out << '\n';
  }
}

ChainFile read_chain(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != format_tag) throw ParseError("chain: missing format tag");
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw ParseError("chain: missing metadata");
  std::map<std::string, std::string> meta;
  {
    std::istringstream ss(line.substr(2));
    std::string kv;
    while (ss >> kv) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw ParseError("chain: bad metadata entry '" + kv + "'");
      meta[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
  }
  auto get = [&](const std::string& key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw ParseError("chain: metadata missing '" + key + "'");
    return it->second;
  };
  ChainFile file;
  ChainHeader& h = file.header;
  h.p = parse_size(get("p"), 2);
  h.m = parse_size(get("m"), 2);
  h.n = parse_size(get("n"), 2);
  h.effects = parse_effects(get("effects"));
  h.ar_mode = parse_ar_mode(get("ar"));
  h.r = static_cast<int>(parse_size(get("r"), 2));
  h.fixed_sigma_sq_phi = parse_double(get("fixed_sigma_sq_phi"), 2);
  h.estimate_alpha = get("estimate_alpha") == "1";
  h.has_phi = get("has_phi") == "1";
  h.seed = parse_size(get("seed"), 2);
  if (meta.count("std_mean"))
    h.stats = Standardization{parse_double(get("std_mean"), 2), parse_double(get("std_sd"), 2)};

  if (!std::getline(in, line)) throw ParseError("chain: missing column header");
  auto cols = split(line, ',');
  const auto scalars = scalar_columns(h);
  const std::size_t expected = scalars.size() + 2 * h.m + (h.has_phi ? 1 : 0);
  if (cols.size() != expected) throw ParseError("chain: column header does not match metadata");
  for (std::size_t c = 0; c < scalars.size(); ++c)
    if (cols[c] != scalars[c]) throw ParseError("chain: unexpected column '" + cols[c] + "'");

  std::size_t row = 3;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto f = split(line, ',');
    if (f.size() != expected)
      throw ParseError("chain row " + std::to_string(row) + ": wrong field count");
    ChainSample s;
    std::size_t c = 0;
    s.iteration = parse_size(f[c++], row);
    s.hypers.lambda = parse_double(f[c++], row);
    s.hypers.sigma_sq_eps = parse_double(f[c++], row);
    s.hypers.alpha = parse_double(f[c++], row);
    s.hypers.sigma_sq_alpha = parse_double(f[c++], row);
    s.hypers.sigma_sq_phi = parse_double(f[c++], row);
    s.hypers.mu_alpha = parse_double(f[c++], row);
    for (std::size_t l = 0; l < h.p; ++l) s.hypers.nu.push_back(parse_double(f[c++], row));
    for (std::size_t l = 0; l < h.p; ++l) s.hypers.omega_sq.push_back(parse_double(f[c++], row));
    s.theta = GlobalParams(h.p, h.ar_mode);
    for (auto& v : s.theta.raw()) v = parse_double(f[c++], row);
    for (std::size_t k = 0; k < h.m; ++k) {
      std::size_t jc = parse_size(f[c++], row);
      auto vals = parse_list(f[c++], row);
      if (vals.size() != jc * (h.p + 1))
        throw ParseError("chain row " + std::to_string(row) + ": atom group size does not match J");
      LatentAtoms a(h.p);
      for (std::size_t j = 0; j < jc; ++j)
        a.push_back(vals[j * (h.p + 1)],
                    std::span<const double>(vals).subspan(j * (h.p + 1) + 1, h.p));
      s.atoms.push_back(std::move(a));
    }
    if (h.has_phi) {
      auto vals = parse_list(f[c++], row);
      if (vals.size() != h.n * h.m)
        throw ParseError("chain row " + std::to_string(row) + ": phi field has wrong size");
      s.phi = Eigen::Map<Eigen::MatrixXd>(vals.data(), static_cast<Eigen::Index>(h.n),
                                          static_cast<Eigen::Index>(h.m));
    }
    file.samples.push_back(std::move(s));
  }
  return file;
}

void write_chain_file(const std::string& path, const ChainHeader& header,
                      const std::vector<ChainSample>& samples) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  write_chain(out, header, samples);
}

ChainFile read_chain_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_chain(in);
}

}  // namespace levydyn
