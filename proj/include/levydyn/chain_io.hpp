#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "levydyn/sampler.hpp"

namespace levydyn {

struct ChainHeader {
  std::size_t p = 1, m = 1, n = 1;
  EffectsMode effects = EffectsMode::marginalized;
  ArMode ar_mode = ArMode::iar;
  int r = 2;
  double fixed_sigma_sq_phi = 0.0;
  bool estimate_alpha = false;
  bool has_phi = false;
  std::uint64_t seed = 1;
  std::optional<Standardization> stats;
};

struct ChainFile {
  ChainHeader header;
  std::vector<ChainSample> samples;
};

ChainHeader make_chain_header(const ModelContext& ctx, const SamplerConfig& cfg);

std::string effects_name(EffectsMode mode);
EffectsMode parse_effects(const std::string& name);
std::string ar_mode_name(ArMode mode);
ArMode parse_ar_mode(const std::string& name);

// Two comment lines (format tag, key=value metadata), a column header, then
// one row per stored sample. Atom groups hold J and J*(p+1) space-separated
// numbers ordered beta, mu_1..mu_p per atom.
void write_chain(std::ostream& out, const ChainHeader& header,
                 const std::vector<ChainSample>& samples);
ChainFile read_chain(std::istream& in);
void write_chain_file(const std::string& path, const ChainHeader& header,
                      const std::vector<ChainSample>& samples);
ChainFile read_chain_file(const std::string& path);

}  // namespace levydyn
