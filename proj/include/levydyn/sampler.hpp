#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "levydyn/model.hpp"
#include "levydyn/parallel.hpp"
#include "levydyn/random_effects.hpp"
#include "levydyn/rng.hpp"

namespace levydyn {

struct MoveProbabilities {
  double birth = 0.0;
  double death = 0.0;
  double no_change = 1.0;
};

struct SamplerConfig {
  double p_tilde = 0.5;  // additive branch probability
  double q_tilde = 0.5;  // additive branch probability of the enhancement step
  double scale = 0.05;   // a
  double shrink = 0.01;  // c, no-change and enhancement use c * a
  double mult_floor = 0.01;
  double weight_birth = 1.0 / 3.0;
  double weight_death = 1.0 / 3.0;
  double weight_no_change = 1.0 / 3.0;
  std::size_t iterations = 110000;
  std::size_t burn_in = 10000;
  std::size_t thin = 10;
  std::size_t workers = 1;
  std::uint64_t seed = 1;
  bool store_phi = false;
  // Random-walk step on log sigma_sq_eps, used only when the marginalized
  // noise variance has a fixed nonzero sigma_sq_phi component.
  double eps_rw_step = 0.1;

  MoveProbabilities move_probabilities(std::size_t j, std::size_t j_max) const;
  void validate() const;
  std::size_t stored_count() const;
};

struct MoveCounter {
  std::uint64_t proposed = 0;
  std::uint64_t accepted = 0;
  double rate() const;
  void record(bool acc) {
    ++proposed;
    accepted += acc ? 1 : 0;
  }
};

struct MoveStats {
  MoveCounter birth, death, no_change, tmcmc, enhancement;
  void merge(const MoveStats& other);
  // Pooled over birth, death and no-change.
  double ttmcmc_rate() const;
};

struct ChainSample {
  std::size_t iteration = 0;
  GlobalParams theta;
  ScalarHypers hypers;
  std::vector<LatentAtoms> atoms;
  Eigen::MatrixXd phi;
};

struct ChainResult {
  std::vector<ChainSample> samples;
  MoveStats stats;
};

// Read-only inputs of one time-block update.
struct BlockInputs {
  const ModelContext* ctx = nullptr;
  const ModelState* state = nullptr;
  const Eigen::MatrixXd* mapped = nullptr;
  KernelParams kernel;
  std::size_t k = 0;
};

struct BlockState {
  LatentAtoms atoms;
  std::vector<double> f;  // f at all training locations for time k
  double log_target = 0.0;
};

struct MoveResult {
  bool accepted = false;
  double log_ratio = 0.0;
};

enum class MoveKind { birth, death, no_change };

// Block conditional: [J|lambda], AR factors into and out of block k, mu bounds
// and the time-k likelihood slice.
double block_log_target(const BlockInputs& in, const LatentAtoms& atoms, const double* f);
BlockState make_block_state(const BlockInputs& in, const LatentAtoms& atoms);

// Deterministic pieces of the dimension-changing moves.
LatentAtoms additive_birth_apply(const LatentAtoms& atoms, std::size_t parent,
                                 std::span<const double> eps, double a);
// Merges atom j with the last atom; eps_out receives the recovered draws.
LatentAtoms additive_death_apply(const LatentAtoms& atoms, std::size_t j, double a,
                                 std::vector<double>* eps_out);
LatentAtoms multiplicative_birth_apply(const LatentAtoms& atoms, std::size_t parent,
                                       std::span<const double> eps);
// Returns false when the pair is not reachable by a multiplicative birth.
bool multiplicative_death_apply(const LatentAtoms& atoms, std::size_t j,
                                std::span<const int> signs, double floor, LatentAtoms* out);

double additive_birth_log_structural(std::size_t j, std::size_t j_max, std::span<const double> eps,
                                     double a, const SamplerConfig& cfg);
double additive_death_log_structural(std::size_t j, std::size_t j_max, std::span<const double> eps,
                                     double a, const SamplerConfig& cfg);
double multiplicative_birth_log_structural(std::size_t j, std::size_t j_max,
                                           std::span<const double> parent,
                                           std::span<const double> eps, const SamplerConfig& cfg);
double multiplicative_death_log_structural(std::size_t j, std::size_t j_max,
                                           std::span<const double> last, const SamplerConfig& cfg);

// log |eps|^(sum b)
double tmcmc_log_jacobian(double eps, std::span<const int> b);

MoveResult ttmcmc_birth(const BlockInputs& in, BlockState& bs, const SamplerConfig& cfg, Rng& rng);
MoveResult ttmcmc_death(const BlockInputs& in, BlockState& bs, const SamplerConfig& cfg, Rng& rng);
MoveResult ttmcmc_no_change(const BlockInputs& in, BlockState& bs, const SamplerConfig& cfg,
                            Rng& rng);
MoveKind update_time_block(const BlockInputs& in, BlockState& bs, const SamplerConfig& cfg, Rng& rng,
                           MoveStats& stats);

// Full conditionals of the scalar block.
GammaParams lambda_conditional(std::size_t sum_j, std::size_t m, const PriorConfig& prior);
InvGammaPrior sigma_sq_eps_conditional(double rss, std::size_t count, const PriorConfig& prior);
NormalParams nu_conditional(double z, double omega_sq, double nu_var);
InvGammaPrior omega_sq_conditional(double z, double nu, const InvGammaPrior& prior);

struct ZetaSums {
  std::size_t sum_j = 0;
  double rss = 0.0;         // sum (y - alpha - offset - f)^2
  double resid_sum = 0.0;   // sum (y - offset - f), offset without alpha
  double phi_sq_dev = 0.0;  // sum (phi - phi0)^2
  std::size_t count = 0;
};

void gibbs_update_zeta(ModelState& state, const ModelContext& ctx, const ZetaSums& sums,
                       const SamplerConfig& cfg, Rng& rng);

ModelState initial_state(const ModelContext& ctx, const SamplerConfig& cfg);

class Sampler {
 public:
  Sampler(std::shared_ptr<ModelContext> ctx, SamplerConfig cfg);
  Sampler(std::shared_ptr<ModelContext> ctx, SamplerConfig cfg, ModelState state);

  const ModelState& state() const { return state_; }
  void set_state(ModelState state);
  const ModelContext& context() const { return *ctx_; }
  void set_response(const Eigen::MatrixXd& y);
  const MoveStats& stats() const { return stats_; }
  const Eigen::MatrixXd& f() const { return f_; }
  const SamplerConfig& config() const { return cfg_; }

  // One sweep of the algorithm with iteration label r.
  void iterate(std::size_t r);
  ChainResult run();

  void update_blocks(Parity parity, std::size_t r);
  void update_theta(std::size_t r);
  void enhance_theta(std::size_t r);
  void update_phi(std::size_t r);
  void update_zeta(std::size_t r);

  struct ThetaEval {
    double log_target = neg_inf;
    Eigen::MatrixXd mapped;
    Eigen::MatrixXd f;
  };
  ThetaEval evaluate_theta(const GlobalParams& theta);
  ChainSample snapshot(std::size_t r) const;

 private:
  void refresh();
  double current_theta_target();
  bool try_theta(const GlobalParams& proposal, double log_jacobian, double u);

  std::shared_ptr<ModelContext> ctx_;
  SamplerConfig cfg_;
  WorkerPool pool_;
  ModelState state_;
  Eigen::MatrixXd mapped_;
  Eigen::MatrixXd f_;  // n x m
  MoveStats stats_;
};

ChainResult run_chain(const SpaceTimeDataset& data, const SamplerConfig& cfg,
                      const ModelOptions& options);

}  // namespace levydyn
