#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pdgm/density_model.hpp"
#include "pdgm/process.hpp"
#include "pdgm/ratio_zzp.hpp"
#include "pdgm/rng.hpp"
#include "pdgm/types.hpp"

namespace pdgm {

class ModelSpecMismatch : public Error {
 public:
  using Error::Error;
};

// Backward step sizes; sum(deltas) == horizon, the last step absorbing
// rounding. An empty grid leaves samples at their initial draw.
struct TimeGrid {
  double horizon = 0.0;
  std::vector<double> deltas;

  std::size_t steps() const { return deltas.size(); }
  // Cumulative backward times t_0 = 0, ..., t_N.
  std::vector<double> times() const;
};

// delta_n = T_f ((n / N)^2 - ((n - 1) / N)^2), n = 1..N.
TimeGrid time_grid_quadratic(double horizon, std::size_t n);

enum class InitMode { BaseProduct, LearnedVelocity };

std::string to_string(InitMode mode);
InitMode parse_init_mode(std::string_view name);  // "base" | "learned"

struct BackwardConfig {
  TimeGrid grid;
  InitMode init = InitMode::BaseProduct;
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
  // Re-evaluate the ZZP ratio vector after every accepted flip within a step
  // instead of once per step at the pre-flip velocity.
  bool reevaluate_after_flip = false;
  double rate_cap = kDefaultRateCap;
  // Chains per work unit; fixed so results do not depend on `threads`.
  std::size_t chunk = 256;
};

struct BackwardStats {
  std::size_t model_evals = 0;  // network columns evaluated
  std::size_t saturations = 0;  // rate evaluations clamped at the cap
};

// A block of chains stored column-wise, each with its own random stream.
struct Chains {
  Matrix x;
  Matrix v;
  std::vector<Rng> rngs;

  Eigen::Index size() const { return x.cols(); }
};

struct StepOptions {
  bool reevaluate_after_flip = false;
  double rate_cap = kDefaultRateCap;
};

// One DJD step of the backward zig-zag process from backward time t_n.
void djd_zzp_step(const RatioEstimator& model, const ProcessSpec& spec,
                  Chains& chains, double t_n, double delta,
                  const StepOptions& opts, BackwardStats& stats);
// One DJD step of the backward randomized HMC.
void djd_rhmc_step(const VelocityDensity& model, const ProcessSpec& spec,
                   Chains& chains, double t_n, double delta,
                   const StepOptions& opts, BackwardStats& stats);
// One RDBDR step of the backward bouncy particle sampler.
void rdbdr_bps_step(const VelocityDensity& model, const ProcessSpec& spec,
                    Chains& chains, double t_n, double delta,
                    const StepOptions& opts, BackwardStats& stats);

// Single-chain conveniences.
State djd_zzp_step(const RatioEstimator& model, const ProcessSpec& spec,
                   const State& state, double t_n, double delta, Rng& rng);
State djd_rhmc_step(const VelocityDensity& model, const ProcessSpec& spec,
                    const State& state, double t_n, double delta, Rng& rng);
State rdbdr_bps_step(const VelocityDensity& model, const ProcessSpec& spec,
                     const State& state, double t_n, double delta, Rng& rng);

// The learned characteristics handed to the sampler; exactly one is used,
// chosen by the process kind.
struct BackwardModels {
  const RatioEstimator* ratio = nullptr;
  const VelocityDensity* density = nullptr;
};

struct BackwardResult {
  Matrix positions;   // n x d
  Matrix velocities;  // n x d
  BackwardStats stats;
};

// Variance of the Gaussian used for initial positions: 1 for the standard
// Gaussian potential; for the flat potential, the variance of the forward
// displacement over [0, T_f].
double base_position_variance(const ProcessSpec& spec);

BackwardResult run_backward(const BackwardModels& models, const ProcessSpec& spec,
                            const BackwardConfig& cfg);

}  // namespace pdgm
