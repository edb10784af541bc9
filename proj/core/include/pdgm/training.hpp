#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "pdgm/forward.hpp"
#include "pdgm/mlp.hpp"
#include "pdgm/process.hpp"
#include "pdgm/rng.hpp"
#include "pdgm/types.hpp"

namespace pdgm {

// Density omega of the training time t on [0, T_f].
enum class TimeDensity { Uniform, Quadratic };  // Quadratic: omega(t) ~ t

std::string to_string(TimeDensity omega);
TimeDensity parse_time_density(std::string_view name);
double sample_time(TimeDensity omega, double horizon, Rng& rng);

// Forward samples (X_t, V_t, t) stored column-wise; an empty weight vector
// means the uniform empirical average. Non-uniform weights let the losses
// compute exact expectations on finite-support laws.
struct SampleBatch {
  Matrix x;  // d x B
  Matrix v;  // d x B
  Vector t;  // B
  Vector weights;

  Eigen::Index size() const { return x.cols(); }
  double weight(Eigen::Index n) const {
    return weights.size() ? weights[n] : 1.0 / static_cast<double>(x.cols());
  }
};

struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

struct TrainConfig {
  std::size_t steps = 5000;
  std::size_t batch_size = 512;
  double lr = 5e-4;
  TimeDensity omega = TimeDensity::Uniform;
  // Number of coordinates per step in the ratio-matching loss; 0 uses all.
  int subsample = 0;
  std::uint64_t seed = 0;
  int threads = 1;
  // When positive, training draws states from a fixed pool of this many
  // pre-simulated trajectories instead of simulating afresh every step.
  std::size_t trajectory_cache = 0;
  int hidden_width = 128;
  int n_blocks = 4;
  int time_embed_dim = 32;
  int components = 8;  // mixture size for the conditional density model
  // Called after every step with (step, loss).
  std::function<void(std::size_t, double)> on_step;
};

// Draws the training batch of one step: data rows, initial velocities from
// nu, times from omega, and forward states at those times. Sample j of step
// s uses its own stream, so the batch is independent of cfg.threads.
SampleBatch draw_forward_batch(const Matrix& data, const ProcessSpec& spec,
                               const TrainConfig& cfg, std::size_t step);

// Full forward trajectories on [0, T_f] from random data rows, reused across
// training steps.
class TrajectoryPool {
 public:
  TrajectoryPool(const Matrix& data, const ProcessSpec& spec, std::size_t size,
                 std::uint64_t seed, int threads);

  std::size_t size() const { return trajectories_.size(); }
  const Trajectory& operator[](std::size_t i) const { return trajectories_[i]; }

 private:
  std::vector<Trajectory> trajectories_;
};

// Same as draw_forward_batch, from a fixed pool of trajectories.
SampleBatch draw_cached_batch(const TrajectoryPool& pool, const TrainConfig& cfg,
                              std::size_t step);

void check_finite(const LossGrad& lg, std::size_t step);

}  // namespace pdgm
