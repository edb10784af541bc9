#pragma once

#include <atomic>
#include <cstddef>
#include <span>
#include <vector>

#include "pdgm/mlp.hpp"
#include "pdgm/process.hpp"
#include "pdgm/rng.hpp"
#include "pdgm/training.hpp"
#include "pdgm/types.hpp"

namespace pdgm {

// A conditional law p(v | x, t) over velocities, with density evaluation and
// sampling. t is forward time.
class VelocityDensity {
 public:
  virtual ~VelocityDensity() = default;
  virtual int dim() const = 0;
  // One log-density per column.
  virtual Vector log_density(const Matrix& v, const Matrix& x, const Vector& t) const = 0;
  // Column j is drawn with rngs[j].
  virtual Matrix sample(const Matrix& x, const Vector& t, std::span<Rng> rngs) const = 0;
};

// log nu(v) for the standard normal nu.
double standard_normal_log_density(const Vector& v);

// p(v | x, t) = nu(v): the exact conditional when the forward process starts
// at its stationary law.
class StandardNormalVelocity : public VelocityDensity {
 public:
  explicit StandardNormalVelocity(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  Vector log_density(const Matrix& v, const Matrix& x, const Vector& t) const override;
  Matrix sample(const Matrix& x, const Vector& t, std::span<Rng> rngs) const override;

 private:
  int dim_;
};

inline constexpr double kLogStdMin = -7.0;
inline constexpr double kLogStdMax = 3.0;

// Diagonal Gaussian mixture whose weights, means and log-stds are produced by
// a time-conditioned network of the position. Output layout per column:
// K logits, then K*d means, then K*d log-stds (component-major).
class CondDensityModel : public VelocityDensity {
 public:
  CondDensityModel(ProcessSpec spec, Mlp net, int components,
                   TimeDensity omega = TimeDensity::Uniform);

  static MlpArch architecture(const ProcessSpec& spec, int components,
                              int hidden_width, int n_blocks, int time_embed_dim);
  static CondDensityModel create(const ProcessSpec& spec, const TrainConfig& cfg);

  int dim() const override { return spec_.dim; }
  int components() const { return components_; }
  const ProcessSpec& spec() const { return spec_; }
  TimeDensity omega() const { return omega_; }
  const Mlp& net() const { return net_; }
  Mlp& net() { return net_; }

  Vector log_density(const Matrix& v, const Matrix& x, const Vector& t) const override;
  Matrix sample(const Matrix& x, const Vector& t, std::span<Rng> rngs) const override;

  // Mixture parameters for one network output column.
  struct Mixture {
    Vector log_weights;  // K, normalized
    Matrix means;        // d x K
    Matrix log_stds;     // d x K, clamped
  };
  Mixture mixture(const Vector& output) const;

 private:
  ProcessSpec spec_;
  Mlp net_;
  int components_;
  TimeDensity omega_;
};

// -sum_n w_n log p(v_n | x_n, t_n)
double ml_loss(const VelocityDensity& model, const SampleBatch& batch);
LossGrad ml_loss_grad(const CondDensityModel& model, const SampleBatch& batch);

struct DensityTrainResult {
  CondDensityModel model;
  std::vector<double> loss_history;
};

DensityTrainResult train_density(const Matrix& data, const ProcessSpec& spec,
                                 const TrainConfig& cfg);

inline constexpr double kDefaultRateCap = 1e4;

// Rate evaluations above the cap are clamped and counted.
struct RateCap {
  double cap = kDefaultRateCap;
  std::atomic<std::size_t>* saturations = nullptr;

  double apply(double rate) const;
};

// lambda_r nu(v) / p(v | x, T_f - t_backward), capped.
double backward_refresh_rate(const VelocityDensity& model, const ProcessSpec& spec,
                             const Vector& x, const Vector& v, double t_backward,
                             const RateCap& cap = {});

// <R_x v, x>_+ p(R_x v | x, T_f - t_backward) / p(v | x, T_f - t_backward),
// capped; zero at x = 0.
double backward_reflection_rate_bps(const VelocityDensity& model,
                                    const ProcessSpec& spec, const Vector& x,
                                    const Vector& v, double t_backward,
                                    const RateCap& cap = {});

}  // namespace pdgm
