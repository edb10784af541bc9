#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pdgm/mlp.hpp"
#include "pdgm/process.hpp"
#include "pdgm/training.hpp"
#include "pdgm/types.hpp"

namespace pdgm {

// Anything that supplies the ZZP backward ratios
// s_i(x, v, t) ~ p_t(R_i v | x) / p_t(v | x), evaluated at forward time t.
class RatioEstimator {
 public:
  virtual ~RatioEstimator() = default;
  virtual int dim() const = 0;
  // Columns of x and v are states; returns d x B.
  virtual Matrix ratios(const Matrix& x, const Matrix& v, const Vector& t) const = 0;
};

// s_i == value everywhere. value = 1 is the exact ratio when the data law is
// already the stationary one.
class ConstantRatio : public RatioEstimator {
 public:
  ConstantRatio(int dim, double value) : dim_(dim), value_(value) {}
  int dim() const override { return dim_; }
  Matrix ratios(const Matrix& x, const Matrix&, const Vector&) const override {
    return Matrix::Constant(dim_, x.cols(), value_);
  }

 private:
  int dim_;
  double value_;
};

// G(r) = 1 / (1 + r).
inline double g_transform(double r) { return 1.0 / (1.0 + r); }

// Ratio network: input is (x, v) stacked, output has d softplus entries.
class RatioModel : public RatioEstimator {
 public:
  RatioModel(ProcessSpec spec, Mlp net, TimeDensity omega = TimeDensity::Uniform);

  static MlpArch architecture(const ProcessSpec& spec, int hidden_width,
                              int n_blocks, int time_embed_dim);
  static RatioModel create(const ProcessSpec& spec, const TrainConfig& cfg);

  int dim() const override { return spec_.dim; }
  Matrix ratios(const Matrix& x, const Matrix& v, const Vector& t) const override;

  const ProcessSpec& spec() const { return spec_; }
  TimeDensity omega() const { return omega_; }
  const Mlp& net() const { return net_; }
  Mlp& net() { return net_; }

 private:
  ProcessSpec spec_;
  Mlp net_;
  TimeDensity omega_;
};

// Empirical implicit ratio-matching objective
//   sum_n w_n sum_{i in I} [G^2(s_i(x, v)) + G^2(s_i(x, R_i v)) - 2 G(s_i(x, v))]
// scaled by d / |I|. An empty `coords` means I = {0, ..., d-1}.
double implicit_rm_loss(const RatioEstimator& model, const SampleBatch& batch,
                        std::span<const int> coords = {});
LossGrad implicit_rm_loss_grad(const RatioModel& model, const SampleBatch& batch,
                               std::span<const int> coords = {});

// Reference ratios r(x, v, t) as a d x B matrix; used by tests and diagnostics.
using RatioFunction =
    std::function<Matrix(const Matrix& x, const Matrix& v, const Vector& t)>;

// sum_n w_n sum_i [(G(s_i(x,v)) - G(r_i(x,v)))^2 + (G(s_i(x,R_i v)) - G(r_i(x,R_i v)))^2]
double explicit_rm_loss(const RatioEstimator& model, const SampleBatch& batch,
                        const RatioFunction& truth);

class DomainError : public Error {
 public:
  using Error::Error;
};

enum class BregmanKind { KL, Square, Logistic };

std::string to_string(BregmanKind kind);

// f, f', f'' of the convex generator:
//   KL: r log r - r,   Square: (r - 1)^2,   Logistic: r log r - (1 + r) log(1 + r)
double bregman_f(BregmanKind kind, double r);
double bregman_df(BregmanKind kind, double r);
double bregman_d2f(BregmanKind kind, double r);
// B_f(r, s) = f(r) - f(s) - f'(s) (r - s)
double bregman_divergence(BregmanKind kind, double r, double s);

// Implicit Bregman objective for coordinate i, i.e. E_q[B_f(r_i, s_i)] up to a
// constant, with q the law of (X_t, V_t) and r_i = p / q where p is the image
// of q under v -> R_i v:
//   sum_n w_n [f'(s(x, v)) s(x, v) - f(s(x, v)) - f'(s(x, R_i v))].
// Minimized at s_i = r_i, the same target as the implicit G-loss.
// Throws DomainError if a generator needing s > 0 sees s <= 0.
double bregman_rm_loss(const RatioEstimator& model, const SampleBatch& batch,
                       BregmanKind kind, int coordinate);
LossGrad bregman_rm_loss_grad(const RatioModel& model, const SampleBatch& batch,
                              BregmanKind kind, int coordinate);

struct RatioTrainResult {
  RatioModel model;
  std::vector<double> loss_history;
};

// Minimizes the implicit loss with Adam on fresh forward samples each step.
RatioTrainResult train_ratio(const Matrix& data, const ProcessSpec& spec,
                             const TrainConfig& cfg);

// s_i(x, v, T_f - t_backward) * lambda_i(x, R_i v) at backward time t_backward.
double backward_zzp_rate(const RatioEstimator& model, const ProcessSpec& spec,
                         const Vector& x, const Vector& v, double t_backward,
                         std::size_t i);

}  // namespace pdgm
