#include "pdgm/density_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "pdgm/dynamics.hpp"
#include "pdgm/optim.hpp"

namespace pdgm {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double log_sum_exp(const Vector& a) {
  const double m = a.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((a.array() - m).exp().sum());
}

void check_shapes(const Matrix& v, const Matrix& x, const Vector& t, int d) {
  if (v.rows() != d || x.rows() != d || v.cols() != x.cols() ||
      t.size() != x.cols()) {
    throw DimensionMismatch("velocity/position/time shapes do not match");
  }
}

}  // namespace

double standard_normal_log_density(const Vector& v) {
  return -0.5 * v.squaredNorm() - static_cast<double>(v.size()) * kHalfLog2Pi;
}

Vector StandardNormalVelocity::log_density(const Matrix& v, const Matrix& x,
                                           const Vector& t) const {
  check_shapes(v, x, t, dim_);
  Vector out(v.cols());
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    out[j] = standard_normal_log_density(v.col(j));
  }
  return out;
}

Matrix StandardNormalVelocity::sample(const Matrix& x, const Vector&,
                                      std::span<Rng> rngs) const {
  Matrix out(dim_, x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (int i = 0; i < dim_; ++i) out(i, j) = rngs[static_cast<std::size_t>(j)].normal();
  }
  return out;
}

CondDensityModel::CondDensityModel(ProcessSpec spec, Mlp net, int components,
                                   TimeDensity omega)
    : spec_(std::move(spec)), net_(std::move(net)), components_(components),
      omega_(omega) {
  const auto& a = net_.arch();
  if (components_ < 1 || a.in_dim != spec_.dim ||
      a.out_dim != components_ * (1 + 2 * spec_.dim) || a.head != HeadKind::Linear) {
    throw DimensionMismatch(
        "density network must map d inputs to K (1 + 2d) linear outputs");
  }
}

MlpArch CondDensityModel::architecture(const ProcessSpec& spec, int components,
                                       int hidden_width, int n_blocks,
                                       int time_embed_dim) {
  MlpArch a;
  a.in_dim = spec.dim;
  a.out_dim = components * (1 + 2 * spec.dim);
  a.hidden_width = hidden_width;
  a.n_blocks = n_blocks;
  a.time_embed_dim = time_embed_dim;
  a.head = HeadKind::Linear;
  a.time_horizon = spec.horizon;
  return a;
}

CondDensityModel CondDensityModel::create(const ProcessSpec& spec,
                                          const TrainConfig& cfg) {
  Rng rng = Rng::stream(cfg.seed, ~0ULL, 0);
  return CondDensityModel(
      spec,
      Mlp::initialize(architecture(spec, cfg.components, cfg.hidden_width,
                                   cfg.n_blocks, cfg.time_embed_dim),
                      rng),
      cfg.components, cfg.omega);
}

CondDensityModel::Mixture CondDensityModel::mixture(const Vector& output) const {
  const int k = components_, d = spec_.dim;
  Mixture m;
  const Vector logits = output.head(k);
  m.log_weights = logits.array() - log_sum_exp(logits);
  m.means = Eigen::Map<const Matrix>(output.data() + k, d, k);
  m.log_stds = Eigen::Map<const Matrix>(output.data() + k + k * d, d, k)
                   .cwiseMax(kLogStdMin)
                   .cwiseMin(kLogStdMax);
  return m;
}

namespace {

// Per-component joint log terms log w_k + log N(v; m_k, diag sigma_k^2).
Vector component_terms(const CondDensityModel::Mixture& m, const Vector& v) {
  const auto k = m.log_weights.size();
  Vector terms(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const Eigen::ArrayXd z =
        (v - m.means.col(c)).array() * (-m.log_stds.col(c).array()).exp();
    terms[c] = m.log_weights[c] - 0.5 * z.square().sum() -
               m.log_stds.col(c).sum() -
               static_cast<double>(v.size()) * kHalfLog2Pi;
  }
  return terms;
}

}  // namespace

Vector CondDensityModel::log_density(const Matrix& v, const Matrix& x,
                                     const Vector& t) const {
  check_shapes(v, x, t, spec_.dim);
  const Matrix out = net_.forward(x, t);
  Vector result(v.cols());
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    result[j] = log_sum_exp(component_terms(mixture(out.col(j)), v.col(j)));
  }
  return result;
}

Matrix CondDensityModel::sample(const Matrix& x, const Vector& t,
                                std::span<Rng> rngs) const {
  const Matrix out = net_.forward(x, t);
  Matrix v(spec_.dim, x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Rng& rng = rngs[static_cast<std::size_t>(j)];
    const Mixture m = mixture(out.col(j));
    const double u = rng.uniform();
    Eigen::Index c = 0;
    double acc = std::exp(m.log_weights[0]);
    while (c + 1 < m.log_weights.size() && u >= acc) {
      ++c;
      acc += std::exp(m.log_weights[c]);
    }
    for (int i = 0; i < spec_.dim; ++i) {
      v(i, j) = m.means(i, c) + std::exp(m.log_stds(i, c)) * rng.normal();
    }
  }
  return v;
}

double ml_loss(const VelocityDensity& model, const SampleBatch& batch) {
  if (batch.size() == 0) throw InvalidArgument("empty batch");
  const Vector lp = model.log_density(batch.v, batch.x, batch.t);
  double loss = 0.0;
  for (Eigen::Index n = 0; n < batch.size(); ++n) loss -= batch.weight(n) * lp[n];
  if (!std::isfinite(loss)) throw NonFiniteLoss("maximum-likelihood loss is not finite");
  return loss;
}

LossGrad ml_loss_grad(const CondDensityModel& model, const SampleBatch& batch) {
  if (batch.size() == 0) throw InvalidArgument("empty batch");
  const int d = model.dim(), k = model.components();
  check_shapes(batch.v, batch.x, batch.t, d);
  MlpCache cache;
  const Matrix out = model.net().forward(batch.x, batch.t, cache);
  Matrix d_out = Matrix::Zero(out.rows(), out.cols());
  double loss = 0.0;

  for (Eigen::Index n = 0; n < batch.size(); ++n) {
    const double w = batch.weight(n);
    const Vector col = out.col(n);
    const auto m = model.mixture(col);
    const Vector v = batch.v.col(n);
    const Vector terms = component_terms(m, v);
    const double lp = log_sum_exp(terms);
    loss -= w * lp;
    const Vector post = (terms.array() - lp).exp();
    const Vector weights = m.log_weights.array().exp();
    for (int c = 0; c < k; ++c) {
      d_out(c, n) = -w * (post[c] - weights[c]);
      for (int i = 0; i < d; ++i) {
        const double inv_var = std::exp(-2.0 * m.log_stds(i, c));
        const double diff = v[i] - m.means(i, c);
        d_out(k + c * d + i, n) = -w * post[c] * diff * inv_var;
        const double raw = col[k + k * d + c * d + i];
        if (raw > kLogStdMin && raw < kLogStdMax) {
          d_out(k + k * d + c * d + i, n) = -w * post[c] * (diff * diff * inv_var - 1.0);
        }
      }
    }
  }
  LossGrad lg{loss, Vector::Zero(static_cast<Eigen::Index>(model.net().size()))};
  model.net().backward(cache, d_out, lg.grad);
  return lg;
}

DensityTrainResult train_density(const Matrix& data, const ProcessSpec& spec,
                                 const TrainConfig& cfg) {
  spec.validate();
  if (spec.kind == ProcessKind::ZigZag) {
    throw InvalidArgument("density model training requires BPS or RHMC");
  }
  DensityTrainResult result{CondDensityModel::create(spec, cfg), {}};
  if (cfg.steps == 0) return result;

  std::optional<TrajectoryPool> pool;
  if (cfg.trajectory_cache > 0) {
    pool.emplace(data, spec, cfg.trajectory_cache, cfg.seed, cfg.threads);
  }
  Vector& theta = result.model.net().theta();
  AdamState adam(theta.size());
  result.loss_history.reserve(cfg.steps);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const SampleBatch batch = pool ? draw_cached_batch(*pool, cfg, step)
                                   : draw_forward_batch(data, spec, cfg, step);
    const LossGrad lg = ml_loss_grad(result.model, batch);
    check_finite(lg, step);
    adam_step(adam, theta, lg.grad, cfg.lr);
    result.loss_history.push_back(lg.loss);
    if (cfg.on_step) cfg.on_step(step, lg.loss);
  }
  return result;
}

double RateCap::apply(double rate) const {
  if (rate > cap || std::isnan(rate)) {
    if (saturations) saturations->fetch_add(1, std::memory_order_relaxed);
    return cap;
  }
  return rate;
}

namespace {

double log_density_at(const VelocityDensity& model, const Vector& v,
                      const Vector& x, double t) {
  Vector tv(1);
  tv[0] = t;
  return model.log_density(v, x, tv)[0];
}

}  // namespace

double backward_refresh_rate(const VelocityDensity& model, const ProcessSpec& spec,
                             const Vector& x, const Vector& v, double t_backward,
                             const RateCap& cap) {
  if (spec.refresh_rate == 0.0) return 0.0;
  const double t = spec.horizon - t_backward;
  const double log_ratio =
      standard_normal_log_density(v) - log_density_at(model, v, x, t);
  return cap.apply(spec.schedule.at(t) * spec.refresh_rate * std::exp(log_ratio));
}

double backward_reflection_rate_bps(const VelocityDensity& model,
                                    const ProcessSpec& spec, const Vector& x,
                                    const Vector& v, double t_backward,
                                    const RateCap& cap) {
  if (spec.potential == Potential::Zero || x.norm() < kDegenerateGradientNorm) {
    return 0.0;
  }
  const Vector reflected = bps_reflect(x, v);
  const double forward = bps_reflection_rate(x, reflected);
  if (forward == 0.0) return 0.0;
  const double t = spec.horizon - t_backward;
  const double log_ratio = log_density_at(model, reflected, x, t) -
                           log_density_at(model, v, x, t);
  return cap.apply(spec.schedule.at(t) * forward * std::exp(log_ratio));
}

}  // namespace pdgm
