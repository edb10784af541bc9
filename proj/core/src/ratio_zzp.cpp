#include "pdgm/ratio_zzp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "pdgm/dynamics.hpp"
#include "pdgm/optim.hpp"

namespace pdgm {

namespace {

std::vector<int> resolve_coords(std::span<const int> coords, int d) {
  std::vector<int> out;
  if (coords.empty()) {
    out.resize(static_cast<std::size_t>(d));
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  for (int i : coords) {
    if (i < 0 || i >= d) throw InvalidArgument("coordinate index out of range");
    out.push_back(i);
  }
  return out;
}

Matrix flipped(const Matrix& v, int i) {
  Matrix out = v;
  out.row(i) = -out.row(i);
  return out;
}

void check_batch(const SampleBatch& batch, int d) {
  if (batch.size() == 0) throw InvalidArgument("empty batch");
  if (batch.x.rows() != d || batch.v.rows() != d ||
      batch.v.cols() != batch.x.cols() || batch.t.size() != batch.x.cols()) {
    throw DimensionMismatch("batch shape does not match the model dimension");
  }
}

// Inputs for one network call covering the base states followed by one copy
// per coordinate in `coords` with that velocity entry flipped.
struct Stacked {
  Matrix input;
  Vector t;
};

Stacked stack_flips(const SampleBatch& batch, const std::vector<int>& coords) {
  const Eigen::Index d = batch.x.rows(), b = batch.size();
  const auto blocks = static_cast<Eigen::Index>(coords.size()) + 1;
  Stacked s{Matrix(2 * d, b * blocks), Vector(b * blocks)};
  for (Eigen::Index k = 0; k < blocks; ++k) {
    auto cols = Eigen::seqN(k * b, b);
    s.input(Eigen::seqN(0, d), cols) = batch.x;
    s.input(Eigen::seqN(d, d), cols) =
        k == 0 ? batch.v : flipped(batch.v, coords[static_cast<std::size_t>(k - 1)]);
    s.t.segment(k * b, b) = batch.t;
  }
  return s;
}

}  // namespace

RatioModel::RatioModel(ProcessSpec spec, Mlp net, TimeDensity omega)
    : spec_(std::move(spec)), net_(std::move(net)), omega_(omega) {
  const auto& a = net_.arch();
  if (a.in_dim != 2 * spec_.dim || a.out_dim != spec_.dim ||
      a.head != HeadKind::Softplus) {
    throw DimensionMismatch(
        "ratio network must map 2d inputs to d softplus outputs");
  }
}

MlpArch RatioModel::architecture(const ProcessSpec& spec, int hidden_width,
                                 int n_blocks, int time_embed_dim) {
  MlpArch a;
  a.in_dim = 2 * spec.dim;
  a.out_dim = spec.dim;
  a.hidden_width = hidden_width;
  a.n_blocks = n_blocks;
  a.time_embed_dim = time_embed_dim;
  a.head = HeadKind::Softplus;
  a.softplus_beta = 1.0;
  a.time_horizon = spec.horizon;
  return a;
}

RatioModel RatioModel::create(const ProcessSpec& spec, const TrainConfig& cfg) {
  Rng rng = Rng::stream(cfg.seed, ~0ULL, 0);
  return RatioModel(
      spec,
      Mlp::initialize(
          architecture(spec, cfg.hidden_width, cfg.n_blocks, cfg.time_embed_dim),
          rng),
      cfg.omega);
}

Matrix RatioModel::ratios(const Matrix& x, const Matrix& v,
                          const Vector& t) const {
  Matrix input(2 * spec_.dim, x.cols());
  input.topRows(spec_.dim) = x;
  input.bottomRows(spec_.dim) = v;
  return net_.forward(input, t);
}

double implicit_rm_loss(const RatioEstimator& model, const SampleBatch& batch,
                        std::span<const int> coords) {
  const int d = model.dim();
  check_batch(batch, d);
  const auto idx = resolve_coords(coords, d);
  const double scale = static_cast<double>(d) / static_cast<double>(idx.size());
  const Matrix base = model.ratios(batch.x, batch.v, batch.t);
  double loss = 0.0;
  for (int i : idx) {
    const Matrix flip = model.ratios(batch.x, flipped(batch.v, i), batch.t);
    for (Eigen::Index n = 0; n < batch.size(); ++n) {
      const double g = g_transform(base(i, n));
      const double gf = g_transform(flip(i, n));
      loss += batch.weight(n) * (g * g + gf * gf - 2.0 * g);
    }
  }
  return scale * loss;
}

LossGrad implicit_rm_loss_grad(const RatioModel& model, const SampleBatch& batch,
                               std::span<const int> coords) {
  const int d = model.dim();
  check_batch(batch, d);
  const auto idx = resolve_coords(coords, d);
  const double scale = static_cast<double>(d) / static_cast<double>(idx.size());
  const Stacked in = stack_flips(batch, idx);

  MlpCache cache;
  const Matrix s = model.net().forward(in.input, in.t, cache);
  Matrix d_out = Matrix::Zero(s.rows(), s.cols());
  const Eigen::Index b = batch.size();
  double loss = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const int i = idx[k];
    const Eigen::Index off = (static_cast<Eigen::Index>(k) + 1) * b;
    for (Eigen::Index n = 0; n < b; ++n) {
      const double w = scale * batch.weight(n);
      const double g = g_transform(s(i, n));
      const double gf = g_transform(s(i, off + n));
      loss += w * (g * g + gf * gf - 2.0 * g);
      // dG/ds = -G^2
      d_out(i, n) += w * (2.0 * g * g - 2.0 * g * g * g);
      d_out(i, off + n) += w * (-2.0 * gf * gf * gf);
    }
  }
  LossGrad out{loss, Vector::Zero(static_cast<Eigen::Index>(model.net().size()))};
  model.net().backward(cache, d_out, out.grad);
  return out;
}

double explicit_rm_loss(const RatioEstimator& model, const SampleBatch& batch,
                        const RatioFunction& truth) {
  const int d = model.dim();
  check_batch(batch, d);
  const Matrix s = model.ratios(batch.x, batch.v, batch.t);
  const Matrix r = truth(batch.x, batch.v, batch.t);
  double loss = 0.0;
  for (int i = 0; i < d; ++i) {
    const Matrix vf = flipped(batch.v, i);
    const Matrix sf = model.ratios(batch.x, vf, batch.t);
    const Matrix rf = truth(batch.x, vf, batch.t);
    for (Eigen::Index n = 0; n < batch.size(); ++n) {
      const double a = g_transform(s(i, n)) - g_transform(r(i, n));
      const double c = g_transform(sf(i, n)) - g_transform(rf(i, n));
      loss += batch.weight(n) * (a * a + c * c);
    }
  }
  return loss;
}

std::string to_string(BregmanKind kind) {
  switch (kind) {
    case BregmanKind::KL: return "kl";
    case BregmanKind::Square: return "square";
    case BregmanKind::Logistic: return "logistic";
  }
  return "?";
}

namespace {

void require_positive(BregmanKind kind, double r) {
  if (kind != BregmanKind::Square && !(r > 0.0)) {
    throw DomainError(to_string(kind) + " Bregman generator needs r > 0, got " +
                      std::to_string(r));
  }
}

}  // namespace

double bregman_f(BregmanKind kind, double r) {
  require_positive(kind, r);
  switch (kind) {
    case BregmanKind::KL: return r * std::log(r) - r;
    case BregmanKind::Square: return (r - 1.0) * (r - 1.0);
    case BregmanKind::Logistic: return r * std::log(r) - (1.0 + r) * std::log1p(r);
  }
  return 0.0;
}

double bregman_df(BregmanKind kind, double r) {
  require_positive(kind, r);
  switch (kind) {
    case BregmanKind::KL: return std::log(r);
    case BregmanKind::Square: return 2.0 * (r - 1.0);
    case BregmanKind::Logistic: return std::log(r) - std::log1p(r);
  }
  return 0.0;
}

double bregman_d2f(BregmanKind kind, double r) {
  require_positive(kind, r);
  switch (kind) {
    case BregmanKind::KL: return 1.0 / r;
    case BregmanKind::Square: return 2.0;
    case BregmanKind::Logistic: return 1.0 / r - 1.0 / (1.0 + r);
  }
  return 0.0;
}

double bregman_divergence(BregmanKind kind, double r, double s) {
  return bregman_f(kind, r) - bregman_f(kind, s) - bregman_df(kind, s) * (r - s);
}

double bregman_rm_loss(const RatioEstimator& model, const SampleBatch& batch,
                       BregmanKind kind, int coordinate) {
  const int d = model.dim();
  check_batch(batch, d);
  if (coordinate < 0 || coordinate >= d) {
    throw InvalidArgument("coordinate index out of range");
  }
  const Matrix base = model.ratios(batch.x, batch.v, batch.t);
  const Matrix flip = model.ratios(batch.x, flipped(batch.v, coordinate), batch.t);
  double loss = 0.0;
  for (Eigen::Index n = 0; n < batch.size(); ++n) {
    const double sf = flip(coordinate, n);
    const double sb = base(coordinate, n);
    loss += batch.weight(n) *
            (bregman_df(kind, sb) * sb - bregman_f(kind, sb) - bregman_df(kind, sf));
  }
  return loss;
}

LossGrad bregman_rm_loss_grad(const RatioModel& model, const SampleBatch& batch,
                              BregmanKind kind, int coordinate) {
  const int d = model.dim();
  check_batch(batch, d);
  if (coordinate < 0 || coordinate >= d) {
    throw InvalidArgument("coordinate index out of range");
  }
  const Stacked in = stack_flips(batch, {coordinate});
  MlpCache cache;
  const Matrix s = model.net().forward(in.input, in.t, cache);
  Matrix d_out = Matrix::Zero(s.rows(), s.cols());
  const Eigen::Index b = batch.size();
  double loss = 0.0;
  for (Eigen::Index n = 0; n < b; ++n) {
    const double w = batch.weight(n);
    const double sb = s(coordinate, n);
    const double sf = s(coordinate, b + n);
    loss += w * (bregman_df(kind, sb) * sb - bregman_f(kind, sb) -
                 bregman_df(kind, sf));
    // d/ds [f'(s) s - f(s)] = f''(s) s
    d_out(coordinate, n) = w * bregman_d2f(kind, sb) * sb;
    d_out(coordinate, b + n) = -w * bregman_d2f(kind, sf);
  }
  LossGrad out{loss, Vector::Zero(static_cast<Eigen::Index>(model.net().size()))};
  model.net().backward(cache, d_out, out.grad);
  return out;
}

RatioTrainResult train_ratio(const Matrix& data, const ProcessSpec& spec,
                             const TrainConfig& cfg) {
  spec.validate();
  if (spec.kind != ProcessKind::ZigZag) {
    throw InvalidArgument("ratio model training requires the zig-zag process");
  }
  RatioTrainResult result{RatioModel::create(spec, cfg), {}};
  if (cfg.steps == 0) return result;

  std::optional<TrajectoryPool> pool;
  if (cfg.trajectory_cache > 0) {
    pool.emplace(data, spec, cfg.trajectory_cache, cfg.seed, cfg.threads);
  }

  Vector& theta = result.model.net().theta();
  AdamState adam(theta.size());
  const bool subsample = cfg.subsample > 0 && cfg.subsample < spec.dim;
  std::vector<int> coords(static_cast<std::size_t>(spec.dim));
  result.loss_history.reserve(cfg.steps);

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const SampleBatch batch = pool ? draw_cached_batch(*pool, cfg, step)
                                   : draw_forward_batch(data, spec, cfg, step);
    std::span<const int> active;
    if (subsample) {
      std::iota(coords.begin(), coords.end(), 0);
      Rng rng = Rng::stream(cfg.seed, step, 0);
      std::shuffle(coords.begin(), coords.end(), rng.engine());
      active = std::span<const int>(coords.data(),
                                    static_cast<std::size_t>(cfg.subsample));
    }
    const LossGrad lg = implicit_rm_loss_grad(result.model, batch, active);
    check_finite(lg, step);
    adam_step(adam, theta, lg.grad, cfg.lr);
    result.loss_history.push_back(lg.loss);
    if (cfg.on_step) cfg.on_step(step, lg.loss);
  }
  return result;
}

double backward_zzp_rate(const RatioEstimator& model, const ProcessSpec& spec,
                         const Vector& x, const Vector& v, double t_backward,
                         std::size_t i) {
  const double t = spec.horizon - t_backward;
  Vector tv(1);
  tv[0] = t;
  const double s = model.ratios(x, v, tv)(static_cast<Eigen::Index>(i), 0);
  return s * zzp_rate(x, zzp_flip(v, i), i, spec, t);
}

}  // namespace pdgm
