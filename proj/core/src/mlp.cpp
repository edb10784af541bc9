#include "pdgm/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pdgm {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;
using ConstVecMap = Eigen::Map<const Vector>;
using MutVecMap = Eigen::Map<Vector>;

Matrix silu(const Matrix& z) {
  return (z.array() / (1.0 + (-z.array()).exp())).matrix();
}

// silu'(z) = s (1 + z (1 - s)), s = sigmoid(z)
Matrix silu_grad(const Matrix& z) {
  const Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
  return (s * (1.0 + z.array() * (1.0 - s))).matrix();
}

}  // namespace

double silu(double z) { return z / (1.0 + std::exp(-z)); }

double softplus(double z, double beta) {
  const double bz = beta * z;
  return (std::max(bz, 0.0) + std::log1p(std::exp(-std::abs(bz)))) / beta;
}

void MlpArch::validate() const {
  if (in_dim < 1 || out_dim < 1 || hidden_width < 1 || n_blocks < 0 ||
      time_embed_dim < 2 || time_embed_dim % 2 != 0) {
    throw InvalidArgument("invalid MLP architecture");
  }
  if (!(time_horizon > 0.0)) throw InvalidArgument("time horizon must be positive");
  if (head == HeadKind::Softplus && !(softplus_beta > 0.0)) {
    throw InvalidArgument("softplus beta must be positive");
  }
}

struct Mlp::Layout {
  struct Dense {
    std::size_t w = 0, b = 0;  // offsets; b == w + rows * cols when biased
    Eigen::Index rows = 0, cols = 0;
  };
  struct Block {
    Dense first, embed, second;
  };
  Dense time1, time2, input, output;
  std::vector<Block> blocks;
  std::size_t total = 0;

  explicit Layout(const MlpArch& a) {
    auto dense = [this](Eigen::Index rows, Eigen::Index cols, bool bias) {
      Dense d;
      d.rows = rows;
      d.cols = cols;
      d.w = total;
      total += static_cast<std::size_t>(rows * cols);
      d.b = total;
      if (bias) total += static_cast<std::size_t>(rows);
      return d;
    };
    const Eigen::Index e = a.time_embed_dim, w = a.hidden_width;
    time1 = dense(e, e, true);
    time2 = dense(e, e, true);
    input = dense(w, a.in_dim, true);
    for (int k = 0; k < a.n_blocks; ++k) {
      Block blk;
      blk.first = dense(w, w, true);
      blk.embed = dense(w, e, false);
      blk.second = dense(w, w, true);
      blocks.push_back(blk);
    }
    output = dense(a.out_dim, w, true);
  }

  static ConstMap weight(const Vector& theta, const Dense& d) {
    return ConstMap(theta.data() + d.w, d.rows, d.cols);
  }
  static ConstVecMap bias(const Vector& theta, const Dense& d) {
    return ConstVecMap(theta.data() + d.b, d.rows);
  }
  static MutMap weight(Vector& theta, const Dense& d) {
    return MutMap(theta.data() + d.w, d.rows, d.cols);
  }
  static MutVecMap bias(Vector& theta, const Dense& d) {
    return MutVecMap(theta.data() + d.b, d.rows);
  }
};

std::size_t parameter_count(const MlpArch& arch) {
  arch.validate();
  return Mlp::zeros(arch).size();
}

Mlp::Mlp(MlpArch arch, Vector theta) : arch_(arch), theta_(std::move(theta)) {
  arch_.validate();
  const Layout layout(arch_);
  if (static_cast<std::size_t>(theta_.size()) != layout.total) {
    throw DimensionMismatch("parameter vector has " +
                            std::to_string(theta_.size()) +
                            " entries, architecture expects " +
                            std::to_string(layout.total));
  }
}

Mlp Mlp::zeros(const MlpArch& arch) {
  arch.validate();
  const Layout layout(arch);
  return Mlp(arch, Vector::Zero(static_cast<Eigen::Index>(layout.total)));
}

Mlp Mlp::initialize(const MlpArch& arch, Rng& rng) {
  Mlp net = zeros(arch);
  const Layout layout(arch);
  auto fill = [&](const Layout::Dense& d, bool bias) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d.cols));
    auto w = Layout::weight(net.theta_, d);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        w(i, j) = bound * (2.0 * rng.uniform() - 1.0);
      }
    }
    if (bias) {
      auto b = Layout::bias(net.theta_, d);
      for (Eigen::Index i = 0; i < b.size(); ++i) {
        b[i] = bound * (2.0 * rng.uniform() - 1.0);
      }
    }
  };
  fill(layout.time1, true);
  fill(layout.time2, true);
  fill(layout.input, true);
  for (const auto& blk : layout.blocks) {
    fill(blk.first, true);
    fill(blk.embed, false);
    // blk.second stays zero.
  }
  fill(layout.output, true);
  return net;
}

Matrix Mlp::forward(const Matrix& inputs, const Vector& t) const {
  MlpCache cache;
  return forward(inputs, t, cache);
}

Vector Mlp::forward_one(const Vector& input, double t) const {
  Vector tv(1);
  tv[0] = t;
  return forward(input, tv).col(0);
}

Matrix Mlp::forward(const Matrix& inputs, const Vector& t,
                    MlpCache& cache) const {
  if (inputs.rows() != arch_.in_dim) {
    throw DimensionMismatch("network expects input dimension " +
                            std::to_string(arch_.in_dim) + ", got " +
                            std::to_string(inputs.rows()));
  }
  if (t.size() != inputs.cols()) {
    throw DimensionMismatch("one time value per input column required");
  }
  const Layout L(arch_);
  const Eigen::Index batch = inputs.cols();
  const int half = arch_.time_embed_dim / 2;

  cache.input = inputs;
  cache.time_feat.resize(arch_.time_embed_dim, batch);
  for (int k = 0; k < half; ++k) {
    const double freq =
        half > 1 ? std::exp(std::log(1000.0) * k / (half - 1)) : 1.0;
    for (Eigen::Index j = 0; j < batch; ++j) {
      const double arg = freq * t[j] / arch_.time_horizon;
      cache.time_feat(k, j) = std::sin(arg);
      cache.time_feat(half + k, j) = std::cos(arg);
    }
  }

  cache.time_pre.noalias() = Layout::weight(theta_, L.time1) * cache.time_feat;
  cache.time_pre.colwise() += Layout::bias(theta_, L.time1);
  cache.time_act = silu(cache.time_pre);
  cache.time_embed.noalias() = Layout::weight(theta_, L.time2) * cache.time_act;
  cache.time_embed.colwise() += Layout::bias(theta_, L.time2);

  Matrix h;
  h.noalias() = Layout::weight(theta_, L.input) * inputs;
  h.colwise() += Layout::bias(theta_, L.input);

  cache.block_in.resize(L.blocks.size());
  cache.block_pre.resize(L.blocks.size());
  cache.block_act.resize(L.blocks.size());
  for (std::size_t k = 0; k < L.blocks.size(); ++k) {
    const auto& blk = L.blocks[k];
    cache.block_in[k] = h;
    Matrix& z = cache.block_pre[k];
    z.noalias() = Layout::weight(theta_, blk.first) * h;
    z.noalias() += Layout::weight(theta_, blk.embed) * cache.time_embed;
    z.colwise() += Layout::bias(theta_, blk.first);
    cache.block_act[k] = silu(z);
    h.noalias() += Layout::weight(theta_, blk.second) * cache.block_act[k];
    h.colwise() += Layout::bias(theta_, blk.second);
  }
  cache.last_hidden = std::move(h);

  cache.out_pre.noalias() =
      Layout::weight(theta_, L.output) * silu(cache.last_hidden);
  cache.out_pre.colwise() += Layout::bias(theta_, L.output);

  if (arch_.head == HeadKind::Linear) return cache.out_pre;
  Matrix out(cache.out_pre.rows(), batch);
  for (Eigen::Index j = 0; j < batch; ++j) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      out(i, j) = softplus(cache.out_pre(i, j), arch_.softplus_beta);
    }
  }
  return out;
}

void Mlp::backward(const MlpCache& cache, const Matrix& grad_output,
                   Vector& grad) const {
  const Layout L(arch_);
  if (grad.size() != theta_.size()) grad = Vector::Zero(theta_.size());

  Matrix d_out = grad_output;
  if (arch_.head == HeadKind::Softplus) {
    // softplus'(z) = sigmoid(beta z)
    d_out.array() *=
        1.0 / (1.0 + (-arch_.softplus_beta * cache.out_pre.array()).exp());
  }

  const Matrix act_last = silu(cache.last_hidden);
  Layout::weight(grad, L.output).noalias() += d_out * act_last.transpose();
  Layout::bias(grad, L.output) += d_out.rowwise().sum();
  Matrix d_h;
  d_h.noalias() = Layout::weight(theta_, L.output).transpose() * d_out;
  d_h.array() *= silu_grad(cache.last_hidden).array();

  Matrix d_embed = Matrix::Zero(arch_.time_embed_dim, cache.input.cols());
  for (std::size_t kk = L.blocks.size(); kk-- > 0;) {
    const auto& blk = L.blocks[kk];
    Layout::weight(grad, blk.second).noalias() +=
        d_h * cache.block_act[kk].transpose();
    Layout::bias(grad, blk.second) += d_h.rowwise().sum();
    Matrix d_z;
    d_z.noalias() = Layout::weight(theta_, blk.second).transpose() * d_h;
    d_z.array() *= silu_grad(cache.block_pre[kk]).array();
    Layout::weight(grad, blk.first).noalias() +=
        d_z * cache.block_in[kk].transpose();
    Layout::bias(grad, blk.first) += d_z.rowwise().sum();
    Layout::weight(grad, blk.embed).noalias() +=
        d_z * cache.time_embed.transpose();
    d_embed.noalias() += Layout::weight(theta_, blk.embed).transpose() * d_z;
    d_h.noalias() += Layout::weight(theta_, blk.first).transpose() * d_z;
  }

  Layout::weight(grad, L.input).noalias() += d_h * cache.input.transpose();
  Layout::bias(grad, L.input) += d_h.rowwise().sum();

  Layout::weight(grad, L.time2).noalias() +=
      d_embed * cache.time_act.transpose();
  Layout::bias(grad, L.time2) += d_embed.rowwise().sum();
  Matrix d_tpre;
  d_tpre.noalias() = Layout::weight(theta_, L.time2).transpose() * d_embed;
  d_tpre.array() *= silu_grad(cache.time_pre).array();
  Layout::weight(grad, L.time1).noalias() +=
      d_tpre * cache.time_feat.transpose();
  Layout::bias(grad, L.time1) += d_tpre.rowwise().sum();
}

}  // namespace pdgm
