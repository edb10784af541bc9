#include "pdgm/backward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdgm/dynamics.hpp"
#include "pdgm/parallel.hpp"

namespace pdgm {

std::vector<double> TimeGrid::times() const {
  std::vector<double> out(deltas.size() + 1, 0.0);
  for (std::size_t n = 0; n < deltas.size(); ++n) out[n + 1] = out[n] + deltas[n];
  if (!deltas.empty()) out.back() = horizon;
  return out;
}

TimeGrid time_grid_quadratic(double horizon, std::size_t n) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw InvalidArgument("time grid horizon must be positive");
  }
  TimeGrid grid{horizon, {}};
  if (n == 0) return grid;
  grid.deltas.resize(n);
  const double nn = static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double a = static_cast<double>(k) / nn, b = static_cast<double>(k - 1) / nn;
    grid.deltas[k - 1] = horizon * (a * a - b * b);
    sum += grid.deltas[k - 1];
  }
  grid.deltas[n - 1] = horizon - sum;
  return grid;
}

std::string to_string(InitMode mode) {
  return mode == InitMode::BaseProduct ? "base" : "learned";
}

InitMode parse_init_mode(std::string_view name) {
  if (name == "base") return InitMode::BaseProduct;
  if (name == "learned") return InitMode::LearnedVelocity;
  throw InvalidArgument("unknown init mode '" + std::string(name) +
                        "' (expected base or learned)");
}

namespace {

double capped(double rate, double cap, BackwardStats& stats) {
  if (rate > cap || std::isnan(rate)) {
    ++stats.saturations;
    return cap;
  }
  return rate;
}

// Probability that an exponential clock with this rate rings within delta.
double ring_probability(double rate, double delta) {
  return -std::expm1(-delta * rate);
}

void check_chains(const ProcessSpec& spec, const Chains& c) {
  if (c.x.rows() != spec.dim || c.v.rows() != spec.dim || c.x.cols() != c.v.cols() ||
      static_cast<std::size_t>(c.x.cols()) != c.rngs.size()) {
    throw DimensionMismatch("chain block shapes do not match the process");
  }
}

// Backward drift by an amount s of internal time for every chain.
void backward_drift(const ProcessSpec& spec, Chains& c, double s) {
  if (spec.hamiltonian_flow()) {
    const double cs = std::cos(s), sn = std::sin(s);
    const Matrix x = c.x;
    c.x = cs * x - sn * c.v;
    c.v = sn * x + cs * c.v;
  } else {
    c.x -= s * c.v;
  }
}

// Resamples the velocity of the flagged chains from the model at forward
// time t.
void resample(const VelocityDensity& model, Chains& c, const std::vector<Eigen::Index>& idx,
              double t, BackwardStats& stats) {
  if (idx.empty()) return;
  const auto m = static_cast<Eigen::Index>(idx.size());
  Matrix x(c.x.rows(), m);
  std::vector<Rng> rngs;
  rngs.reserve(idx.size());
  for (Eigen::Index k = 0; k < m; ++k) {
    x.col(k) = c.x.col(idx[k]);
    rngs.push_back(c.rngs[idx[k]]);
  }
  const Matrix v = model.sample(x, Vector::Constant(m, t), rngs);
  stats.model_evals += idx.size();
  for (Eigen::Index k = 0; k < m; ++k) {
    c.v.col(idx[k]) = v.col(k);
    c.rngs[idx[k]] = rngs[k];
  }
}

// Half refresh step at forward time t: refresh with probability
// 1 - exp(-lambda_r beta nu(v) / p(v | x, t) * h).
void refresh_half(const VelocityDensity& model, const ProcessSpec& spec, Chains& c,
                  double t, double h, const StepOptions& opts, BackwardStats& stats) {
  if (spec.refresh_rate == 0.0) return;
  const Eigen::Index b = c.size();
  const Vector lp = model.log_density(c.v, c.x, Vector::Constant(b, t));
  stats.model_evals += static_cast<std::size_t>(b);
  const double scale = spec.refresh_rate * spec.schedule.at(t);
  std::vector<Eigen::Index> idx;
  for (Eigen::Index j = 0; j < b; ++j) {
    const double s = std::exp(standard_normal_log_density(c.v.col(j)) - lp[j]);
    const double p = ring_probability(capped(scale * s, opts.rate_cap, stats), h);
    if (c.rngs[j].uniform() < p) idx.push_back(j);
  }
  resample(model, c, idx, t, stats);
}

Chains single(const State& state, Rng& rng) {
  Chains c{state.x, state.v, {rng}};
  return c;
}

State unpack(Chains& c, Rng& rng) {
  rng = c.rngs[0];
  return {c.x.col(0), c.v.col(0)};
}

}  // namespace

void djd_zzp_step(const RatioEstimator& model, const ProcessSpec& spec, Chains& c,
                  double t_n, double delta, const StepOptions& opts,
                  BackwardStats& stats) {
  check_chains(spec, c);
  const Eigen::Index b = c.size();
  const int d = spec.dim;
  const double t_mid = spec.horizon - t_n - 0.5 * delta;
  const double beta = spec.schedule.at(t_mid);
  const double h = 0.5 * delta * beta;

  c.x -= h * c.v;
  Matrix s = model.ratios(c.x, c.v, Vector::Constant(b, t_mid));
  stats.model_evals += static_cast<std::size_t>(b);
  Vector tv(1);
  tv[0] = t_mid;
  for (Eigen::Index j = 0; j < b; ++j) {
    Rng& rng = c.rngs[j];
    for (int i = 0; i < d; ++i) {
      // lambda_i(x, R_i v) = (-v_i x_i)_+ + lambda_r for the Gaussian potential
      const double grad = spec.potential == Potential::Zero ? 0.0 : c.x(i, j);
      const double fwd = std::max(0.0, -c.v(i, j) * grad) + spec.refresh_rate;
      const double rate = capped(s(i, j) * fwd * beta, opts.rate_cap, stats);
      if (rng.uniform() < ring_probability(rate, delta)) {
        c.v(i, j) = -c.v(i, j);
        if (opts.reevaluate_after_flip && i + 1 < d) {
          s.col(j) = model.ratios(c.x.col(j), c.v.col(j), tv);
          ++stats.model_evals;
        }
      }
    }
  }
  c.x -= h * c.v;
}

void djd_rhmc_step(const VelocityDensity& model, const ProcessSpec& spec, Chains& c,
                   double t_n, double delta, const StepOptions& opts,
                   BackwardStats& stats) {
  check_chains(spec, c);
  const Eigen::Index b = c.size();
  const double t_mid = spec.horizon - t_n - 0.5 * delta;
  const double beta = spec.schedule.at(t_mid);

  backward_drift(spec, c, 0.5 * delta * beta);
  if (spec.refresh_rate > 0.0) {
    const Vector lp = model.log_density(c.v, c.x, Vector::Constant(b, t_mid));
    stats.model_evals += static_cast<std::size_t>(b);
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < b; ++j) {
      const double s = std::exp(standard_normal_log_density(c.v.col(j)) - lp[j]);
      const double rate = capped(s * spec.refresh_rate * beta, opts.rate_cap, stats);
      const double tau = rate > 0.0 ? c.rngs[j].exponential() / rate
                                    : std::numeric_limits<double>::infinity();
      if (tau <= delta) idx.push_back(j);
    }
    resample(model, c, idx, t_mid, stats);
  }
  backward_drift(spec, c, 0.5 * delta * beta);
}

void rdbdr_bps_step(const VelocityDensity& model, const ProcessSpec& spec, Chains& c,
                    double t_n, double delta, const StepOptions& opts,
                    BackwardStats& stats) {
  check_chains(spec, c);
  const Eigen::Index b = c.size();
  const double t_start = spec.horizon - t_n;
  const double t_mid = t_start - 0.5 * delta;
  const double t_end = std::max(0.0, t_start - delta);
  const double beta = spec.schedule.at(t_mid);

  refresh_half(model, spec, c, t_start, 0.5 * delta, opts, stats);
  c.x -= 0.5 * delta * beta * c.v;

  if (spec.potential != Potential::Zero) {
    Matrix reflected(c.v.rows(), b);
    std::vector<bool> ok(static_cast<std::size_t>(b), true);
    for (Eigen::Index j = 0; j < b; ++j) {
      if (c.x.col(j).norm() < kDegenerateGradientNorm) {
        ok[j] = false;
        reflected.col(j) = c.v.col(j);
      } else {
        reflected.col(j) = bps_reflect(c.x.col(j), c.v.col(j));
      }
    }
    const Vector tv = Vector::Constant(b, t_mid);
    const Vector lp = model.log_density(c.v, c.x, tv);
    const Vector lp_r = model.log_density(reflected, c.x, tv);
    stats.model_evals += 2 * static_cast<std::size_t>(b);
    for (Eigen::Index j = 0; j < b; ++j) {
      if (!ok[j]) continue;
      const double fwd = std::max(0.0, reflected.col(j).dot(c.x.col(j)));
      const double rate =
          fwd > 0.0 ? capped(fwd * std::exp(lp_r[j] - lp[j]) * beta, opts.rate_cap, stats)
                    : 0.0;
      if (c.rngs[j].uniform() < ring_probability(rate, delta)) {
        c.v.col(j) = reflected.col(j);
      }
    }
  }

  c.x -= 0.5 * delta * beta * c.v;
  refresh_half(model, spec, c, t_end, 0.5 * delta, opts, stats);
}

State djd_zzp_step(const RatioEstimator& model, const ProcessSpec& spec,
                   const State& state, double t_n, double delta, Rng& rng) {
  Chains c = single(state, rng);
  BackwardStats stats;
  djd_zzp_step(model, spec, c, t_n, delta, {}, stats);
  return unpack(c, rng);
}

State djd_rhmc_step(const VelocityDensity& model, const ProcessSpec& spec,
                    const State& state, double t_n, double delta, Rng& rng) {
  Chains c = single(state, rng);
  BackwardStats stats;
  djd_rhmc_step(model, spec, c, t_n, delta, {}, stats);
  return unpack(c, rng);
}

State rdbdr_bps_step(const VelocityDensity& model, const ProcessSpec& spec,
                     const State& state, double t_n, double delta, Rng& rng) {
  Chains c = single(state, rng);
  BackwardStats stats;
  rdbdr_bps_step(model, spec, c, t_n, delta, {}, stats);
  return unpack(c, rng);
}

double base_position_variance(const ProcessSpec& spec) {
  if (spec.potential == Potential::StandardGaussian) return 1.0;
  const double lam = spec.refresh_rate;
  // Internal time: the flat-potential displacement only sees the clock.
  const double T = spec.schedule.clock(spec.horizon);
  if (lam <= 0.0) {
    // No velocity decorrelation: displacement is T v.
    return T * T;
  }
  if (spec.kind == ProcessKind::ZigZag) {
    // Each coordinate velocity is a telegraph signal flipping at rate lambda.
    return T / lam - (1.0 - std::exp(-2.0 * lam * T)) / (2.0 * lam * lam);
  }
  // Velocity refreshed from N(0, I) at rate lambda: covariance e^{-lambda |s-u|}.
  return 2.0 * T / lam - 2.0 * (1.0 - std::exp(-lam * T)) / (lam * lam);
}

BackwardResult run_backward(const BackwardModels& models, const ProcessSpec& spec,
                            const BackwardConfig& cfg) {
  spec.validate();
  const bool zzp = spec.kind == ProcessKind::ZigZag;
  if (zzp && !models.ratio) {
    throw ModelSpecMismatch("ZZP sampling needs a ratio model");
  }
  if (!zzp && !models.density) {
    throw ModelSpecMismatch(to_string(spec.kind) + " sampling needs a velocity density model");
  }
  const int model_dim = zzp ? models.ratio->dim() : models.density->dim();
  if (model_dim != spec.dim) {
    throw ModelSpecMismatch("model dimension " + std::to_string(model_dim) +
                            " does not match process dimension " +
                            std::to_string(spec.dim));
  }
  if (zzp && cfg.init == InitMode::LearnedVelocity) {
    throw InvalidArgument("learned velocity initialization is not available for ZZP");
  }
  if (!cfg.grid.deltas.empty() && std::abs(cfg.grid.horizon - spec.horizon) > 1e-12) {
    throw InvalidArgument("time grid horizon does not match the process horizon");
  }
  if (cfg.chunk == 0) throw InvalidArgument("chunk size must be positive");

  const int d = spec.dim;
  const std::size_t n = cfg.n_samples;
  const std::size_t n_chunks = (n + cfg.chunk - 1) / cfg.chunk;
  const double sd = std::sqrt(base_position_variance(spec));
  const std::vector<double> times = cfg.grid.times();
  const StepOptions opts{cfg.reevaluate_after_flip, cfg.rate_cap};

  BackwardResult result{Matrix(static_cast<Eigen::Index>(n), d),
                        Matrix(static_cast<Eigen::Index>(n), d), {}};
  std::vector<BackwardStats> chunk_stats(n_chunks);

  parallel_for(n_chunks, cfg.threads, [&](std::size_t k) {
    const std::size_t begin = k * cfg.chunk;
    const std::size_t end = std::min(n, begin + cfg.chunk);
    const auto b = static_cast<Eigen::Index>(end - begin);
    Chains c{Matrix(d, b), Matrix(d, b), {}};
    c.rngs.reserve(end - begin);
    for (std::size_t j = begin; j < end; ++j) c.rngs.push_back(Rng::stream(cfg.seed, j));
    for (Eigen::Index j = 0; j < b; ++j) {
      Rng& rng = c.rngs[j];
      for (int i = 0; i < d; ++i) c.x(i, j) = sd * rng.normal();
      c.v.col(j) = draw_velocity(spec, rng);
    }
    BackwardStats& stats = chunk_stats[k];
    if (cfg.init == InitMode::LearnedVelocity) {
      c.v = models.density->sample(c.x, Vector::Constant(b, spec.horizon), c.rngs);
      stats.model_evals += static_cast<std::size_t>(b);
    }
    for (std::size_t step = 0; step < cfg.grid.steps(); ++step) {
      const double t_n = times[step], delta = cfg.grid.deltas[step];
      switch (spec.kind) {
        case ProcessKind::ZigZag:
          djd_zzp_step(*models.ratio, spec, c, t_n, delta, opts, stats);
          break;
        case ProcessKind::RandomizedHmc:
          djd_rhmc_step(*models.density, spec, c, t_n, delta, opts, stats);
          break;
        case ProcessKind::Bouncy:
          rdbdr_bps_step(*models.density, spec, c, t_n, delta, opts, stats);
          break;
      }
    }
    result.positions.middleRows(static_cast<Eigen::Index>(begin), b) = c.x.transpose();
    result.velocities.middleRows(static_cast<Eigen::Index>(begin), b) = c.v.transpose();
  });

  for (const auto& s : chunk_stats) {
    result.stats.model_evals += s.model_evals;
    result.stats.saturations += s.saturations;
  }
  return result;
}

}  // namespace pdgm
