#include "pdgm/training.hpp"

#include <cmath>
#include <string>

#include "pdgm/dynamics.hpp"
#include "pdgm/parallel.hpp"

namespace pdgm {

std::string to_string(TimeDensity omega) {
  return omega == TimeDensity::Uniform ? "uniform" : "quadratic";
}

TimeDensity parse_time_density(std::string_view name) {
  if (name == "uniform") return TimeDensity::Uniform;
  if (name == "quadratic") return TimeDensity::Quadratic;
  throw InvalidArgument("unknown time density '" + std::string(name) +
                        "' (expected uniform|quadratic)");
}

double sample_time(TimeDensity omega, double horizon, Rng& rng) {
  const double u = rng.uniform();
  return omega == TimeDensity::Uniform ? horizon * u : horizon * std::sqrt(u);
}

namespace {

void check_data(const Matrix& data, const ProcessSpec& spec) {
  if (data.rows() < 1) throw InvalidArgument("training data is empty");
  if (data.cols() != spec.dim) {
    throw DimensionMismatch("training data has " + std::to_string(data.cols()) +
                            " columns, process dimension is " +
                            std::to_string(spec.dim));
  }
}

}  // namespace

SampleBatch draw_forward_batch(const Matrix& data, const ProcessSpec& spec,
                               const TrainConfig& cfg, std::size_t step) {
  check_data(data, spec);
  const auto b = static_cast<Eigen::Index>(cfg.batch_size);
  SampleBatch batch;
  batch.x.resize(spec.dim, b);
  batch.v.resize(spec.dim, b);
  batch.t.resize(b);
  parallel_for(cfg.batch_size, cfg.threads, [&](std::size_t j) {
    Rng rng = Rng::stream(cfg.seed, step, j + 1);
    const auto row = static_cast<Eigen::Index>(
        rng.index(static_cast<std::size_t>(data.rows())));
    const double t = sample_time(cfg.omega, spec.horizon, rng);
    const Vector x0 = data.row(row).transpose();
    const State s = sample_state_at(spec, x0, std::nullopt, t, rng);
    const auto col = static_cast<Eigen::Index>(j);
    batch.x.col(col) = s.x;
    batch.v.col(col) = s.v;
    batch.t[col] = t;
  });
  return batch;
}

TrajectoryPool::TrajectoryPool(const Matrix& data, const ProcessSpec& spec,
                               std::size_t size, std::uint64_t seed,
                               int threads) {
  check_data(data, spec);
  trajectories_.resize(size);
  parallel_for(size, threads, [&](std::size_t k) {
    Rng rng = Rng::stream(seed, k, 0x706f6f6cULL);
    const auto row = static_cast<Eigen::Index>(
        rng.index(static_cast<std::size_t>(data.rows())));
    State initial{data.row(row).transpose(), draw_velocity(spec, rng)};
    trajectories_[k] = simulate_forward(spec, initial, spec.horizon, rng);
  });
}

SampleBatch draw_cached_batch(const TrajectoryPool& pool,
                              const TrainConfig& cfg, std::size_t step) {
  if (pool.size() == 0) throw InvalidArgument("trajectory pool is empty");
  const ProcessSpec& spec = pool[0].spec;
  const auto b = static_cast<Eigen::Index>(cfg.batch_size);
  SampleBatch batch;
  batch.x.resize(spec.dim, b);
  batch.v.resize(spec.dim, b);
  batch.t.resize(b);
  for (Eigen::Index j = 0; j < b; ++j) {
    Rng rng = Rng::stream(cfg.seed, step, static_cast<std::uint64_t>(j) + 1);
    const Trajectory& traj = pool[rng.index(pool.size())];
    const double t = sample_time(cfg.omega, spec.horizon, rng);
    const State s = traj.state_at(t);
    batch.x.col(j) = s.x;
    batch.v.col(j) = s.v;
    batch.t[j] = t;
  }
  return batch;
}

void check_finite(const LossGrad& lg, std::size_t step) {
  if (!std::isfinite(lg.loss) || !lg.grad.allFinite()) {
    throw NonFiniteLoss("non-finite loss or gradient at step " +
                        std::to_string(step) +
                        " (try a smaller learning rate)");
  }
}

}  // namespace pdgm
