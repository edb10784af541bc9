#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "pdgm/backward.hpp"
#include "pdgm/metrics.hpp"

using namespace pdgm;
namespace po = pdgm::testing;

namespace {

ProcessSpec make_spec(ProcessKind kind, int d) {
  ProcessSpec s;
  s.kind = kind;
  s.dim = d;
  s.horizon = 5.0;
  s.refresh_rate = 1.0;
  return s;
}

BackwardResult run_stationary(ProcessKind kind, std::size_t n, std::size_t steps,
                              std::uint64_t seed, int threads = 1) {
  const ProcessSpec spec = make_spec(kind, 2);
  const ConstantRatio ratio(2, 1.0);
  const StandardNormalVelocity nu(2);
  BackwardConfig cfg;
  cfg.grid = time_grid_quadratic(spec.horizon, steps);
  cfg.n_samples = n;
  cfg.seed = seed;
  cfg.threads = threads;
  return run_backward({&ratio, &nu}, spec, cfg);
}

Matrix gaussian_rows(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index k = 0; k < m.rows(); ++k) m.row(k) << rng.normal(), rng.normal();
  return m;
}

}  // namespace

TEST_CASE("quadratic time grid") {
  const auto g = time_grid_quadratic(1.0, 2);
  REQUIRE(g.steps() == 2);
  CHECK(g.deltas[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(g.deltas[1] == doctest::Approx(0.75).epsilon(1e-15));
  const auto one = time_grid_quadratic(5.0, 1);
  REQUIRE(one.steps() == 1);
  CHECK(one.deltas[0] == 5.0);

  for (double tf : {0.1, 1.0, 3.7, 5.0, 12.345}) {
    for (std::size_t n : {1, 2, 3, 7, 25, 100, 1000}) {
      const auto grid = time_grid_quadratic(tf, n);
      double sum = 0.0;
      for (double d : grid.deltas) sum += d;
      CHECK(std::abs(sum - tf) <= 1e-15 * tf);
      for (std::size_t k = 1; k < grid.steps(); ++k) CHECK(grid.deltas[k] > grid.deltas[k - 1]);
      const auto times = grid.times();
      CHECK(times.front() == 0.0);
      CHECK(times.back() == tf);
    }
  }
  CHECK(time_grid_quadratic(5.0, 0).steps() == 0);
  CHECK_THROWS_AS(time_grid_quadratic(0.0, 3), InvalidArgument);
}

TEST_CASE("init mode names") {
  CHECK(parse_init_mode("base") == InitMode::BaseProduct);
  CHECK(parse_init_mode(to_string(InitMode::LearnedVelocity)) == InitMode::LearnedVelocity);
  CHECK_THROWS_AS(parse_init_mode("prior"), InvalidArgument);
}

TEST_CASE("pure backward transport") {
  ProcessSpec spec = make_spec(ProcessKind::ZigZag, 2);
  spec.refresh_rate = 0.0;
  Rng rng(1);
  const State s{Eigen::Vector2d(0.3, -1.2), Eigen::Vector2d(1.0, -1.0)};
  const State out = djd_zzp_step(ConstantRatio(2, 0.0), spec, s, 0.5, 0.4, rng);
  CHECK((out.x - (s.x - 0.4 * s.v)).norm() < 1e-15);
  CHECK(out.v == s.v);

  ProcessSpec bps = make_spec(ProcessKind::Bouncy, 2);
  bps.potential = Potential::Zero;
  bps.refresh_rate = 0.0;
  bps.allow_zero_refresh = true;
  const StandardNormalVelocity nu(2);
  const State b{Eigen::Vector2d(0.3, -1.2), Eigen::Vector2d(0.7, 2.0)};
  const State ob = rdbdr_bps_step(nu, bps, b, 1.0, 0.3, rng);
  CHECK((ob.x - (b.x - 0.3 * b.v)).norm() < 1e-15);
  CHECK(ob.v == b.v);
}

TEST_CASE("rhmc without refreshment rotates backward") {
  ProcessSpec spec = make_spec(ProcessKind::RandomizedHmc, 1);
  spec.refresh_rate = 0.0;
  spec.allow_zero_refresh = true;
  const StandardNormalVelocity nu(1);
  Rng rng(2);
  const State s{Vector::Constant(1, 0.8), Vector::Constant(1, -0.3)};
  const double delta = 0.7;
  const State out = djd_rhmc_step(nu, spec, s, 0.0, delta, rng);
  CHECK(out.x[0] == doctest::Approx(0.8 * std::cos(delta) + 0.3 * std::sin(delta)));
  CHECK(out.v[0] == doctest::Approx(0.8 * std::sin(delta) - 0.3 * std::cos(delta)));
}

TEST_CASE("zig-zag flip frequency at delta * rate = ln 2") {
  ProcessSpec spec = make_spec(ProcessKind::ZigZag, 1);
  spec.potential = Potential::Zero;  // rate is s * lambda_r, independent of x
  const ConstantRatio ratio(1, std::numbers::ln2);
  const int n = 100000;
  int flips = 0;
  for (int k = 0; k < n; ++k) {
    Rng rng = Rng::stream(4, static_cast<std::uint64_t>(k));
    const State out = djd_zzp_step(ratio, spec, {Vector::Zero(1), Vector::Ones(1)}, 0.0, 1.0, rng);
    flips += out.v[0] < 0.0;
  }
  CHECK(std::abs(static_cast<double>(flips) / n - 0.5) < 0.005);
}

TEST_CASE("rhmc refresh frequency") {
  ProcessSpec spec = make_spec(ProcessKind::RandomizedHmc, 1);
  spec.potential = Potential::Zero;
  spec.refresh_rate = 0.8;
  const StandardNormalVelocity nu(1);
  const int n = 100000;
  int refreshed = 0;
  for (int k = 0; k < n; ++k) {
    Rng rng = Rng::stream(6, static_cast<std::uint64_t>(k));
    const State out =
        djd_rhmc_step(nu, spec, {Vector::Zero(1), Vector::Constant(1, 0.25)}, 0.0, 0.5, rng);
    refreshed += out.v[0] != 0.25;
  }
  CHECK(std::abs(static_cast<double>(refreshed) / n - (1.0 - std::exp(-0.4))) < 0.005);
}

TEST_CASE("bps bounce frequency") {
  // After the half drift the position is (1, 0); the reflected velocity
  // (1, 0) has forward rate 1, so the bounce probability is 1 - e^-1.
  ProcessSpec spec = make_spec(ProcessKind::Bouncy, 2);
  spec.refresh_rate = 0.0;
  spec.allow_zero_refresh = true;
  const StandardNormalVelocity nu(2);
  const int n = 100000;
  int bounced = 0;
  for (int k = 0; k < n; ++k) {
    Rng rng = Rng::stream(7, static_cast<std::uint64_t>(k));
    const State out = rdbdr_bps_step(
        nu, spec, {Eigen::Vector2d(0.5, 0.0), Eigen::Vector2d(-1.0, 0.0)}, 0.0, 1.0, rng);
    bounced += out.v[0] > 0.0;
  }
  CHECK(std::abs(static_cast<double>(bounced) / n - (1.0 - std::exp(-1.0))) < 0.005);
}

TEST_CASE("stationary oracle keeps the base law") {
  for (auto kind : {ProcessKind::ZigZag, ProcessKind::Bouncy, ProcessKind::RandomizedHmc}) {
    CAPTURE(to_string(kind));
    const auto res = run_stationary(kind, 4000, 50, 11);
    CHECK(res.positions.rows() == 4000);
    for (int i = 0; i < 2; ++i) {
      const auto m = po::moments(res.positions.col(i));
      CHECK(std::abs(m.mean) < 0.08);
      CHECK(m.var > 0.85);
      CHECK(m.var < 1.15);
    }
    if (kind == ProcessKind::ZigZag) {
      CHECK((res.velocities.array().abs() == 1.0).all());
    } else {
      for (int i = 0; i < 2; ++i) {
        const auto m = po::moments(res.velocities.col(i));
        CHECK(m.var > 0.85);
        CHECK(m.var < 1.15);
      }
    }
  }
}

TEST_CASE("learned velocity initialization") {
  const ProcessSpec spec = make_spec(ProcessKind::Bouncy, 2);
  const StandardNormalVelocity nu(2);
  BackwardConfig cfg;
  cfg.grid = time_grid_quadratic(5.0, 20);
  cfg.n_samples = 2000;
  cfg.init = InitMode::LearnedVelocity;
  const auto res = run_backward({nullptr, &nu}, spec, cfg);
  for (int i = 0; i < 2; ++i) {
    const auto m = po::moments(res.positions.col(i));
    CHECK(std::abs(m.mean) < 0.1);
    CHECK(m.var > 0.85);
    CHECK(m.var < 1.15);
  }
  const ConstantRatio ratio(2, 1.0);
  CHECK_THROWS_AS(run_backward({&ratio, nullptr}, make_spec(ProcessKind::ZigZag, 2), cfg),
                  InvalidArgument);
}

TEST_CASE("empty grid returns the initial draw") {
  const ProcessSpec spec = make_spec(ProcessKind::ZigZag, 2);
  const ConstantRatio ratio(2, 1.0);
  BackwardConfig cfg;
  cfg.grid = time_grid_quadratic(5.0, 0);
  cfg.grid.horizon = 5.0;
  cfg.n_samples = 3000;
  cfg.seed = 3;
  const auto res = run_backward({&ratio, nullptr}, spec, cfg);
  CHECK(res.stats.model_evals == 0);
  CHECK((res.velocities.array().abs() == 1.0).all());
  // Same seed, one step with zero rates and no flips: positions move by delta v only.
  ProcessSpec still = spec;
  still.refresh_rate = 0.0;
  const ConstantRatio zero(2, 0.0);
  BackwardConfig one = cfg;
  one.grid = time_grid_quadratic(5.0, 1);
  const auto moved = run_backward({&zero, nullptr}, still, one);
  CHECK((moved.positions - (res.positions - 5.0 * res.velocities)).norm() < 1e-12);
}

TEST_CASE("backward sampling is deterministic and thread independent") {
  for (auto kind : {ProcessKind::ZigZag, ProcessKind::Bouncy, ProcessKind::RandomizedHmc}) {
    const auto a = run_stationary(kind, 700, 10, 5, 1);
    const auto b = run_stationary(kind, 700, 10, 5, 1);
    const auto c = run_stationary(kind, 700, 10, 5, 3);
    CHECK(a.positions == b.positions);
    CHECK(a.positions == c.positions);
    CHECK(a.velocities == c.velocities);
    CHECK(a.stats.model_evals == c.stats.model_evals);
    const auto d = run_stationary(kind, 700, 10, 6, 1);
    CHECK(a.positions != d.positions);
  }
}

TEST_CASE("model and spec must agree") {
  const ConstantRatio ratio(2, 1.0);
  const StandardNormalVelocity nu(2), nu3(3);
  BackwardConfig cfg;
  cfg.grid = time_grid_quadratic(5.0, 3);
  cfg.n_samples = 10;
  CHECK_THROWS_AS(run_backward({nullptr, &nu}, make_spec(ProcessKind::ZigZag, 2), cfg),
                  ModelSpecMismatch);
  CHECK_THROWS_AS(run_backward({&ratio, nullptr}, make_spec(ProcessKind::Bouncy, 2), cfg),
                  ModelSpecMismatch);
  CHECK_THROWS_AS(run_backward({nullptr, &nu3}, make_spec(ProcessKind::RandomizedHmc, 2), cfg),
                  ModelSpecMismatch);
  cfg.grid = time_grid_quadratic(4.0, 3);
  CHECK_THROWS(run_backward({&ratio, nullptr}, make_spec(ProcessKind::ZigZag, 2), cfg));
}

TEST_CASE("rates are capped and saturations counted") {
  ProcessSpec spec = make_spec(ProcessKind::ZigZag, 2);
  const ConstantRatio huge(2, 1e9);
  BackwardConfig cfg;
  cfg.grid = time_grid_quadratic(5.0, 4);
  cfg.n_samples = 50;
  cfg.rate_cap = 100.0;
  const auto res = run_backward({&huge, nullptr}, spec, cfg);
  CHECK(res.stats.saturations > 0);
  CHECK(res.positions.allFinite());
}

TEST_CASE("flat potential base variance") {
  ProcessSpec spec = make_spec(ProcessKind::ZigZag, 1);
  CHECK(base_position_variance(spec) == 1.0);
  spec.potential = Potential::Zero;
  spec.refresh_rate = 0.0;
  CHECK(base_position_variance(spec) == doctest::Approx(25.0));
  spec.refresh_rate = 1.0;
  // telegraph velocity, correlation e^{-2 lambda |s - u|}, integrated twice over [0, T]
  const double expected = 5.0 - (1.0 - std::exp(-10.0)) / 2.0;
  CHECK(base_position_variance(spec) == doctest::Approx(expected));
}

TEST_CASE("finer grids are no worse for the stationary oracle") {
  const int seeds = 20;
  double coarse = 0.0, fine = 0.0;
  MmdConfig mc;
  for (int s = 0; s < seeds; ++s) {
    const Matrix ref = gaussian_rows(1000, 500 + static_cast<std::uint64_t>(s));
    coarse += mmd(run_stationary(ProcessKind::Bouncy, 1000, 5, 100 + s).positions, ref, mc);
    fine += mmd(run_stationary(ProcessKind::Bouncy, 1000, 100, 100 + s).positions, ref, mc);
  }
  CHECK(fine <= coarse);
}
