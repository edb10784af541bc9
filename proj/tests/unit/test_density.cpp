#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "pdgm/dynamics.hpp"
#include "pdgm/density_model.hpp"

using namespace pdgm;
namespace po = pdgm::testing;

namespace {

ProcessSpec bps_spec(int d) {
  ProcessSpec s;
  s.kind = ProcessKind::Bouncy;
  s.dim = d;
  return s;
}

CondDensityModel zero_model(int d, int k = 1) {
  const auto spec = bps_spec(d);
  return CondDensityModel(spec, Mlp::zeros(CondDensityModel::architecture(spec, k, 8, 1, 4)), k);
}

CondDensityModel random_model(int d, int k, std::uint64_t seed, double noise = 0.3) {
  const auto spec = bps_spec(d);
  Rng rng(seed);
  Mlp net = Mlp::initialize(CondDensityModel::architecture(spec, k, 16, 2, 8), rng);
  for (Eigen::Index j = 0; j < net.theta().size(); ++j) net.theta()[j] += noise * rng.normal();
  return CondDensityModel(spec, net, k);
}

double log_p(const VelocityDensity& m, const Vector& v, const Vector& x, double t) {
  return m.log_density(v, x, Vector::Constant(1, t))[0];
}

}  // namespace

TEST_CASE("architecture") {
  const auto a = CondDensityModel::architecture(bps_spec(2), 8, 16, 2, 8);
  CHECK(a.in_dim == 2);
  CHECK(a.out_dim == 8 * 5);
  CHECK(a.head == HeadKind::Linear);
  CHECK_THROWS_AS(CondDensityModel(bps_spec(2), Mlp::zeros(a), 3), DimensionMismatch);
}

TEST_CASE("zero network is the standard normal") {
  for (int d : {1, 2, 3}) {
    const auto m = zero_model(d);
    const Vector x = Vector::LinSpaced(d, -1.0, 2.0);
    CHECK(log_p(m, Vector::Zero(d), x, 0.7) ==
          doctest::Approx(-0.5 * d * std::log(2.0 * std::numbers::pi)));
    const Vector v = Vector::LinSpaced(d, 0.3, -1.1);
    CHECK(log_p(m, v, x, 2.0) == doctest::Approx(standard_normal_log_density(v)));
  }
  // Several identical components are still the standard normal.
  const auto m8 = zero_model(2, 8);
  CHECK(log_p(m8, Eigen::Vector2d(0.4, -0.2), Eigen::Vector2d(1, 1), 1.0) ==
        doctest::Approx(standard_normal_log_density(Eigen::Vector2d(0.4, -0.2))));
}

TEST_CASE("log density is finite far out and log-stds are clamped") {
  const auto m = random_model(2, 4, 3, 3.0);
  const Vector x = Eigen::Vector2d(0.5, -0.5);
  CHECK(std::isfinite(log_p(m, Eigen::Vector2d(100.0, 0.0), x, 1.0)));
  CHECK(std::isfinite(log_p(m, Eigen::Vector2d(-80.0, 95.0), x, 4.0)));
  const Vector out = m.net().forward_one(x, 1.0);
  const auto mix = m.mixture(out);
  CHECK(mix.log_weights.array().exp().sum() == doctest::Approx(1.0));
  CHECK((mix.log_stds.array() >= kLogStdMin).all());
  CHECK((mix.log_stds.array() <= kLogStdMax).all());
}

TEST_CASE("density integrates to one") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto m = random_model(1, 4, seed);
    const Vector x = Vector::Constant(1, 0.3 * static_cast<double>(seed));
    // Components may be very narrow or very wide, so integrate piecewise
    // between the ends of every component's +-12 sigma window.
    const auto mix = m.mixture(m.net().forward_one(x, 2.5));
    std::vector<std::pair<double, double>> windows;
    std::vector<double> cuts;
    for (int k = 0; k < 4; ++k) {
      const double mu = mix.means(0, k), sd = std::exp(mix.log_stds(0, k));
      windows.emplace_back(mu - 12.0 * sd, mu + 12.0 * sd);
      cuts.push_back(mu - 12.0 * sd);
      cuts.push_back(mu + 12.0 * sd);
    }
    std::sort(cuts.begin(), cuts.end());
    double z = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double a = cuts[i], b = cuts[i + 1], mid = 0.5 * (a + b);
      bool covered = false;
      for (const auto& w : windows) covered = covered || (w.first <= mid && mid <= w.second);
      if (!covered || b <= a) continue;
      z += po::simpson([&](double v) { return std::exp(log_p(m, Vector::Constant(1, v), x, 2.5)); },
                       a, b, 2000);
    }
    CHECK(std::abs(z - 1.0) < 1e-3);
  }

  // d = 2: importance check against nu
  const auto m2 = random_model(2, 4, 9, 0.1);
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  const int n = 100000;
  Matrix v(2, n), x(2, n);
  for (int j = 0; j < n; ++j) {
    v(0, j) = nd(gen);
    v(1, j) = nd(gen);
    x.col(j) = Eigen::Vector2d(0.7, -0.2);
  }
  const Vector lp = m2.log_density(v, x, Vector::Constant(n, 1.0));
  double sum = 0.0;
  for (int j = 0; j < n; ++j) sum += std::exp(lp[j] - standard_normal_log_density(v.col(j)));
  CHECK(std::abs(sum / n - 1.0) < 0.05);
}

TEST_CASE("zero network samples are standard normal") {
  const auto m = zero_model(2);
  const int n = 10000;
  std::vector<Rng> rngs;
  for (int j = 0; j < n; ++j) rngs.push_back(Rng::stream(3, static_cast<std::uint64_t>(j)));
  const Matrix s = m.sample(Matrix::Zero(2, n), Vector::Constant(n, 1.0), rngs);
  for (int i = 0; i < 2; ++i) {
    const auto mo = po::moments(s.row(i).transpose());
    CHECK(std::abs(mo.mean) < 0.05);
    CHECK(mo.var > 0.9);
    CHECK(mo.var < 1.1);
  }
}

TEST_CASE("samples follow the density") {
  const auto m = random_model(1, 4, 21);
  const Vector x0 = Vector::Constant(1, -0.4);
  const double t = 3.0;
  // CDF by cumulative trapezoid of exp(log_density) on a fine grid
  const int nodes = 48001;
  const double lo = -12.0, hi = 12.0, h = (hi - lo) / (nodes - 1);
  std::vector<double> cdf(nodes, 0.0);
  double prev = std::exp(log_p(m, Vector::Constant(1, lo), x0, t));
  for (int k = 1; k < nodes; ++k) {
    const double cur = std::exp(log_p(m, Vector::Constant(1, lo + k * h), x0, t));
    cdf[k] = cdf[k - 1] + 0.5 * h * (prev + cur);
    prev = cur;
  }
  auto cdf_at = [&](double v) {
    if (v <= lo) return 0.0;
    if (v >= hi) return 1.0;
    const double pos = (v - lo) / h;
    const auto k = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(k);
    return (1.0 - f) * cdf[k] + f * cdf[std::min<std::size_t>(k + 1, nodes - 1)];
  };

  const int n = 10000;
  std::vector<Rng> rngs;
  for (int j = 0; j < n; ++j) rngs.push_back(Rng::stream(8, static_cast<std::uint64_t>(j)));
  const Matrix s = m.sample(x0.replicate(1, n), Vector::Constant(n, t), rngs);
  std::vector<double> xs(s.data(), s.data() + n);
  CHECK(po::ks_statistic(xs, cdf_at) < po::ks_critical_01(n));

  std::vector<Rng> again;
  for (int j = 0; j < 5; ++j) again.push_back(Rng::stream(8, static_cast<std::uint64_t>(j)));
  const Matrix s2 = m.sample(x0.replicate(1, 5), Vector::Constant(5, t), again);
  CHECK(s2 == s.leftCols(5));
}

TEST_CASE("ml loss") {
  const auto m = zero_model(2);
  const int n = 10000;
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  SampleBatch b{Matrix(2, n), Matrix(2, n), Vector::Constant(n, 1.0), {}};
  Vector per(n);
  for (int j = 0; j < n; ++j) {
    b.x.col(j) = Eigen::Vector2d(nd(gen), nd(gen));
    b.v.col(j) = Eigen::Vector2d(nd(gen), nd(gen));
    per[j] = -standard_normal_log_density(b.v.col(j));
  }
  const double entropy = 1.0 + std::log(2.0 * std::numbers::pi);
  const double se = std::sqrt(po::moments(per).var / n);
  CHECK(std::abs(ml_loss(m, b) - entropy) < 2.0 * se);

  // Duplicating every row leaves the mean unchanged.
  SampleBatch dup{Matrix(2, 2 * n), Matrix(2, 2 * n), Vector::Constant(2 * n, 1.0), {}};
  dup.x << b.x, b.x;
  dup.v << b.v, b.v;
  const auto rm = random_model(2, 3, 4);
  CHECK(ml_loss(rm, dup) == doctest::Approx(ml_loss(rm, b)).epsilon(1e-12));
}

TEST_CASE("ml loss gradient matches finite differences") {
  auto model = random_model(2, 3, 13);
  Rng rng(14);
  SampleBatch b{Matrix(2, 12), Matrix(2, 12), Vector(12), {}};
  for (int j = 0; j < 12; ++j) {
    b.x.col(j) = Eigen::Vector2d(rng.normal(), rng.normal());
    b.v.col(j) = Eigen::Vector2d(rng.normal(), rng.normal());
    b.t[j] = 5.0 * rng.uniform();
  }
  const LossGrad lg = ml_loss_grad(model, b);
  CHECK(lg.loss == doctest::Approx(ml_loss(model, b)));
  std::mt19937_64 gen(15);
  std::uniform_int_distribution<Eigen::Index> pick(0, model.net().theta().size() - 1);
  for (int k = 0; k < 50; ++k) {
    const Eigen::Index c = pick(gen);
    const double fd = po::central_difference(
        [&](const Vector& th) {
          CondDensityModel m = model;
          m.net().theta() = th;
          return ml_loss(m, b);
        },
        model.net().theta(), c, 1e-4);
    CHECK(po::rel_err(lg.grad[c], fd) <= 1e-4);
  }
}

TEST_CASE("backward refresh rate") {
  ProcessSpec spec = bps_spec(2);
  spec.refresh_rate = 0.7;
  const auto nu = zero_model(2);
  const StandardNormalVelocity exact(2);
  Rng rng(1);
  for (int k = 0; k < 20; ++k) {
    const Vector x = Eigen::Vector2d(rng.normal(), rng.normal());
    const Vector v = Eigen::Vector2d(rng.normal(), rng.normal());
    CHECK(backward_refresh_rate(nu, spec, x, v, 5.0 * rng.uniform()) == doctest::Approx(0.7));
    CHECK(backward_refresh_rate(exact, spec, x, v, 1.0) == doctest::Approx(0.7));
  }
  spec.refresh_rate = 0.0;
  spec.allow_zero_refresh = true;
  CHECK(backward_refresh_rate(nu, spec, Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1), 1.0) == 0.0);

  // A narrow model far from v saturates the cap.
  spec.refresh_rate = 1.0;
  auto narrow = zero_model(2);
  const Eigen::Index n = narrow.net().theta().size();
  // output bias layout: logit, 2 means, 2 log-stds
  narrow.net().theta()[n - 2] = -5.0;
  narrow.net().theta()[n - 1] = -5.0;
  std::atomic<std::size_t> sat{0};
  const RateCap cap{50.0, &sat};
  const double r =
      backward_refresh_rate(narrow, spec, Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 3), 1.0, cap);
  CHECK(r == 50.0);
  CHECK(sat.load() == 1);
}

TEST_CASE("backward reflection rate") {
  ProcessSpec spec = bps_spec(2);
  const auto nu = zero_model(2);
  CHECK(backward_reflection_rate_bps(nu, spec, Eigen::Vector2d(1, 0), Eigen::Vector2d(-1, 1), 1.0) ==
        doctest::Approx(1.0));
  CHECK(backward_reflection_rate_bps(nu, spec, Eigen::Vector2d(0, 0), Eigen::Vector2d(-1, 1), 1.0) ==
        0.0);
  CHECK(backward_reflection_rate_bps(nu, spec, Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 1), 1.0) ==
        0.0);
  Rng rng(2);
  const auto rm = random_model(2, 3, 6);
  for (int k = 0; k < 50; ++k) {
    const Vector x = Eigen::Vector2d(rng.normal(), rng.normal());
    const Vector v = Eigen::Vector2d(rng.normal(), rng.normal());
    const double fwd = bps_reflection_rate(x, bps_reflect(x, v));
    CHECK(backward_reflection_rate_bps(nu, spec, x, v, 2.0) == doctest::Approx(fwd));
    const double r = backward_reflection_rate_bps(rm, spec, x, v, 2.0);
    CHECK(std::isfinite(r));
    CHECK(r >= 0.0);
    CHECK(r <= kDefaultRateCap);
  }
}

TEST_CASE("density training") {
  ProcessSpec spec = bps_spec(2);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  // Concentrated, off-centre data: position then carries information about velocity.
  Matrix data(2000, 2);
  for (Eigen::Index k = 0; k < data.rows(); ++k) data.row(k) << 2.0 + 0.1 * nd(gen), 0.1 * nd(gen);

  TrainConfig cfg;
  cfg.steps = 0;
  cfg.hidden_width = 16;
  cfg.n_blocks = 1;
  cfg.time_embed_dim = 8;
  cfg.components = 2;
  cfg.seed = 2;
  CHECK(train_density(data, spec, cfg).model.net().theta() ==
        CondDensityModel::create(spec, cfg).net().theta());

  cfg.steps = 400;
  cfg.batch_size = 256;
  cfg.lr = 3e-3;
  const auto res = train_density(data, spec, cfg);
  double head = 0.0, tail = 0.0;
  for (std::size_t k = 0; k < 100; ++k) {
    head += res.loss_history[k];
    tail += res.loss_history[300 + k];
  }
  CHECK(tail < head);

  // Stationary start: nu is the exact conditional.
  Matrix stationary(2000, 2);
  for (Eigen::Index k = 0; k < stationary.rows(); ++k) stationary.row(k) << nd(gen), nd(gen);
  const auto fit = train_density(stationary, spec, cfg);
  TrainConfig held = cfg;
  held.seed = 99;
  held.batch_size = 4000;
  const SampleBatch b = draw_forward_batch(stationary, spec, held, 0);
  double kl = 0.0;
  const Vector lp = fit.model.log_density(b.v, b.x, b.t);
  for (Eigen::Index j = 0; j < b.size(); ++j) kl += standard_normal_log_density(b.v.col(j)) - lp[j];
  CHECK(kl / static_cast<double>(b.size()) <= 0.05);

  spec.kind = ProcessKind::ZigZag;
  CHECK_THROWS_AS(train_density(data, spec, cfg), InvalidArgument);
}
