#include "pdgm/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "pdgm/forward.hpp"
#include "pdgm/parallel.hpp"
#include "pdgm/rng.hpp"

namespace pdgm {

RatioOracle::RatioOracle(RatioOracleConfig cfg, std::vector<std::size_t> plus,
                         std::vector<std::size_t> minus)
    : cfg_(std::move(cfg)), plus_(std::move(plus)), minus_(std::move(minus)) {
  const std::size_t expected = cfg_.times.size() * static_cast<std::size_t>(cfg_.x_bins);
  if (plus_.size() != expected || minus_.size() != expected) {
    throw DimensionMismatch("oracle count tables do not match the grid");
  }
}

int RatioOracle::x_bin(double x) const {
  if (!(x >= cfg_.x_min) || !(x < cfg_.x_max)) return -1;
  const double w = (cfg_.x_max - cfg_.x_min) / cfg_.x_bins;
  return std::min(cfg_.x_bins - 1, static_cast<int>((x - cfg_.x_min) / w));
}

double RatioOracle::bin_center(int bin) const {
  const double w = (cfg_.x_max - cfg_.x_min) / cfg_.x_bins;
  return cfg_.x_min + (bin + 0.5) * w;
}

std::size_t RatioOracle::time_index(double t) const {
  const auto& ts = cfg_.times;
  auto it = std::lower_bound(ts.begin(), ts.end(), t);
  if (it == ts.end()) return ts.size() - 1;
  if (it == ts.begin()) return 0;
  const auto hi = static_cast<std::size_t>(it - ts.begin());
  return (t - ts[hi - 1] <= ts[hi] - t) ? hi - 1 : hi;
}

std::size_t RatioOracle::cell(std::size_t time_index, int x_bin) const {
  return time_index * static_cast<std::size_t>(cfg_.x_bins) + static_cast<std::size_t>(x_bin);
}

std::size_t RatioOracle::count(std::size_t time_index, int x_bin, double v) const {
  const std::size_t c = cell(time_index, x_bin);
  return v > 0 ? plus_[c] : minus_[c];
}

std::optional<double> RatioOracle::cell_ratio(std::size_t time_index, int x_bin,
                                              double v) const {
  if (x_bin < 0 || time_index >= cfg_.times.size()) return std::nullopt;
  const std::size_t same = count(time_index, x_bin, v), other = count(time_index, x_bin, -v);
  if (same < cfg_.min_count || other < cfg_.min_count) return std::nullopt;
  return static_cast<double>(other) / static_cast<double>(same);
}

std::optional<Vector> RatioOracle::ratios(const Vector& x, const Vector& v, double t) const {
  if (x.size() != 1 || v.size() != 1) throw DimensionMismatch("ratio oracle is one-dimensional");
  const auto r = cell_ratio(time_index(t), x_bin(x[0]), v[0]);
  if (!r) return std::nullopt;
  return Vector::Constant(1, *r);
}

std::size_t RatioOracle::unavailable_cells() const {
  std::size_t n = 0;
  for (std::size_t c = 0; c < plus_.size(); ++c) {
    if (plus_[c] < cfg_.min_count || minus_[c] < cfg_.min_count) ++n;
  }
  return n;
}

RatioOracle build_ratio_oracle(const ProcessSpec& spec, const Matrix& initial,
                               RatioOracleConfig cfg) {
  spec.validate();
  if (spec.kind != ProcessKind::ZigZag || spec.dim != 1) {
    throw InvalidArgument("the ratio oracle needs a one-dimensional ZZP");
  }
  if (initial.cols() != 1 || initial.rows() == 0) {
    throw DimensionMismatch("oracle initial points must be a non-empty n x 1 matrix");
  }
  if (cfg.x_bins < 1 || !(cfg.x_max > cfg.x_min)) {
    throw InvalidArgument("bad oracle position grid");
  }
  if (cfg.times.empty()) {
    for (int k = 0; k <= 50; ++k) cfg.times.push_back(spec.horizon * k / 50.0);
  }
  if (!std::is_sorted(cfg.times.begin(), cfg.times.end())) {
    throw InvalidArgument("oracle times must be sorted");
  }
  const double t_end = cfg.times.back();
  const std::size_t cells = cfg.times.size() * static_cast<std::size_t>(cfg.x_bins);
  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (cfg.n_draws + kChunk - 1) / kChunk;
  std::vector<std::vector<std::size_t>> plus(chunks), minus(chunks);

  RatioOracle shape(cfg, std::vector<std::size_t>(cells), std::vector<std::size_t>(cells));
  parallel_for(chunks, cfg.threads, [&](std::size_t k) {
    plus[k].assign(cells, 0);
    minus[k].assign(cells, 0);
    const std::size_t end = std::min(cfg.n_draws, (k + 1) * kChunk);
    for (std::size_t n = k * kChunk; n < end; ++n) {
      Rng rng = Rng::stream(cfg.seed, n, 0x6f7261);
      const Vector x0 = initial.row(static_cast<Eigen::Index>(
                                        rng.index(static_cast<std::size_t>(initial.rows()))))
                            .transpose();
      const State s0{x0, Vector::Constant(1, rng.rademacher())};
      const Trajectory path = simulate_forward(spec, s0, t_end, rng);
      for (std::size_t ti = 0; ti < cfg.times.size(); ++ti) {
        const State s = path.state_at(cfg.times[ti]);
        const int bin = shape.x_bin(s.x[0]);
        if (bin < 0) continue;
        const std::size_t c = ti * static_cast<std::size_t>(cfg.x_bins) + bin;
        (s.v[0] > 0 ? plus[k] : minus[k])[c] += 1;
      }
    }
  });

  std::vector<std::size_t> p(cells, 0), m(cells, 0);
  for (std::size_t k = 0; k < chunks; ++k) {
    for (std::size_t c = 0; c < cells; ++c) {
      p[c] += plus[k][c];
      m[c] += minus[k][c];
    }
  }
  return RatioOracle(std::move(cfg), std::move(p), std::move(m));
}

}  // namespace pdgm
