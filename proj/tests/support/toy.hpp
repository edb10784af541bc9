#pragma once

#include <array>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pdgm/ratio_zzp.hpp"

namespace pdgm::testing {

// Ratio estimator on the finite toy: s(x, v) read from a table indexed by
// position and velocity sign.
class TableRatio : public RatioEstimator {
 public:
  explicit TableRatio(std::array<std::array<double, 2>, 4> table) : table_(table) {}
  int dim() const override { return 1; }
  Matrix ratios(const Matrix& x, const Matrix& v, const Vector&) const override {
    Matrix out(1, x.cols());
    for (Eigen::Index n = 0; n < x.cols(); ++n) out(0, n) = lookup(x(0, n), v(0, n));
    return out;
  }
  static int index(double x) { return static_cast<int>(std::lround(x + 1.5)); }
  double lookup(double x, double v) const {
    return table_[static_cast<std::size_t>(index(x))][v > 0 ? 1 : 0];
  }

 private:
  std::array<std::array<double, 2>, 4> table_;
};

// The eight toy states, weighted by their probability under q.
inline SampleBatch toy_batch(const FiniteToy& toy) {
  SampleBatch b{Matrix(1, 8), Matrix(1, 8), Vector::Zero(8), Vector(8)};
  for (int k = 0; k < 8; ++k) {
    const int xi = k / 2;
    const double v = k % 2 ? 1.0 : -1.0;
    b.x(0, k) = toy.xs[static_cast<std::size_t>(xi)];
    b.v(0, k) = v;
    b.weights[k] = toy.q(xi, v);
  }
  return b;
}

inline std::array<std::array<double, 2>, 4> truth_table(const FiniteToy& toy) {
  std::array<std::array<double, 2>, 4> t{};
  for (int xi = 0; xi < 4; ++xi) {
    t[static_cast<std::size_t>(xi)] = {toy.ratio(xi, -1.0), toy.ratio(xi, 1.0)};
  }
  return t;
}

inline RatioFunction truth_fn(const FiniteToy& toy) {
  return [toy](const Matrix& x, const Matrix& v, const Vector&) {
    Matrix r(1, x.cols());
    for (Eigen::Index n = 0; n < x.cols(); ++n) {
      r(0, n) = toy.ratio(TableRatio::index(x(0, n)), v(0, n));
    }
    return r;
  };
}

inline std::array<std::array<double, 2>, 4> random_table(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.05, 5.0);
  std::array<std::array<double, 2>, 4> t{};
  for (auto& row : t) row = {u(gen), u(gen)};
  return t;
}

}  // namespace pdgm::testing
