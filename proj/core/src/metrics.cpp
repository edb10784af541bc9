#include "pdgm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

#include "pdgm/parallel.hpp"

namespace pdgm {

namespace {

bool lex_less(const Matrix& m, Eigen::Index a, Eigen::Index b) {
  for (Eigen::Index k = 0; k < m.cols(); ++k) {
    if (m(a, k) != m(b, k)) return m(a, k) < m(b, k);
  }
  return false;
}

// Rows picked by even striding over `n` indices.
std::vector<Eigen::Index> strided(Eigen::Index n, std::size_t max_points) {
  std::vector<Eigen::Index> idx;
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(n), max_points);
  idx.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    idx.push_back(static_cast<Eigen::Index>(i * static_cast<std::size_t>(n) / k));
  }
  return idx;
}

constexpr Eigen::Index kBlock = 512;

// sum_{a in A, b in B} exp(-gamma |a - b|^2), deterministic for any thread
// count. A and B hold points as columns.
double kernel_sum(const Matrix& a, const Matrix& b, double gamma, int threads) {
  const Vector na = a.colwise().squaredNorm().transpose();
  const Vector nb = b.colwise().squaredNorm().transpose();
  const auto blocks = static_cast<std::size_t>((a.cols() + kBlock - 1) / kBlock);
  std::vector<double> partial(blocks, 0.0);
  parallel_for(blocks, threads, [&](std::size_t k) {
    const Eigen::Index begin = static_cast<Eigen::Index>(k) * kBlock;
    const Eigen::Index rows = std::min(kBlock, a.cols() - begin);
    double acc = 0.0;
    for (Eigen::Index cb = 0; cb < b.cols(); cb += kBlock) {
      const Eigen::Index cols = std::min(kBlock, b.cols() - cb);
      Matrix d2 = -2.0 * a.middleCols(begin, rows).transpose() * b.middleCols(cb, cols);
      d2.colwise() += na.segment(begin, rows);
      d2.rowwise() += nb.segment(cb, cols).transpose();
      acc += (-gamma * d2.array().max(0.0)).exp().sum();
    }
    partial[k] = acc;
  });
  return std::accumulate(partial.begin(), partial.end(), 0.0);
}

}  // namespace

double median_bandwidth(const Matrix& x, const Matrix& y, std::size_t max_points) {
  if (x.cols() != y.cols()) throw DimensionMismatch("point sets differ in dimension");
  Matrix pooled(x.rows() + y.rows(), x.cols());
  pooled << x, y;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(pooled.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return lex_less(pooled, a, b); });
  const auto pick = strided(pooled.rows(), std::max<std::size_t>(max_points, 2));

  std::vector<double> dists;
  dists.reserve(pick.size() * (pick.size() - 1) / 2);
  for (std::size_t i = 0; i < pick.size(); ++i) {
    for (std::size_t j = i + 1; j < pick.size(); ++j) {
      dists.push_back((pooled.row(order[pick[i]]) - pooled.row(order[pick[j]])).norm());
    }
  }
  if (dists.empty()) return 1.0;
  auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  double med = *mid;
  if (dists.size() % 2 == 0) {
    med = 0.5 * (med + *std::max_element(dists.begin(), mid));
  }
  return med > 0.0 ? med : 1.0;
}

double mmd(const Matrix& x, const Matrix& y, const MmdConfig& cfg) {
  if (x.rows() == 0 || y.rows() == 0) throw InvalidArgument("mmd needs non-empty sets");
  if (x.cols() != y.cols()) throw DimensionMismatch("point sets differ in dimension");
  double h = cfg.fixed_bandwidth;
  if (cfg.bandwidth == MmdConfig::Bandwidth::MedianHeuristic) {
    h = median_bandwidth(x, y, cfg.median_subsample);
  } else if (!(h > 0.0)) {
    throw InvalidArgument("fixed MMD bandwidth must be positive");
  }
  const double gamma = 1.0 / (2.0 * h * h);
  const Matrix xt = x.transpose(), yt = y.transpose();
  const double n = static_cast<double>(x.rows()), m = static_cast<double>(y.rows());
  const double kxx = kernel_sum(xt, xt, gamma, cfg.threads) / (n * n);
  const double kyy = kernel_sum(yt, yt, gamma, cfg.threads) / (m * m);
  const double kxy = kernel_sum(xt, yt, gamma, cfg.threads) / (n * m);
  return std::sqrt(std::max(0.0, kxx + kyy - 2.0 * kxy));
}

std::vector<int> min_cost_assignment(const Matrix& cost) {
  // Shortest augmenting path with potentials (Jonker-Volgenant style), O(n^3).
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw DimensionMismatch("assignment needs a square cost matrix");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assign(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] > 0) assign[p[j] - 1] = j - 1;
  }
  return assign;
}

double wasserstein2(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) throw DimensionMismatch("W2 needs equal-size point sets");
  if (x.cols() != y.cols()) throw DimensionMismatch("point sets differ in dimension");
  if (x.rows() == 0) return 0.0;
  Matrix xs = x, ys = y;
  if (static_cast<std::size_t>(x.rows()) > kMaxW2Points) {
    std::cerr << "warning: W2 inputs subsampled from " << x.rows() << " to "
              << kMaxW2Points << " points\n";
    const auto idx = strided(x.rows(), kMaxW2Points);
    xs.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
    ys.resize(static_cast<Eigen::Index>(idx.size()), y.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      xs.row(static_cast<Eigen::Index>(k)) = x.row(idx[k]);
      ys.row(static_cast<Eigen::Index>(k)) = y.row(idx[k]);
    }
  }
  const Eigen::Index n = xs.rows();
  Matrix cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = (xs.row(i) - ys.row(j)).squaredNorm();
  }
  const auto assign = min_cost_assignment(cost);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += cost(i, assign[i]);
  return std::sqrt(total / static_cast<double>(n));
}

}  // namespace pdgm
