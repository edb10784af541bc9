#pragma once

#include <cstddef>
#include <vector>

#include "pdgm/types.hpp"

namespace pdgm {

struct MmdConfig {
  enum class Bandwidth { MedianHeuristic, Fixed };
  Bandwidth bandwidth = Bandwidth::MedianHeuristic;
  double fixed_bandwidth = 1.0;
  // Points used by the median heuristic.
  std::size_t median_subsample = 1000;
  int threads = 1;
};

// Median pairwise Euclidean distance over at most `max_points` rows of the
// pooled set. The subsample is taken from the lexicographically sorted rows,
// so the result does not depend on row order or on which set is X.
double median_bandwidth(const Matrix& x, const Matrix& y, std::size_t max_points = 1000);

// sqrt of the V-statistic MMD^2 with kernel exp(-|a - b|^2 / (2 h^2)).
// Rows are points.
double mmd(const Matrix& x, const Matrix& y, const MmdConfig& cfg = {});

inline constexpr std::size_t kMaxW2Points = 1024;

// Minimum-cost perfect matching for a square cost matrix; returns, for each
// row, the assigned column.
std::vector<int> min_cost_assignment(const Matrix& cost);

// Exact empirical 2-Wasserstein distance between equal-size point sets.
// Inputs larger than kMaxW2Points are subsampled by even striding, with a
// warning on stderr.
double wasserstein2(const Matrix& x, const Matrix& y);

}  // namespace pdgm
