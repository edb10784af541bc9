#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "pdgm/process.hpp"
#include "pdgm/types.hpp"

namespace pdgm {

// Reference ratios r_i(x, v, t) = p_t(R_i v | x) / p_t(v | x) at forward time
// t. nullopt marks points where the reference has no estimate.
class ReferenceRatio {
 public:
  virtual ~ReferenceRatio() = default;
  virtual int dim() const = 0;
  virtual std::optional<Vector> ratios(const Vector& x, const Vector& v, double t) const = 0;
};

// r == value everywhere (1 for a stationary start).
class ConstantReference : public ReferenceRatio {
 public:
  ConstantReference(int dim, double value) : dim_(dim), value_(value) {}
  int dim() const override { return dim_; }
  std::optional<Vector> ratios(const Vector&, const Vector&, double) const override {
    return Vector::Constant(dim_, value_);
  }

 private:
  int dim_;
  double value_;
};

struct RatioOracleConfig {
  double x_min = -4.0;
  double x_max = 4.0;
  int x_bins = 40;
  // Forward times at which trajectories are binned; empty means 51 evenly
  // spaced times on [0, T_f].
  std::vector<double> times;
  std::size_t n_draws = 100000;
  std::size_t min_count = 20;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Histogram estimate of the one-dimensional ZZP ratio from forward
// occupancy counts. Queries snap to the nearest grid time.
class RatioOracle : public ReferenceRatio {
 public:
  RatioOracle(RatioOracleConfig cfg, std::vector<std::size_t> plus,
              std::vector<std::size_t> minus);

  int dim() const override { return 1; }
  std::optional<Vector> ratios(const Vector& x, const Vector& v, double t) const override;

  // r(x, v, t) for the cell (time index, x bin); nullopt when either count is
  // below min_count.
  std::optional<double> cell_ratio(std::size_t time_index, int x_bin, double v) const;
  std::size_t count(std::size_t time_index, int x_bin, double v) const;

  // -1 outside [x_min, x_max).
  int x_bin(double x) const;
  double bin_center(int bin) const;
  std::size_t time_index(double t) const;

  std::size_t cells() const { return plus_.size(); }
  std::size_t unavailable_cells() const;
  const RatioOracleConfig& config() const { return cfg_; }

 private:
  std::size_t cell(std::size_t time_index, int x_bin) const;

  RatioOracleConfig cfg_;
  std::vector<std::size_t> plus_;   // counts with v = +1
  std::vector<std::size_t> minus_;  // counts with v = -1
};

// Simulates cfg.n_draws forward ZZP trajectories with x0 drawn from the rows
// of `initial` (n x 1) and v0 uniform on {-1, +1}.
RatioOracle build_ratio_oracle(const ProcessSpec& spec, const Matrix& initial,
                               RatioOracleConfig cfg);

}  // namespace pdgm
