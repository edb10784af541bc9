#pragma once

#include <cstddef>
#include <cstdint>

#include "pdgm/oracle.hpp"
#include "pdgm/process.hpp"
#include "pdgm/ratio_zzp.hpp"
#include "pdgm/types.hpp"

namespace pdgm {

class OracleGap : public Error {
 public:
  using Error::Error;
};

struct BoundConfig {
  std::size_t n_paths = 1000;
  int nodes = 200;  // trapezoid nodes on [0, T_f]
  std::uint64_t seed = 0;
  int threads = 1;
  double max_unavailable = 0.2;
};

struct BoundResult {
  double bound_mc = 0.0;  // Monte Carlo mean of 2 (1 - exp(-int g))
  double m_hat = 0.0;     // max over nodes and coordinates of E|r_i - s_i| lambda_i
  std::size_t evaluations = 0;
  std::size_t unavailable = 0;
};

// Integrates g = 2 sum_i |r_i - s_i| lambda_i(x, R_i v) along forward ZZP paths
// started from rows of `initial` with v0 ~ nu. Points where the reference has
// no estimate contribute zero; throws OracleGap when their share exceeds
// cfg.max_unavailable.
BoundResult zzp_g_integral(const RatioEstimator& model, const ReferenceRatio& reference,
                           const ProcessSpec& spec, const Matrix& initial,
                           const BoundConfig& cfg);

// C exp(-gamma T_f) + 4 M T_f d
double tv_bound_zzp(double c, double gamma, double horizon, double m, int d);

}  // namespace pdgm
