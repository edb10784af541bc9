#pragma once

#include <cmath>

#include "pdgm/forward.hpp"

namespace pdgm::testing {

// int_0^tau ((-v x0 - u)_+ + lambda) du for a flip-free zig-zag segment of
// one coordinate, where -v x(u) = -v x0 - u.
inline double segment_integral(double a, double tau, double lambda) {
  const double pos = a <= 0.0 ? 0.0 : (a >= tau ? a * tau - 0.5 * tau * tau : 0.5 * a * a);
  return pos + lambda * tau;
}

// 2 (1 - exp(-2 eps int sum_i lambda_i(X_t, R_i V_t) dt)) on one exact path.
inline double exact_path_value(const Trajectory& path, double eps, double lambda) {
  const int d = static_cast<int>(path.initial.x.size());
  double integral = 0.0, t = 0.0;
  State s = path.initial;
  auto add = [&](double until) {
    for (int i = 0; i < d; ++i) integral += segment_integral(-s.v[i] * s.x[i], until - t, lambda);
  };
  for (const auto& ev : path.events) {
    add(ev.time);
    t = ev.time;
    s = ev.state_after;
  }
  add(path.end_time);
  return 2.0 * -std::expm1(-2.0 * eps * integral);
}

}  // namespace pdgm::testing
