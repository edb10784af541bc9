#pragma once

#include "pdgm/types.hpp"

namespace pdgm {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  Vector m;
  Vector v;
  long step = 0;

  AdamState() = default;
  explicit AdamState(Eigen::Index n, AdamConfig cfg = {})
      : config(cfg), m(Vector::Zero(n)), v(Vector::Zero(n)) {}
};

// Bias-corrected adaptive-moment update of params in place.
void adam_step(AdamState& state, Vector& params, const Vector& gradient,
               double lr);

}  // namespace pdgm
