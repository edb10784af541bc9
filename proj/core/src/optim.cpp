#include "pdgm/optim.hpp"

#include <cmath>

namespace pdgm {

void adam_step(AdamState& state, Vector& params, const Vector& gradient,
               double lr) {
  if (params.size() != gradient.size()) {
    throw DimensionMismatch("gradient and parameter sizes differ");
  }
  if (state.m.size() != params.size()) state = AdamState(params.size(), state.config);
  const auto& c = state.config;
  ++state.step;
  state.m = c.beta1 * state.m + (1.0 - c.beta1) * gradient;
  state.v = c.beta2 * state.v + (1.0 - c.beta2) * gradient.cwiseAbs2();
  const double m_scale = 1.0 / (1.0 - std::pow(c.beta1, static_cast<double>(state.step)));
  const double v_scale = 1.0 / (1.0 - std::pow(c.beta2, static_cast<double>(state.step)));
  params.array() -= lr * (state.m.array() * m_scale) /
                    ((state.v.array() * v_scale).sqrt() + c.eps);
}

}  // namespace pdgm
