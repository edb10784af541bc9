#include "pdgm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pdgm/rng.hpp"

namespace pdgm {

State flow_linear(const Vector& x, const Vector& v, double s) {
  return {x + s * v, v};
}

State flow_hamiltonian(const Vector& x, const Vector& v, double s) {
  const double c = std::cos(s);
  const double sn = std::sin(s);
  return {c * x + sn * v, -sn * x + c * v};
}

State flow(const ProcessSpec& spec, const Vector& x, const Vector& v,
           double s) {
  return spec.hamiltonian_flow() ? flow_hamiltonian(x, v, s)
                                 : flow_linear(x, v, s);
}

Vector potential_gradient(Potential potential, const Vector& x) {
  return potential == Potential::StandardGaussian ? x
                                                  : Vector::Zero(x.size());
}

double zzp_rate(const Vector& x, const Vector& v, std::size_t i,
                const ProcessSpec& spec) {
  const auto k = static_cast<Eigen::Index>(i);
  const double grad =
      spec.potential == Potential::StandardGaussian ? x[k] : 0.0;
  return std::max(0.0, v[k] * grad) + spec.refresh_rate;
}

double zzp_rate(const Vector& x, const Vector& v, std::size_t i,
                const ProcessSpec& spec, double t) {
  return spec.schedule.at(t) * zzp_rate(x, v, i, spec);
}

double bps_reflection_rate(const Vector& x, const Vector& v,
                           Potential potential) {
  if (potential == Potential::Zero) return 0.0;
  return std::max(0.0, v.dot(x));
}

Vector zzp_flip(const Vector& v, std::size_t i) {
  Vector out = v;
  out[static_cast<Eigen::Index>(i)] = -out[static_cast<Eigen::Index>(i)];
  return out;
}

Vector bps_reflect(const Vector& x, const Vector& v) {
  const double norm2 = x.squaredNorm();
  if (std::sqrt(norm2) < kDegenerateGradientNorm) {
    throw DegenerateGradient("reflection undefined where the gradient vanishes");
  }
  return v - (2.0 * v.dot(x) / norm2) * x;
}

Vector draw_velocity(const ProcessSpec& spec, Rng& rng) {
  Vector v(spec.dim);
  if (spec.kind == ProcessKind::ZigZag) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.rademacher();
  } else {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  }
  return v;
}

void check_state(const ProcessSpec& spec, const State& state) {
  if (state.x.size() != state.v.size() || state.x.size() != spec.dim) {
    throw InvalidState("state dimension mismatch: x has " +
                       std::to_string(state.x.size()) + ", v has " +
                       std::to_string(state.v.size()) + ", spec expects " +
                       std::to_string(spec.dim));
  }
  if (!state.x.allFinite() || !state.v.allFinite()) {
    throw InvalidState("state has non-finite entries");
  }
  if (spec.kind == ProcessKind::ZigZag) {
    for (Eigen::Index i = 0; i < state.v.size(); ++i) {
      if (state.v[i] != 1.0 && state.v[i] != -1.0) {
        throw InvalidState("zig-zag velocity entries must be +1 or -1");
      }
    }
  }
}

}  // namespace pdgm
