#pragma once

#include <cstddef>

#include "pdgm/process.hpp"
#include "pdgm/types.hpp"

namespace pdgm {

// Raised by bps_reflect when the potential gradient vanishes; the caller is
// expected to skip the reflection.
class DegenerateGradient : public Error {
 public:
  using Error::Error;
};

inline constexpr double kDegenerateGradientNorm = 1e-12;

// (x + s v, v).
State flow_linear(const Vector& x, const Vector& v, double s);

// Exact Hamiltonian flow for the standard Gaussian potential:
// x' = x cos s + v sin s, v' = -x sin s + v cos s. Negative s runs backward.
State flow_hamiltonian(const Vector& x, const Vector& v, double s);

// Deterministic motion of the forward process over a duration s of internal
// (schedule-free) time.
State flow(const ProcessSpec& spec, const Vector& x, const Vector& v, double s);

Vector potential_gradient(Potential potential, const Vector& x);

// (v_i d_i psi(x))_+ + lambda_r.
double zzp_rate(const Vector& x, const Vector& v, std::size_t i,
                const ProcessSpec& spec);
// Same, multiplied by beta(t).
double zzp_rate(const Vector& x, const Vector& v, std::size_t i,
                const ProcessSpec& spec, double t);

// <v, grad psi(x)>_+; identically zero for the flat potential.
double bps_reflection_rate(const Vector& x, const Vector& v,
                           Potential potential = Potential::StandardGaussian);

Vector zzp_flip(const Vector& v, std::size_t i);

// v - 2 <v, x> / |x|^2 x (reflection off the level set of the Gaussian
// potential). Throws DegenerateGradient when |x| < kDegenerateGradientNorm.
Vector bps_reflect(const Vector& x, const Vector& v);

// Fresh draw from the velocity law nu: uniform on {-1, +1}^d for ZZP,
// standard normal otherwise.
class Rng;
Vector draw_velocity(const ProcessSpec& spec, Rng& rng);

// Throws InvalidState for dimension mismatches and for ZZP velocities with
// entries outside {-1, +1}.
void check_state(const ProcessSpec& spec, const State& state);

}  // namespace pdgm
