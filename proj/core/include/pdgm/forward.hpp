#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pdgm/process.hpp"
#include "pdgm/rng.hpp"
#include "pdgm/types.hpp"

namespace pdgm {

// Lambda(t) = int_0^t ((a + b u)_+ + c) du.
double integrated_rate(double a, double b, double c, double t);

// Unique t > 0 with Lambda(t) = e, for b >= 0, c >= 0, e > 0. Every forward
// jump rate is of this form along the flow: ZZP coordinate i has a = v_i x_i,
// b = 1; BPS reflection has a = <v, x>, b = |v|^2; refreshment has a = b = 0,
// c = lambda_r. Returns +inf when the rate stays identically zero.
double invert_piecewise_linear_rate(double a, double b, double c, double e);

enum class EventKind { Init, Flip, Reflect, Refresh };

std::string to_string(EventKind kind);

struct EventRecord {
  double time = 0.0;
  EventKind kind = EventKind::Init;
  int coordinate = -1;  // flipped coordinate for EventKind::Flip
  State state_after;
};

struct Trajectory {
  ProcessSpec spec;
  State initial;
  std::vector<EventRecord> events;
  double end_time = 0.0;
  State final_state;
  // Reflections skipped because the gradient vanished at the event position.
  std::size_t skipped_reflections = 0;

  // Replays the flow from the last event at or before t.
  State state_at(double t) const;
};

// Exact event-driven simulation on [0, t_end] using competing exponential
// clocks, each inverted in closed form. A piecewise-constant schedule is
// handled by simulating on the internal clock and mapping event times back.
Trajectory simulate_forward(const ProcessSpec& spec, const State& initial,
                            double t_end, Rng& rng);

// (X_t, V_t) of a fresh forward run from (x0, v0); v0 = nullopt draws the
// initial velocity from nu.
State sample_state_at(const ProcessSpec& spec, const Vector& x0,
                      const std::optional<Vector>& v0, double t, Rng& rng);

// CSV with header t,kind,x0..x{d-1},v0..v{d-1}; the first row is the initial
// state with kind INIT.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);
void write_trajectory_csv(const std::string& path, const Trajectory& trajectory);

// printf %.17g, enough to round-trip any double.
std::string format_double(double value);

}  // namespace pdgm
