#include "pdgm/forward.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "pdgm/dynamics.hpp"

namespace pdgm {

double integrated_rate(double a, double b, double c, double t) {
  if (b > 0.0) {
    if (a >= 0.0) return (a + c) * t + 0.5 * b * t * t;
    const double dead = -a / b;
    if (t <= dead) return c * t;
    const double u = t - dead;
    return c * t + 0.5 * b * u * u;
  }
  return (std::max(a, 0.0) + c) * t;
}

double invert_piecewise_linear_rate(double a, double b, double c, double e) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (b > 0.0) {
    // Roots written as 2e / (p + sqrt(p^2 + 2be)) to avoid cancellation.
    if (a >= 0.0) {
      const double p = a + c;
      return 2.0 * e / (p + std::sqrt(p * p + 2.0 * b * e));
    }
    const double dead = -a / b;
    if (c * dead >= e) return e / c;
    const double rest = e - c * dead;
    return dead + 2.0 * rest / (c + std::sqrt(c * c + 2.0 * b * rest));
  }
  const double rate = std::max(a, 0.0) + c;
  return rate > 0.0 ? e / rate : kInf;
}

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Init: return "INIT";
    case EventKind::Flip: return "FLIP";
    case EventKind::Reflect: return "REFLECT";
    case EventKind::Refresh: return "REFRESH";
  }
  return "?";
}

State Trajectory::state_at(double t) const {
  // Last event with time <= t.
  auto it = std::upper_bound(
      events.begin(), events.end(), t,
      [](double value, const EventRecord& e) { return value < e.time; });
  const State& from = it == events.begin() ? initial : std::prev(it)->state_after;
  const double from_time = it == events.begin() ? 0.0 : std::prev(it)->time;
  const double s = spec.schedule.clock(t) - spec.schedule.clock(from_time);
  return flow(spec, from.x, from.v, s);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct NextEvent {
  double wait = kInf;
  EventKind kind = EventKind::Init;
  int coordinate = -1;
};

NextEvent propose_zzp(const ProcessSpec& spec, const State& s, Rng& rng) {
  NextEvent next;
  const bool gaussian = spec.potential == Potential::StandardGaussian;
  for (Eigen::Index i = 0; i < s.x.size(); ++i) {
    const double a = gaussian ? s.v[i] * s.x[i] : 0.0;
    const double b = gaussian ? 1.0 : 0.0;
    const double wait =
        invert_piecewise_linear_rate(a, b, spec.refresh_rate, rng.exponential());
    if (wait < next.wait) next = {wait, EventKind::Flip, static_cast<int>(i)};
  }
  return next;
}

NextEvent propose_bps(const ProcessSpec& spec, const State& s, Rng& rng) {
  NextEvent next;
  if (spec.potential == Potential::StandardGaussian) {
    const double wait = invert_piecewise_linear_rate(
        s.v.dot(s.x), s.v.squaredNorm(), 0.0, rng.exponential());
    next = {wait, EventKind::Reflect, -1};
  }
  if (spec.refresh_rate > 0.0) {
    const double wait = rng.exponential() / spec.refresh_rate;
    if (wait < next.wait) next = {wait, EventKind::Refresh, -1};
  }
  return next;
}

NextEvent propose_rhmc(const ProcessSpec& spec, Rng& rng) {
  NextEvent next;
  if (spec.refresh_rate > 0.0) {
    next = {rng.exponential() / spec.refresh_rate, EventKind::Refresh, -1};
  }
  return next;
}

}  // namespace

Trajectory simulate_forward(const ProcessSpec& spec, const State& initial,
                            double t_end, Rng& rng) {
  spec.validate();
  check_state(spec, initial);
  if (!(t_end >= 0.0) || t_end > spec.horizon * (1.0 + 1e-12)) {
    throw InvalidArgument("simulation end time must lie in [0, T_f]");
  }

  Trajectory traj;
  traj.spec = spec;
  traj.initial = initial;
  traj.end_time = t_end;

  const double clock_end = spec.schedule.clock(t_end);
  double clock = 0.0;
  State state = initial;

  while (true) {
    NextEvent next;
    switch (spec.kind) {
      case ProcessKind::ZigZag: next = propose_zzp(spec, state, rng); break;
      case ProcessKind::Bouncy: next = propose_bps(spec, state, rng); break;
      case ProcessKind::RandomizedHmc: next = propose_rhmc(spec, rng); break;
    }
    if (!(clock + next.wait < clock_end)) {
      state = flow(spec, state.x, state.v, clock_end - clock);
      break;
    }
    clock += next.wait;
    state = flow(spec, state.x, state.v, next.wait);

    switch (next.kind) {
      case EventKind::Flip:
        state.v[next.coordinate] = -state.v[next.coordinate];
        break;
      case EventKind::Reflect:
        if (state.x.norm() < kDegenerateGradientNorm) {
          ++traj.skipped_reflections;
          continue;
        }
        state.v = bps_reflect(state.x, state.v);
        break;
      case EventKind::Refresh:
        state.v = draw_velocity(spec, rng);
        break;
      case EventKind::Init:
        break;
    }
    const double time = std::min(spec.schedule.inverse_clock(clock), t_end);
    traj.events.push_back({time, next.kind, next.coordinate, state});
  }
  traj.final_state = std::move(state);
  return traj;
}

State sample_state_at(const ProcessSpec& spec, const Vector& x0,
                      const std::optional<Vector>& v0, double t, Rng& rng) {
  State initial{x0, v0 ? *v0 : draw_velocity(spec, rng)};
  return simulate_forward(spec, initial, t, rng).final_state;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  const auto d = trajectory.initial.x.size();
  out << "t,kind";
  for (Eigen::Index i = 0; i < d; ++i) out << ",x" << i;
  for (Eigen::Index i = 0; i < d; ++i) out << ",v" << i;
  out << '\n';
  auto row = [&](double t, const std::string& kind, const State& s) {
    out << format_double(t) << ',' << kind;
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << format_double(s.x[i]);
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << format_double(s.v[i]);
    out << '\n';
  };
  row(0.0, "INIT", trajectory.initial);
  for (const auto& e : trajectory.events) {
    std::string kind = to_string(e.kind);
    if (e.kind == EventKind::Flip) kind += std::to_string(e.coordinate);
    row(e.time, kind, e.state_after);
  }
}

void write_trajectory_csv(const std::string& path,
                          const Trajectory& trajectory) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_trajectory_csv(out, trajectory);
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace pdgm
