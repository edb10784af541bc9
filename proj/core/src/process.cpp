#include "pdgm/process.hpp"

#include <algorithm>
#include <cmath>

#include "pdgm/types.hpp"

namespace pdgm {

std::string to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::ZigZag: return "zzp";
    case ProcessKind::Bouncy: return "bps";
    case ProcessKind::RandomizedHmc: return "rhmc";
  }
  return "?";
}

std::string to_string(Potential potential) {
  return potential == Potential::StandardGaussian ? "gaussian" : "zero";
}

ProcessKind parse_process_kind(std::string_view name) {
  if (name == "zzp") return ProcessKind::ZigZag;
  if (name == "bps") return ProcessKind::Bouncy;
  if (name == "rhmc") return ProcessKind::RandomizedHmc;
  throw InvalidArgument("unknown process '" + std::string(name) +
                        "' (expected zzp|bps|rhmc)");
}

Potential parse_potential(std::string_view name) {
  if (name == "gaussian") return Potential::StandardGaussian;
  if (name == "zero") return Potential::Zero;
  throw InvalidArgument("unknown potential '" + std::string(name) +
                        "' (expected gaussian|zero)");
}

NoiseSchedule::NoiseSchedule() : NoiseSchedule({{0.0, 1.0}}) {}

NoiseSchedule::NoiseSchedule(std::vector<Piece> pieces)
    : pieces_(std::move(pieces)) {
  if (pieces_.empty() || pieces_.front().start != 0.0) {
    throw InvalidArgument("noise schedule must start at t = 0");
  }
  clock_at_start_.resize(pieces_.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < pieces_.size(); ++k) {
    if (!(pieces_[k].value > 0.0) || !std::isfinite(pieces_[k].value)) {
      throw InvalidArgument("noise schedule values must be positive");
    }
    if (k > 0) {
      if (!(pieces_[k].start > pieces_[k - 1].start)) {
        throw InvalidArgument("noise schedule breakpoints must increase");
      }
      acc += pieces_[k - 1].value * (pieces_[k].start - pieces_[k - 1].start);
    }
    clock_at_start_[k] = acc;
  }
}

double NoiseSchedule::at(double t) const {
  auto it = std::upper_bound(
      pieces_.begin(), pieces_.end(), t,
      [](double value, const Piece& p) { return value < p.start; });
  return it == pieces_.begin() ? pieces_.front().value : std::prev(it)->value;
}

double NoiseSchedule::clock(double t) const {
  if (t <= 0.0) return pieces_.front().value * t;
  auto it = std::upper_bound(
      pieces_.begin(), pieces_.end(), t,
      [](double value, const Piece& p) { return value < p.start; });
  const auto k = static_cast<std::size_t>(std::prev(it) - pieces_.begin());
  return clock_at_start_[k] + pieces_[k].value * (t - pieces_[k].start);
}

double NoiseSchedule::inverse_clock(double tau) const {
  if (tau <= 0.0) return tau / pieces_.front().value;
  auto it = std::upper_bound(clock_at_start_.begin(), clock_at_start_.end(),
                             tau);
  const auto k = static_cast<std::size_t>(std::prev(it) - clock_at_start_.begin());
  return pieces_[k].start + (tau - clock_at_start_[k]) / pieces_[k].value;
}

bool NoiseSchedule::is_unit() const {
  return pieces_.size() == 1 && pieces_.front().value == 1.0;
}

void ProcessSpec::validate() const {
  if (dim < 1) throw InvalidArgument("dimension must be >= 1");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw InvalidArgument("time horizon must be positive");
  }
  if (!(refresh_rate >= 0.0) || !std::isfinite(refresh_rate)) {
    throw InvalidArgument("refresh rate must be nonnegative");
  }
  if (kind != ProcessKind::ZigZag && refresh_rate == 0.0 &&
      !allow_zero_refresh) {
    throw InvalidArgument(to_string(kind) +
                          " requires a strictly positive refresh rate");
  }
}

}  // namespace pdgm
