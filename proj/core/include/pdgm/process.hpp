#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pdgm {

enum class ProcessKind { ZigZag, Bouncy, RandomizedHmc };
enum class Potential { StandardGaussian, Zero };

std::string to_string(ProcessKind kind);
std::string to_string(Potential potential);
ProcessKind parse_process_kind(std::string_view name);  // "zzp" | "bps" | "rhmc"
Potential parse_potential(std::string_view name);       // "gaussian" | "zero"

// Piecewise-constant noise schedule beta(t). The time-changed process runs on
// the internal clock tau(t) = int_0^t beta(s) ds, which leaves the stationary
// law unchanged while scaling both the flow and the jump rates by beta(t).
class NoiseSchedule {
 public:
  struct Piece {
    double start;
    double value;
  };

  NoiseSchedule();  // beta == 1
  explicit NoiseSchedule(std::vector<Piece> pieces);

  double at(double t) const;
  double clock(double t) const;
  double inverse_clock(double tau) const;
  bool is_unit() const;

  const std::vector<Piece>& pieces() const { return pieces_; }

 private:
  std::vector<Piece> pieces_;
  std::vector<double> clock_at_start_;
};

struct ProcessSpec {
  ProcessKind kind = ProcessKind::ZigZag;
  Potential potential = Potential::StandardGaussian;
  double refresh_rate = 1.0;
  double horizon = 5.0;
  NoiseSchedule schedule;
  int dim = 2;
  // Permits refresh_rate == 0 for BPS/RHMC. Only meaningful in tests, where a
  // refreshment-free process isolates the deterministic dynamics.
  bool allow_zero_refresh = false;

  // Throws InvalidArgument when an invariant is violated.
  void validate() const;
  bool hamiltonian_flow() const {
    return kind == ProcessKind::RandomizedHmc &&
           potential == Potential::StandardGaussian;
  }
};

}  // namespace pdgm
