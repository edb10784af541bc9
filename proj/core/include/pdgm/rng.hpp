#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace pdgm {

// Seeded random stream. Independent streams are derived from a root seed and
// up to two indices (e.g. training step and sample index), so results never
// depend on how work is split across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  static Rng stream(std::uint64_t seed, std::uint64_t index,
                    std::uint64_t sub = 0);

  double uniform();      // [0, 1)
  double normal();       // N(0, 1)
  double exponential();  // Exp(1)
  double rademacher();   // +1 or -1 with probability 1/2
  std::size_t index(std::size_t n);  // uniform on {0, ..., n-1}

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::exponential_distribution<double> exponential_{1.0};
};

}  // namespace pdgm
