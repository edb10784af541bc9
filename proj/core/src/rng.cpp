#include "pdgm/rng.hpp"

namespace pdgm {

namespace {

std::uint32_t lo(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
std::uint32_t hi(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::seed_seq seq{lo(seed), hi(seed)};
  engine_.seed(seq);
}

Rng Rng::stream(std::uint64_t seed, std::uint64_t index, std::uint64_t sub) {
  Rng rng;
  // The trailing tag keeps derived streams disjoint from Rng(seed).
  std::seed_seq seq{lo(seed), hi(seed), lo(index), hi(index),
                    lo(sub),  hi(sub),  0x9e3779b9u};
  rng.engine_.seed(seq);
  return rng;
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() { return normal_(engine_); }

double Rng::exponential() { return exponential_(engine_); }

double Rng::rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

std::size_t Rng::index(std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

}  // namespace pdgm
