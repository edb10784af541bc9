#include <doctest.h>

#include "pdgm/process.hpp"
#include "pdgm/rng.hpp"
#include "pdgm/types.hpp"

using namespace pdgm;

TEST_CASE("process names round trip") {
  for (auto k : {ProcessKind::ZigZag, ProcessKind::Bouncy, ProcessKind::RandomizedHmc}) {
    CHECK(parse_process_kind(to_string(k)) == k);
  }
  CHECK(parse_potential("gaussian") == Potential::StandardGaussian);
  CHECK(parse_potential("zero") == Potential::Zero);
  CHECK_THROWS_AS(parse_process_kind("hmc"), InvalidArgument);
  CHECK_THROWS_AS(parse_potential("quartic"), InvalidArgument);
}

TEST_CASE("spec validation") {
  ProcessSpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.kind = ProcessKind::Bouncy;
  spec.refresh_rate = 0.0;
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  spec.allow_zero_refresh = true;
  CHECK_NOTHROW(spec.validate());
  spec = ProcessSpec{};
  spec.refresh_rate = 0.0;  // ZZP may run without refreshment
  CHECK_NOTHROW(spec.validate());
  spec.dim = 0;
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  spec.dim = 2;
  spec.horizon = -1.0;
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
}

TEST_CASE("hamiltonian flow only for rhmc with gaussian potential") {
  ProcessSpec spec;
  spec.kind = ProcessKind::RandomizedHmc;
  CHECK(spec.hamiltonian_flow());
  spec.potential = Potential::Zero;
  CHECK_FALSE(spec.hamiltonian_flow());
  spec.kind = ProcessKind::Bouncy;
  spec.potential = Potential::StandardGaussian;
  CHECK_FALSE(spec.hamiltonian_flow());
}

TEST_CASE("noise schedule") {
  const NoiseSchedule unit;
  CHECK(unit.is_unit());
  CHECK(unit.clock(3.0) == 3.0);

  const NoiseSchedule s({{0.0, 1.0}, {1.0, 2.0}, {3.0, 0.5}});
  CHECK_FALSE(s.is_unit());
  CHECK(s.at(0.5) == 1.0);
  CHECK(s.at(1.0) == 2.0);
  CHECK(s.at(10.0) == 0.5);
  CHECK(s.clock(1.0) == doctest::Approx(1.0));
  CHECK(s.clock(2.0) == doctest::Approx(3.0));
  CHECK(s.clock(5.0) == doctest::Approx(6.0));
  for (double t : {0.0, 0.3, 1.0, 2.7, 3.0, 4.2, 9.0}) {
    CHECK(s.inverse_clock(s.clock(t)) == doctest::Approx(t).epsilon(1e-14));
  }

  using P = NoiseSchedule::Piece;
  CHECK_THROWS_AS(NoiseSchedule({P{0.5, 1.0}}), InvalidArgument);
  CHECK_THROWS_AS(NoiseSchedule({P{0.0, 1.0}, P{0.0, 2.0}}), InvalidArgument);
  CHECK_THROWS_AS(NoiseSchedule({P{0.0, 0.0}}), InvalidArgument);
  CHECK_THROWS_AS(NoiseSchedule(std::vector<P>{}), InvalidArgument);
}

TEST_CASE("rng streams are reproducible and distinct") {
  Rng a = Rng::stream(7, 3, 1), b = Rng::stream(7, 3, 1), c = Rng::stream(7, 4, 1);
  bool differs = false;
  for (int i = 0; i < 16; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    differs |= x != c.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK(differs);

  Rng r(1);
  int plus = 0;
  for (int i = 0; i < 10000; ++i) {
    const double s = r.rademacher();
    CHECK((s == 1.0 || s == -1.0));
    plus += s > 0;
  }
  CHECK(plus > 4800);
  CHECK(plus < 5200);
}
