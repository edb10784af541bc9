#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "pdgm/datasets.hpp"

using namespace pdgm;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("pdgm_unit_" + name)).string();
}

}  // namespace

TEST_CASE("dataset names") {
  CHECK(dataset_names().size() == 5);
  for (const auto& n : dataset_names()) CHECK(to_string(parse_dataset_name(n)) == n);
  CHECK_THROWS_AS(parse_dataset_name("moons"), UnknownDataset);
}

TEST_CASE("checkerboard points lie in active cells") {
  const Matrix s = generate({DatasetName::Checkerboard, 100000, 3, false});
  bool ok = true;
  for (Eigen::Index k = 0; k < s.rows(); ++k) {
    const double x = s(k, 0), y = s(k, 1);
    ok &= x >= -2.0 && x < 2.0 && y >= -2.0 && y < 2.0;
    const int i = static_cast<int>(std::floor(x + 2.0)), j = static_cast<int>(std::floor(y + 2.0));
    ok &= (i + j) % 2 == 0;
  }
  CHECK(ok);
}

TEST_CASE("gaussian grid component frequencies") {
  const std::size_t n = 1000000;
  const Matrix s = generate({DatasetName::GaussianGrid, n, 8, false});
  const double w[9] = {.02, .02, .05, .05, .1, .1, .15, .2, .3};
  std::array<double, 9> counts{};
  for (Eigen::Index k = 0; k < s.rows(); ++k) {
    // Component std is 0.08 against spacing 1.5, so the nearest mean is the component.
    const int col = static_cast<int>(std::lround(s(k, 0) / 1.5)) + 1;
    const int row = static_cast<int>(std::lround(s(k, 1) / 1.5)) + 1;
    REQUIRE(col >= 0);
    REQUIRE(col <= 2);
    REQUIRE(row >= 0);
    REQUIRE(row <= 2);
    counts[static_cast<std::size_t>(row * 3 + col)] += 1.0;
  }
  for (std::size_t c = 0; c < 9; ++c) {
    CHECK(std::abs(counts[c] / n - w[c] / 0.99) < 0.005);
    CHECK(gaussian_grid_weights()[c] == doctest::Approx(w[c] / 0.99));
  }
}

TEST_CASE("generation is deterministic and normalized") {
  for (const auto& name : dataset_names()) {
    const DatasetSpec spec{parse_dataset_name(name), 5000, 11, true};
    const Matrix a = generate(spec), b = generate(spec);
    CHECK(a == b);
    CHECK(a.rows() == 5000);
    CHECK(a.cols() == 2);
    for (int i = 0; i < 2; ++i) CHECK(std::abs(a.col(i).mean()) < 1e-8);
    // The larger coordinate standard deviation is rescaled to 1.
    double max_var = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double m = a.col(i).mean();
      max_var = std::max(max_var, (a.col(i).array() - m).square().mean());
    }
    CHECK(std::abs(max_var - 1.0) < 1e-8);
  }
  CHECK_THROWS_AS(generate({DatasetName::Rose, 0, 1, true}), InvalidArgument);
}

TEST_CASE("csv round trip") {
  const Matrix s = generate({DatasetName::OlympicRings, 257, 2, true});
  const auto path = temp_path("roundtrip.csv");
  save_csv(path, s);
  CHECK(load_csv(path) == s);

  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "x0,x1");

  save_csv(path, Matrix(0, 2));
  CHECK(load_csv(path).rows() == 0);
  fs::remove(path);
}

TEST_CASE("csv errors") {
  const auto path = temp_path("bad.csv");
  {
    std::ofstream out(path);
    out << "x0,x1\n1,2\n3,oops\n";
  }
  try {
    load_csv(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
  fs::remove(path);
  CHECK_THROWS_AS(load_csv(temp_path("missing.csv")), IoError);
}
