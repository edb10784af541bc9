#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "pdgm/rng.hpp"
#include "pdgm/types.hpp"

namespace pdgm {

class UnknownDataset : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class DatasetName { Checkerboard, GaussianGrid, OlympicRings, Rose, FractalTree };

std::string to_string(DatasetName name);
DatasetName parse_dataset_name(std::string_view name);
std::vector<std::string> dataset_names();

struct DatasetSpec {
  DatasetName name = DatasetName::Checkerboard;
  std::size_t n = 1;
  std::uint64_t seed = 0;
  // Center each coordinate and divide both by the larger coordinate's
  // standard deviation.
  bool normalize = true;
};

// Shape parameters of the toy distributions.
struct ShapeConstants {
  // checkerboard: 4 x 4 cells on [-2, 2]^2, (i + j) even cells are active
  static constexpr int kCheckerCells = 4;
  static constexpr double kCheckerLow = -2.0;

  static constexpr double kGridSpacing = 1.5;
  static constexpr double kGridStd = 0.08;

  static constexpr std::array<std::array<double, 2>, 5> kRingCenters{
      {{-2.2, 0.5}, {0.0, 0.5}, {2.2, 0.5}, {-1.1, -0.5}, {1.1, -0.5}}};
  static constexpr double kRingRadius = 1.0;
  static constexpr double kRingNoise = 0.05;

  static constexpr double kRoseNoise = 0.02;

  static constexpr int kTreeDepth = 7;
  static constexpr double kTreeAngle = 0.6283185307179586;  // pi / 5
  static constexpr double kTreeDecay = 0.7;
  static constexpr double kTreeTrunk = 1.0;
  static constexpr double kTreeNoise = 0.01;
};

// Component weights of the Gaussian grid in row-major cell order (top-left
// is (-1.5, -1.5), then increasing x).
const std::array<double, 9>& gaussian_grid_weights();
std::array<double, 2> gaussian_grid_mean(std::size_t component);

// n x 2 matrix of i.i.d. samples; deterministic given the seed.
Matrix generate(const DatasetSpec& spec);
Matrix generate(const DatasetSpec& spec, Rng& rng);

// In-place centering/rescaling; returns (mean, scale) so callers can undo it.
std::pair<Vector, double> normalize_samples(Matrix& samples);

// CSV with header x0,..,x{d-1}; 17 significant digits per value.
void save_csv(const std::string& path, const Matrix& samples,
              const std::string& prefix = "x");
void write_csv(std::ostream& out, const Matrix& samples,
               const std::vector<std::string>& header);
Matrix load_csv(const std::string& path);

}  // namespace pdgm
