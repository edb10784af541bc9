#include "pdgm/datasets.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "pdgm/forward.hpp"

namespace pdgm {

namespace {

using C = ShapeConstants;

struct Segment {
  double x0, y0, x1, y1, length;
};

std::vector<Segment> build_tree() {
  std::vector<Segment> out;
  struct Node {
    double x, y, angle, length;
    int depth;
  };
  std::vector<Node> stack{{0.0, 0.0, std::numbers::pi / 2, C::kTreeTrunk, 0}};
  while (!stack.empty()) {
    const Node n = stack.back();
    stack.pop_back();
    const double x1 = n.x + n.length * std::cos(n.angle);
    const double y1 = n.y + n.length * std::sin(n.angle);
    out.push_back({n.x, n.y, x1, y1, n.length});
    if (n.depth + 1 < C::kTreeDepth) {
      const double child = n.length * C::kTreeDecay;
      stack.push_back({x1, y1, n.angle - C::kTreeAngle, child, n.depth + 1});
      stack.push_back({x1, y1, n.angle + C::kTreeAngle, child, n.depth + 1});
    }
  }
  return out;
}

std::size_t pick(const double* cumulative, std::size_t n, double u) {
  std::size_t k = 0;
  while (k + 1 < n && u >= cumulative[k]) ++k;
  return k;
}

}  // namespace

std::string to_string(DatasetName name) {
  switch (name) {
    case DatasetName::Checkerboard: return "checkerboard";
    case DatasetName::GaussianGrid: return "gaussian_grid";
    case DatasetName::OlympicRings: return "olympic_rings";
    case DatasetName::Rose: return "rose";
    case DatasetName::FractalTree: return "fractal_tree";
  }
  return "?";
}

std::vector<std::string> dataset_names() {
  return {"checkerboard", "gaussian_grid", "olympic_rings", "rose",
          "fractal_tree"};
}

DatasetName parse_dataset_name(std::string_view name) {
  for (auto d : {DatasetName::Checkerboard, DatasetName::GaussianGrid,
                 DatasetName::OlympicRings, DatasetName::Rose,
                 DatasetName::FractalTree}) {
    if (to_string(d) == name) return d;
  }
  std::string valid;
  for (const auto& n : dataset_names()) valid += (valid.empty() ? "" : "|") + n;
  throw UnknownDataset("unknown dataset '" + std::string(name) +
                       "' (valid names: " + valid + ")");
}

const std::array<double, 9>& gaussian_grid_weights() {
  // The first listed weight (.01) is dropped; the remaining nine sum to .99.
  static const std::array<double, 9> weights = [] {
    std::array<double, 9> w{.02, .02, .05, .05, .1, .1, .15, .2, .3};
    for (auto& x : w) x /= 0.99;
    return w;
  }();
  return weights;
}

std::array<double, 2> gaussian_grid_mean(std::size_t component) {
  const auto row = static_cast<double>(component / 3);
  const auto col = static_cast<double>(component % 3);
  return {(col - 1.0) * C::kGridSpacing, (row - 1.0) * C::kGridSpacing};
}

Matrix generate(const DatasetSpec& spec) {
  Rng rng(spec.seed);
  return generate(spec, rng);
}

Matrix generate(const DatasetSpec& spec, Rng& rng) {
  if (spec.n < 1) throw InvalidArgument("dataset size must be >= 1");
  const auto n = static_cast<Eigen::Index>(spec.n);
  Matrix out(n, 2);

  switch (spec.name) {
    case DatasetName::Checkerboard: {
      for (Eigen::Index k = 0; k < n; ++k) {
        // 8 active cells: pick row j, then a column i with (i + j) even.
        const int j = static_cast<int>(rng.index(C::kCheckerCells));
        const int i = 2 * static_cast<int>(rng.index(C::kCheckerCells / 2)) + (j % 2);
        out(k, 0) = C::kCheckerLow + i + rng.uniform();
        out(k, 1) = C::kCheckerLow + j + rng.uniform();
      }
      break;
    }
    case DatasetName::GaussianGrid: {
      const auto& w = gaussian_grid_weights();
      std::array<double, 9> cumulative{};
      double acc = 0.0;
      for (std::size_t c = 0; c < 9; ++c) cumulative[c] = (acc += w[c]);
      for (Eigen::Index k = 0; k < n; ++k) {
        const auto c = pick(cumulative.data(), 9, rng.uniform());
        const auto mean = gaussian_grid_mean(c);
        out(k, 0) = mean[0] + C::kGridStd * rng.normal();
        out(k, 1) = mean[1] + C::kGridStd * rng.normal();
      }
      break;
    }
    case DatasetName::OlympicRings: {
      for (Eigen::Index k = 0; k < n; ++k) {
        const auto& c = C::kRingCenters[rng.index(C::kRingCenters.size())];
        const double angle = 2.0 * std::numbers::pi * rng.uniform();
        const double radius = C::kRingRadius + C::kRingNoise * rng.normal();
        out(k, 0) = c[0] + radius * std::cos(angle);
        out(k, 1) = c[1] + radius * std::sin(angle);
      }
      break;
    }
    case DatasetName::Rose: {
      for (Eigen::Index k = 0; k < n; ++k) {
        const double theta = 2.0 * std::numbers::pi * rng.uniform();
        const double r = std::abs(std::cos(2.0 * theta));
        out(k, 0) = r * std::cos(theta) + C::kRoseNoise * rng.normal();
        out(k, 1) = r * std::sin(theta) + C::kRoseNoise * rng.normal();
      }
      break;
    }
    case DatasetName::FractalTree: {
      static const std::vector<Segment> tree = build_tree();
      std::vector<double> cumulative(tree.size());
      double total = 0.0;
      for (const auto& s : tree) total += s.length;
      double acc = 0.0;
      for (std::size_t s = 0; s < tree.size(); ++s) {
        cumulative[s] = (acc += tree[s].length) / total;
      }
      for (Eigen::Index k = 0; k < n; ++k) {
        const auto& s = tree[pick(cumulative.data(), tree.size(), rng.uniform())];
        const double u = rng.uniform();
        out(k, 0) = s.x0 + u * (s.x1 - s.x0) + C::kTreeNoise * rng.normal();
        out(k, 1) = s.y0 + u * (s.y1 - s.y0) + C::kTreeNoise * rng.normal();
      }
      break;
    }
  }

  if (spec.normalize) normalize_samples(out);
  return out;
}

std::pair<Vector, double> normalize_samples(Matrix& samples) {
  const Vector mean = samples.colwise().mean().transpose();
  samples.rowwise() -= mean.transpose();
  const double n = static_cast<double>(samples.rows());
  const Vector var = samples.colwise().squaredNorm().transpose() / n;
  const double scale = std::sqrt(var.maxCoeff());
  if (scale > 0.0) samples /= scale;
  return {mean, scale};
}

void write_csv(std::ostream& out, const Matrix& samples,
               const std::vector<std::string>& header) {
  for (std::size_t j = 0; j < header.size(); ++j) {
    out << (j ? "," : "") << header[j];
  }
  out << '\n';
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    for (Eigen::Index j = 0; j < samples.cols(); ++j) {
      out << (j ? "," : "") << format_double(samples(i, j));
    }
    out << '\n';
  }
}

void save_csv(const std::string& path, const Matrix& samples,
              const std::string& prefix) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  std::vector<std::string> header;
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    header.push_back(prefix + std::to_string(j));
  }
  write_csv(out, samples, header);
  if (!out) throw IoError("write failed for '" + path + "'");
}

Matrix load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(path + ":1: missing header", 1);
  }
  const auto cols = static_cast<Eigen::Index>(
      std::count(line.begin(), line.end(), ',') + 1);

  std::vector<double> values;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* p = line.c_str();
    for (Eigen::Index j = 0; j < cols; ++j) {
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(p, &end);
      const bool last = j + 1 == cols;
      if (end == p || errno == ERANGE || (last ? *end != '\0' : *end != ',')) {
        throw ParseError(path + ":" + std::to_string(line_no) +
                             ": malformed row (expected " +
                             std::to_string(cols) + " numeric fields)",
                         line_no);
      }
      values.push_back(v);
      p = end + (last ? 0 : 1);
    }
  }
  const auto rows = static_cast<Eigen::Index>(values.size()) / cols;
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = values[i * cols + j];
  }
  return out;
}

}  // namespace pdgm
