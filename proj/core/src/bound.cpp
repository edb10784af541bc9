#include "pdgm/bound.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "pdgm/dynamics.hpp"
#include "pdgm/forward.hpp"
#include "pdgm/parallel.hpp"
#include "pdgm/rng.hpp"

namespace pdgm {

BoundResult zzp_g_integral(const RatioEstimator& model, const ReferenceRatio& reference,
                           const ProcessSpec& spec, const Matrix& initial,
                           const BoundConfig& cfg) {
  spec.validate();
  if (spec.kind != ProcessKind::ZigZag) throw InvalidArgument("the g integral is for ZZP");
  const int d = spec.dim;
  if (model.dim() != d || reference.dim() != d || initial.cols() != d) {
    throw DimensionMismatch("model, reference and initial points must match the process");
  }
  if (initial.rows() == 0 || cfg.n_paths == 0) throw InvalidArgument("no paths to integrate");
  if (cfg.nodes < 2) throw InvalidArgument("need at least two quadrature nodes");

  const auto paths = static_cast<Eigen::Index>(cfg.n_paths);
  const int nodes = cfg.nodes;
  const double h = spec.horizon / (nodes - 1);

  // States at every node: node-major blocks of d x paths.
  std::vector<Matrix> xs(nodes, Matrix(d, paths)), vs(nodes, Matrix(d, paths));
  parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t p) {
    Rng rng = Rng::stream(cfg.seed, p, 0x626e64);
    const auto row = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(initial.rows())));
    const State s0{initial.row(row).transpose(), draw_velocity(spec, rng)};
    const Trajectory path = simulate_forward(spec, s0, spec.horizon, rng);
    for (int k = 0; k < nodes; ++k) {
      const State s = path.state_at(k * h);
      xs[k].col(static_cast<Eigen::Index>(p)) = s.x;
      vs[k].col(static_cast<Eigen::Index>(p)) = s.v;
    }
  });

  // g at each node and path; per-node coordinate means of |r - s| lambda.
  Matrix g = Matrix::Zero(nodes, paths);
  BoundResult out;
  std::vector<std::size_t> missing(nodes, 0);
  for (int k = 0; k < nodes; ++k) {
    const double t = k * h;
    const Matrix s = model.ratios(xs[k], vs[k], Vector::Constant(paths, t));
    Vector term_sum = Vector::Zero(d);
    std::size_t avail = 0;
    for (Eigen::Index p = 0; p < paths; ++p) {
      const Vector x = xs[k].col(p), v = vs[k].col(p);
      const auto r = reference.ratios(x, v, t);
      if (!r) {
        ++missing[k];
        continue;
      }
      ++avail;
      double gk = 0.0;
      for (int i = 0; i < d; ++i) {
        const double lam = zzp_rate(x, zzp_flip(v, i), i, spec, t);
        const double term = std::abs((*r)[i] - s(i, p)) * lam;
        term_sum[i] += term;
        gk += 2.0 * term;
      }
      g(k, p) = gk;
    }
    if (avail > 0) out.m_hat = std::max(out.m_hat, term_sum.maxCoeff() / static_cast<double>(avail));
  }
  for (auto m : missing) out.unavailable += m;
  out.evaluations = static_cast<std::size_t>(nodes) * cfg.n_paths;
  if (static_cast<double>(out.unavailable) >
      cfg.max_unavailable * static_cast<double>(out.evaluations)) {
    throw OracleGap(std::to_string(out.unavailable) + " of " +
                    std::to_string(out.evaluations) +
                    " path-time evaluations fall on unavailable reference cells");
  }

  double total = 0.0;
  for (Eigen::Index p = 0; p < paths; ++p) {
    double integral = 0.0;
    for (int k = 0; k + 1 < nodes; ++k) integral += 0.5 * h * (g(k, p) + g(k + 1, p));
    total += 2.0 * -std::expm1(-integral);
  }
  out.bound_mc = total / static_cast<double>(paths);
  return out;
}

double tv_bound_zzp(double c, double gamma, double horizon, double m, int d) {
  if (c < 0.0 || !(gamma > 0.0) || !(horizon > 0.0) || m < 0.0 || d < 1) {
    throw InvalidArgument("bound needs C >= 0, gamma > 0, T_f > 0, M >= 0, d >= 1");
  }
  return c * std::exp(-gamma * horizon) + 4.0 * m * horizon * d;
}

}  // namespace pdgm
