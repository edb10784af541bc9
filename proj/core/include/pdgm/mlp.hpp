#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pdgm/rng.hpp"
#include "pdgm/types.hpp"

namespace pdgm {

class NonFiniteLoss : public Error {
 public:
  using Error::Error;
};

enum class HeadKind { Linear, Softplus };

struct MlpArch {
  int in_dim = 1;
  int out_dim = 1;
  int hidden_width = 128;
  int n_blocks = 4;
  int time_embed_dim = 32;  // must be even
  HeadKind head = HeadKind::Linear;
  double softplus_beta = 1.0;
  // Inputs to forward() carry t in [0, time_horizon]; the network sees t / T_f.
  double time_horizon = 1.0;

  void validate() const;
  bool operator==(const MlpArch&) const = default;
};

std::size_t parameter_count(const MlpArch& arch);

// Activations kept from a batched forward pass, consumed by backward().
struct MlpCache {
  Matrix input;       // in x B
  Matrix time_feat;   // E x B  sinusoidal features
  Matrix time_pre;    // E x B
  Matrix time_act;    // E x B
  Matrix time_embed;  // E x B
  std::vector<Matrix> block_in;   // W x B per block
  std::vector<Matrix> block_pre;  // W x B per block
  std::vector<Matrix> block_act;  // W x B per block
  Matrix last_hidden;  // W x B
  Matrix out_pre;      // out x B (before the head)
};

// Time-conditioned residual MLP.
//
//   tau    = t / T_f
//   phi    = [sin(f_k tau), cos(f_k tau)], f_k log-spaced on [1, 1000]
//   e      = W_t2 silu(W_t1 phi + b_t1) + b_t2
//   h_0    = W_in u + b_in
//   h_k+1  = h_k + W_2 silu(W_1 h_k + b_1 + W_e e) + b_2     (per block)
//   y      = head(W_out silu(h_L) + b_out)
//
// Parameters live in one flat vector; the layout is fixed by the
// architecture and shared by the checkpoint format.
class Mlp {
 public:
  Mlp() = default;
  Mlp(MlpArch arch, Vector theta);

  // Uniform(+-1/sqrt(fan_in)) dense layers; each block's output layer starts
  // at zero so every block is the identity at initialization.
  static Mlp initialize(const MlpArch& arch, Rng& rng);
  static Mlp zeros(const MlpArch& arch);

  const MlpArch& arch() const { return arch_; }
  const Vector& theta() const { return theta_; }
  Vector& theta() { return theta_; }
  std::size_t size() const { return static_cast<std::size_t>(theta_.size()); }

  // Columns are samples: inputs is in_dim x B, t has B entries.
  Matrix forward(const Matrix& inputs, const Vector& t) const;
  Matrix forward(const Matrix& inputs, const Vector& t, MlpCache& cache) const;
  Vector forward_one(const Vector& input, double t) const;

  // Accumulates d loss / d theta into grad given d loss / d output.
  void backward(const MlpCache& cache, const Matrix& grad_output,
                Vector& grad) const;

 private:
  struct Layout;
  MlpArch arch_;
  Vector theta_;
};

double silu(double z);
double softplus(double z, double beta);

}  // namespace pdgm
