#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "swinit/eventstream.hpp"
#include "swinit/linalg.hpp"

namespace swinit {

struct SpectralConfig {
  Index rank_lo = 50;
  Index rank_hi = 100;
  double tol = 0.1;
  int q = 3;
  std::uint64_t seed = 0;
};

/// Events projected onto a truncated right singular basis: Xt = X * V.
struct SpectralEncoding {
  Matrix Xt;  // N x rank
  Matrix V;   // d x rank
  Index rank = 0;
  double err = 0.0;  // relative spectral residual ||X - X V V^T|| / ||X||
  bool below_tol = true;
  int q = 0;
  std::uint64_t seed = 0;

  /// Projects new rows through the frozen basis.
  Matrix project(const Matrix& X) const;
};

/// Picks the rank by the spectral-error rule, runs the randomized power
/// SVD at that rank and returns the projected events with their basis.
SpectralEncoding spectral_encode(const Matrix& X, const SpectralConfig& cfg);
SpectralEncoding spectral_encode(const EventLog& log, const SpectralConfig& cfg);

void write_encoding(std::ostream& os, const SpectralEncoding& enc);
SpectralEncoding read_encoding(std::istream& is);
void save_encoding(const std::string& path, const SpectralEncoding& enc);
SpectralEncoding load_encoding(const std::string& path);

/// Merged query-key product W1 = W_Q W_K^T and value map W2 = W_V.
struct AttentionWeights {
  Matrix W1;
  Matrix W2;
};

/// Linear (softmax-free) self-attention (X W1 X^T X W2) / n, evaluated as
/// X (W1 (X^T X) W2) / n so no n x n intermediate is formed.
Matrix linear_attention(const Matrix& X, const AttentionWeights& w);

/// Projector distance ||P_A - P_B||_F / sqrt(2) between the column space of
/// the q-pass spectral encoding (plain power scheme, no oversampling) and the
/// dominant rank-dimensional output subspace of linear attention, which is
/// what the best-fitting W1, W2 can reach. Small values mean the spectral
/// encoder and attention summarise the same directions.
double attention_svd_gap(const Matrix& X, int q, Index rank, std::uint64_t seed);

}  // namespace swinit
