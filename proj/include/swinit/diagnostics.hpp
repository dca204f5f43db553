#pragma once

#include <vector>

#include "swinit/framelet.hpp"
#include "swinit/rng.hpp"

namespace swinit {

/// Erdos-Renyi adjacency (binary, symmetric, zero diagonal).
SparseMatrix random_adjacency(Index n, double edge_prob, Rng& rng);

/// Framelet bands computed exactly from a dense eigendecomposition of the
/// Laplacian, applying cos(xi/2) and sin(xi/2) to the scaled eigenvalues.
FrameletCoeffs framelet_decompose_dense(const GraphLaplacian& lap, const Matrix& X, int levels);

/// UFGConv forward through the dense transform; same semantics as
/// ufgconv_forward.
Matrix ufgconv_dense(const GraphLaplacian& lap, const Matrix& X, const Matrix& theta, const Matrix& W_feat,
                     int levels, Activation act);

struct FrameletErrors {
  double round_trip = 0.0;  // ||V W X - X|| / ||X||
  double parseval = 0.0;    // |sum ||band||^2 - ||X||^2| / ||X||^2
  double adjoint = 0.0;     // |<W X, C> - <X, V C>| / (||W X|| ||C||)
  double oracle = 0.0;      // max over bands of relative Frobenius gap to the dense transform
};

/// Measures the transform properties for signal X and random coefficients C.
FrameletErrors measure_framelet(const GraphLaplacian& lap, const Matrix& X, const FrameletCoeffs& C,
                                const FilterBank& fb);

}  // namespace swinit
