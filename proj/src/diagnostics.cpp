#include "swinit/diagnostics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace swinit {

SparseMatrix random_adjacency(Index n, double p, Rng& rng) {
  if (n < 1) throw std::invalid_argument("random_adjacency: n must be positive");
  std::vector<Eigen::Triplet<double>> trips;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (rng.bernoulli(p)) {
        trips.emplace_back(i, j, 1.0);
        trips.emplace_back(j, i, 1.0);
      }
  SparseMatrix A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

FrameletCoeffs framelet_decompose_dense(const GraphLaplacian& lap, const Matrix& X, int levels) {
  if (X.rows() != lap.n) throw std::invalid_argument("framelet_decompose_dense: X rows != number of nodes");
  const Eigen::SelfAdjointEigenSolver<Matrix> es{Matrix(lap.L)};
  const Matrix& U = es.eigenvectors();
  const Vector& lam = es.eigenvalues();
  const Matrix Xh = U.transpose() * X;

  FrameletCoeffs out;
  out.bands.resize(static_cast<std::size_t>(levels + 1));
  out.index.resize(out.bands.size());
  Vector low = Vector::Ones(lap.n);  // running low-pass product per eigenvalue
  for (int l = 1; l <= levels; ++l) {
    const double s = level_scale(lap, l);
    Vector hi(lap.n), lo(lap.n);
    for (Index k = 0; k < lap.n; ++k) {
      hi(k) = low(k) * std::sin(s * lam(k) / 2.0);
      lo(k) = low(k) * std::cos(s * lam(k) / 2.0);
    }
    out.bands[static_cast<std::size_t>(l)] = U * (hi.asDiagonal() * Xh);
    out.index[static_cast<std::size_t>(l)] = {l, 1};
    low = lo;
  }
  out.bands[0] = U * (low.asDiagonal() * Xh);
  out.index[0] = {levels, 0};
  return out;
}

Matrix ufgconv_dense(const GraphLaplacian& lap, const Matrix& X, const Matrix& theta, const Matrix& W, int levels,
                     Activation act) {
  const Eigen::SelfAdjointEigenSolver<Matrix> es{Matrix(lap.L)};
  const Matrix& U = es.eigenvectors();
  const Vector& lam = es.eigenvalues();
  // Each band operator is U g(lambda) U^T; reconstruction applies it again.
  std::vector<Matrix> ops;
  Vector low = Vector::Ones(lap.n);
  std::vector<Vector> gains(static_cast<std::size_t>(levels + 1));
  for (int l = 1; l <= levels; ++l) {
    const double s = level_scale(lap, l);
    Vector hi(lap.n);
    for (Index k = 0; k < lap.n; ++k) {
      hi(k) = low(k) * std::sin(s * lam(k) / 2.0);
      low(k) *= std::cos(s * lam(k) / 2.0);
    }
    gains[static_cast<std::size_t>(l)] = hi;
  }
  gains[0] = low;
  const Matrix Xp = X * W;
  Matrix out = Matrix::Zero(lap.n, Xp.cols());
  for (int b = 0; b <= levels; ++b) {
    const Matrix G = U * gains[static_cast<std::size_t>(b)].asDiagonal() * U.transpose();
    const auto col = theta.col(theta.cols() == 1 ? 0 : b);
    out += G * (col.asDiagonal() * (G * Xp));
  }
  apply_activation(act, out);
  return out;
}

FrameletErrors measure_framelet(const GraphLaplacian& lap, const Matrix& X, const FrameletCoeffs& C,
                                const FilterBank& fb) {
  FrameletErrors e;
  const FrameletCoeffs WX = framelet_decompose(lap, X, fb);
  const double xn = X.norm();
  const double xn2 = X.squaredNorm();
  e.round_trip = xn > 0 ? (framelet_reconstruct(lap, WX, fb) - X).norm() / xn : 0.0;

  double energy = 0.0, inner_wx_c = 0.0, wxn2 = 0.0, cn2 = 0.0;
  for (std::size_t b = 0; b < WX.bands.size(); ++b) {
    energy += WX.bands[b].squaredNorm();
    inner_wx_c += WX.bands[b].cwiseProduct(C.bands[b]).sum();
    wxn2 += WX.bands[b].squaredNorm();
    cn2 += C.bands[b].squaredNorm();
  }
  e.parseval = xn2 > 0 ? std::abs(energy - xn2) / xn2 : 0.0;
  const double inner_x_vc = X.cwiseProduct(framelet_reconstruct(lap, C, fb)).sum();
  const double denom = std::sqrt(wxn2 * cn2);
  e.adjoint = denom > 0 ? std::abs(inner_wx_c - inner_x_vc) / denom : 0.0;

  const FrameletCoeffs dense = framelet_decompose_dense(lap, X, fb.levels);
  for (std::size_t b = 0; b < WX.bands.size(); ++b) {
    const double ref = dense.bands[b].norm();
    const double gap = (WX.bands[b] - dense.bands[b]).norm();
    e.oracle = std::max(e.oracle, ref > 1e-12 * xn ? gap / ref : gap / std::max(xn, 1e-300));
  }
  return e;
}

}  // namespace swinit
