#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "swinit/rng.hpp"

namespace swinit {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = Mat<double>;
using Vector = Vec<double>;
using Index = Eigen::Index;

template <typename Scalar>
struct QrResult {
  Mat<Scalar> Q;  // n x k, orthonormal columns
  Mat<Scalar> R;  // k x k, upper triangular
};

/// Truncated right singular basis of a tall matrix.
template <typename Scalar>
struct SvdResult {
  Mat<Scalar> V;      // d x rank, orthonormal columns
  Vec<Scalar> sigma;  // non-increasing
  Index rank = 0;
  Scalar err = 0;     // ||X - X V V^T||_2
  int q = 0;
  std::uint64_t seed = 0;
};

struct RankSelection {
  Index rank = 0;
  double rel_err = 0.0;  // err / ||X||_2 at the selected rank
  bool below_tol = true; // false: no rank in range met the tolerance
};

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& X, const char* what) {
  if (!X.allFinite()) throw std::domain_error(std::string(what) + ": non-finite input");
}

/// Modified Gram-Schmidt with one re-orthogonalization pass, in place.
///
/// Returns the index of the first column whose pivot falls below
/// `rel_tol * max_column_norm`, or -1 if all columns are independent. When
/// `replace_deficient` is set, such columns are replaced by the canonical
/// unit vector with the largest residual so Q stays orthonormal.
template <typename Scalar>
Index gram_schmidt(Mat<Scalar>& Q, Mat<Scalar>* R, Scalar rel_tol, bool replace_deficient) {
  const Index n = Q.rows();
  const Index k = Q.cols();
  if (R) R->setZero(k, k);
  Scalar scale = 0;
  for (Index j = 0; j < k; ++j) scale = std::max(scale, Q.col(j).norm());
  Index first_bad = -1;

  for (Index j = 0; j < k; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Index i = 0; i < j; ++i) {
        const Scalar c = Q.col(i).dot(Q.col(j));
        Q.col(j) -= c * Q.col(i);
        if (R) (*R)(i, j) += c;
      }
    }
    const Scalar pivot = Q.col(j).norm();
    if (pivot <= rel_tol * scale || pivot == Scalar(0)) {
      if (first_bad < 0) first_bad = j;
      if (!replace_deficient) return first_bad;
      if (R) {
        R->col(j).setZero();
      }
      // Pick the coordinate direction that is least represented so far.
      Index best = 0;
      Scalar best_norm = -1;
      Vec<Scalar> best_vec;
      for (Index e = 0; e < n; ++e) {
        Vec<Scalar> v = Vec<Scalar>::Unit(n, e);
        for (int pass = 0; pass < 2; ++pass)
          for (Index i = 0; i < j; ++i) v -= Q.col(i).dot(v) * Q.col(i);
        const Scalar nv = v.norm();
        if (nv > best_norm) {
          best_norm = nv;
          best = e;
          best_vec = std::move(v);
        }
        if (best_norm > Scalar(0.5)) break;
      }
      (void)best;
      Q.col(j) = best_vec / best_norm;
      continue;
    }
    Q.col(j) /= pivot;
    if (R) (*R)(j, j) = pivot;
  }
  return first_bad;
}

template <typename Scalar>
Mat<Scalar> gaussian(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Mat<Scalar> G(rows, cols);
  // Row-major fill order, fixed for reproducibility of fixtures.
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) G(i, j) = static_cast<Scalar>(rng.normal());
  return G;
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration (Rayleigh quotient), relative tolerance or iteration cap.
template <typename Scalar>
Scalar psd_lambda_max(const Mat<Scalar>& G, Scalar rel_tol = Scalar(1e-9), int max_iter = 200) {
  const Index n = G.rows();
  if (n == 0) return 0;
  Vec<Scalar> v = gaussian<Scalar>(n, 1, 0x5EEDULL);
  v.normalize();
  Scalar lambda = 0;
  for (int it = 0; it < max_iter; ++it) {
    Vec<Scalar> w = G * v;
    const Scalar next = v.dot(w);
    const Scalar nw = w.norm();
    if (nw == Scalar(0)) return 0;
    v = w / nw;
    if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::max(lambda, Scalar(0));
}

}  // namespace detail

/// Dense product with a dimension check.
template <typename DerivedA, typename DerivedB>
auto gemm(const Eigen::MatrixBase<DerivedA>& A, const Eigen::MatrixBase<DerivedB>& B) {
  using Scalar = typename DerivedA::Scalar;
  if (A.cols() != B.rows())
    throw std::invalid_argument("gemm: dimension mismatch (" + std::to_string(A.rows()) + "x" +
                                std::to_string(A.cols()) + " * " + std::to_string(B.rows()) + "x" +
                                std::to_string(B.cols()) + ")");
  Mat<Scalar> C = A * B;
  return C;
}

/// Thin QR by modified Gram-Schmidt with re-orthogonalization.
///
/// Throws std::domain_error naming the first column whose pivot norm falls
/// below 1e-12 relative to the largest column norm.
template <typename Derived>
QrResult<typename Derived::Scalar> qr_gram_schmidt(const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  if (A.rows() < A.cols()) throw std::invalid_argument("qr_gram_schmidt: requires rows >= cols");
  detail::require_finite(A, "qr_gram_schmidt");
  QrResult<Scalar> out;
  out.Q = A;
  const Index bad = detail::gram_schmidt<Scalar>(out.Q, &out.R, Scalar(1e-12), false);
  if (bad >= 0)
    throw std::domain_error("qr_gram_schmidt: column " + std::to_string(bad) +
                            " is numerically dependent on the preceding columns");
  return out;
}

/// Largest singular value by power iteration on the smaller Gram matrix.
template <typename Derived>
typename Derived::Scalar spectral_norm(const Eigen::MatrixBase<Derived>& X) {
  using Scalar = typename Derived::Scalar;
  if (X.size() == 0) return 0;
  Mat<Scalar> G;
  if (X.rows() >= X.cols())
    G.noalias() = X.transpose() * X;
  else
    G.noalias() = X * X.transpose();
  return std::sqrt(detail::psd_lambda_max<Scalar>(G));
}

/// Randomized power-scheme truncated SVD (right singular basis only).
///
/// Draws a Gaussian sketch of `rank + oversample` columns (capped at cols),
/// applies `q` passes of Y <- X^T X Y, re-orthonormalizing by Gram-Schmidt
/// after each pass, then rotates the basis with a small SVD of X Q so the
/// returned columns are Ritz approximations of the leading right singular
/// vectors. Column signs are fixed so the largest-magnitude entry is positive.
template <typename Derived>
SvdResult<typename Derived::Scalar> randomized_power_svd(const Eigen::MatrixBase<Derived>& X_in, Index rank,
                                                          int q, std::uint64_t seed, Index oversample = 10) {
  using Scalar = typename Derived::Scalar;
  const Mat<Scalar> X = X_in;
  const Index n = X.rows();
  const Index d = X.cols();
  if (rank < 1 || rank > d) throw std::invalid_argument("randomized_power_svd: rank must be in [1, cols]");
  if (d > n) throw std::invalid_argument("randomized_power_svd: requires cols <= rows");
  if (q < 1) throw std::invalid_argument("randomized_power_svd: q must be >= 1");
  detail::require_finite(X, "randomized_power_svd");

  const Index k = std::min(d, rank + std::max<Index>(oversample, 0));
  Mat<Scalar> Q = detail::gaussian<Scalar>(d, k, seed);
  detail::gram_schmidt<Scalar>(Q, nullptr, Scalar(1e-13), true);
  for (int it = 0; it < q; ++it) {
    Mat<Scalar> Z = X * Q;
    Q.noalias() = X.transpose() * Z;
    detail::gram_schmidt<Scalar>(Q, nullptr, Scalar(1e-13), true);
  }

  // Rayleigh-Ritz on span(Q): X Q = Qb Rb, Rb = U S W^T  =>  V = Q W.
  Mat<Scalar> B = X * Q;
  Eigen::HouseholderQR<Mat<Scalar>> hqr(B);
  Mat<Scalar> Rb = hqr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Mat<Scalar>> small(Rb, Eigen::ComputeFullV);
  Mat<Scalar> Vk = Q * small.matrixV();

  Vec<Scalar> norms = (X * Vk).colwise().norm().transpose();
  std::vector<Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return norms(a) > norms(b); });

  SvdResult<Scalar> out;
  out.rank = rank;
  out.q = q;
  out.seed = seed;
  out.V.resize(d, rank);
  out.sigma.resize(rank);
  for (Index j = 0; j < rank; ++j) {
    auto src = Vk.col(order[static_cast<std::size_t>(j)]);
    Index arg = 0;
    src.cwiseAbs().maxCoeff(&arg);
    const Scalar sign = src(arg) < Scalar(0) ? Scalar(-1) : Scalar(1);
    out.V.col(j) = sign * src;
    out.sigma(j) = norms(order[static_cast<std::size_t>(j)]);
  }
  const Mat<Scalar> residual = X - (X * out.V) * out.V.transpose();
  out.err = spectral_norm(residual);
  return out;
}

/// Smallest rank in [lo, hi] (clamped to cols) whose relative spectral
/// residual err/||X||_2 is below `tol`.
///
/// One randomized SVD is computed at the upper bound; candidate ranks use
/// its leading columns. If no candidate qualifies the upper bound is returned
/// with `below_tol = false`. Fewer columns than `lo` returns cols.
template <typename Derived>
RankSelection select_rank(const Eigen::MatrixBase<Derived>& X_in, Index lo = 50, Index hi = 100, double tol = 0.1,
                          int q = 3, std::uint64_t seed = 0) {
  using Scalar = typename Derived::Scalar;
  if (lo > hi) throw std::invalid_argument("select_rank: lo > hi");
  const Mat<Scalar> X = X_in;
  const Index d = X.cols();
  if (d < 1) throw std::invalid_argument("select_rank: matrix has no columns");
  const Index first = std::max<Index>(1, std::min(lo, d));
  const Index last = std::max(first, std::min(hi, d));

  const auto svd = randomized_power_svd(X, last, q, seed);
  const Mat<Scalar> G = X.transpose() * X;
  const Scalar top = std::sqrt(detail::psd_lambda_max<Scalar>(G));
  RankSelection sel;
  if (top == Scalar(0)) {
    sel.rank = first;
    return sel;
  }
  for (Index r = first; r <= last; ++r) {
    const auto Vr = svd.V.leftCols(r);
    Mat<Scalar> P = Mat<Scalar>::Identity(d, d) - Vr * Vr.transpose();
    const Mat<Scalar> Gr = P * G * P;
    const double rel = static_cast<double>(std::sqrt(detail::psd_lambda_max<Scalar>(Gr)) / top);
    sel.rank = r;
    sel.rel_err = rel;
    if (rel < tol || r == d) {
      sel.below_tol = rel < tol;
      return sel;
    }
  }
  sel.below_tol = false;
  return sel;
}

}  // namespace swinit
