#pragma once

#include <Eigen/SparseCore>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "swinit/linalg.hpp"
#include "swinit/memory_window.hpp"

namespace swinit {

/// Normalized Laplacian I - D^{-1/2} A D^{-1/2}; isolated nodes have an
/// all-zero row and column.
struct GraphLaplacian {
  Index n = 0;
  SparseMatrix L;
  double lambda_max = 0.0;
  int H = 0;  // smallest H >= 0 with lambda_max <= 2^H * pi
};

/// Throws std::invalid_argument for asymmetric, negative or self-looped input.
GraphLaplacian normalized_laplacian(const SparseMatrix& adjacency);

/// Chebyshev interpolation coefficients (length m + 1) of `target` on [0, pi].
Vector chebyshev_fit(const std::function<double(double)>& target, int m);

/// Scalar Clenshaw evaluation of a [0, pi] Chebyshev series at xi.
double chebyshev_eval(const Vector& coeffs, double xi);

/// p(scale * L) X by Clenshaw recurrence using only sparse products.
Matrix chebyshev_apply(const SparseMatrix& L, double scale, const Vector& coeffs, const Matrix& X);

/// Haar filter bank: low pass cos(xi/2), one high pass sin(xi/2).
struct FilterBank {
  int m = 16;
  int K = 1;
  int levels = 2;
  Vector cheb_low;
  Vector cheb_high;

  static FilterBank haar(int m, int levels);
  int num_bands() const { return K * levels + 1; }
};

/// Band l (1-based level) filter scale 2^{-(H + l - 1)}.
double level_scale(const GraphLaplacian& lap, int level);

/// Bands ordered: deepest low pass first, then high passes by level.
struct FrameletCoeffs {
  std::vector<Matrix> bands;
  std::vector<std::pair<int, int>> index;  // (level, filter) with filter 0 = low
};

FrameletCoeffs framelet_decompose(const GraphLaplacian& lap, const Matrix& X, const FilterBank& fb);

/// Adjoint cascade; left inverse of decompose up to Chebyshev error.
Matrix framelet_reconstruct(const GraphLaplacian& lap, const FrameletCoeffs& coeffs, const FilterBank& fb);

enum class ThetaMode { per_band, shared };

struct UfgContext {
  GraphLaplacian lap;
  FilterBank fb;
  Matrix X;
  Matrix W;
  Matrix theta;  // n x bands (per_band) or n x 1 (shared)
  FrameletCoeffs coeffs;
  Matrix out;    // post-activation
  Activation act = Activation::relu;
  bool valid = false;
};

struct UfgGrad {
  Matrix dX;
  Matrix dTheta;
  Matrix dW;
};

/// theta * X = V diag(theta) W (X W_feat), followed by the activation.
///
/// `theta_local` is n x num_bands, or n x 1 to share one scale across bands.
Matrix ufgconv_forward(const GraphLaplacian& lap, const Matrix& X, const Matrix& theta_local, const Matrix& W_feat,
                       const FilterBank& fb, Activation act = Activation::relu, UfgContext* ctx = nullptr);
Matrix ufgconv_forward(const BatchGraph& batch, const Matrix& X, const Matrix& theta_local, const Matrix& W_feat,
                       const FilterBank& fb, Activation act = Activation::relu, UfgContext* ctx = nullptr);

UfgGrad ufgconv_backward(const UfgContext& ctx, const Matrix& upstream);

/// Global per-node framelet scales inherited across batches.
class ThetaStore {
 public:
  explicit ThetaStore(Index width = 3, double default_value = 1.0) : width_(width), default_(default_value) {}

  Index width() const { return width_; }
  double default_value() const { return default_; }
  std::size_t size() const { return values_.size(); }
  bool contains(std::int64_t node) const { return values_.contains(node); }

  /// Stored rows for known nodes, default-filled rows otherwise.
  Matrix pull(const std::vector<std::int64_t>& nodes) const;
  /// Overwrites exactly the listed nodes.
  void push(const std::vector<std::int64_t>& nodes, const Matrix& theta_local);

  std::vector<std::int64_t> sorted_ids() const;
  const Vector& at(std::int64_t node) const { return values_.at(node); }

  bool operator==(const ThetaStore& o) const;

 private:
  Index width_;
  double default_;
  std::unordered_map<std::int64_t, Vector> values_;
};

void write_theta_store(std::ostream& os, const ThetaStore& store);
ThetaStore read_theta_store(std::istream& is);

}  // namespace swinit
