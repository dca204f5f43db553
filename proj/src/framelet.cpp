#include "swinit/framelet.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "swinit/matrix_io.hpp"

namespace swinit {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint32_t kThetaMagic = 0x48545753;  // "SWTH"
constexpr std::uint32_t kThetaVersion = 1;

/// Largest eigenvalue of a symmetric PSD operator: 200-step Krylov (Lanczos
/// with full reorthogonalization) iteration, reporting the top Ritz value.
/// Exact up to rounding when n <= 200; a plain power iteration with the same
/// step budget stalls on the small eigengaps of normalized Laplacians.
double largest_eigenvalue(const SparseMatrix& L) {
  const Index n = L.rows();
  if (n == 0) return 0.0;
  const Index kmax = std::min<Index>(n, 200);
  Matrix Q(n, kmax);
  std::vector<double> alpha, beta;
  Vector q = detail::gaussian<double>(n, 1, 0x1A9ULL);
  q.normalize();
  Index k = 0;
  for (; k < kmax; ++k) {
    Q.col(k) = q;
    Vector w = L * q;
    alpha.push_back(q.dot(w));
    // Two passes of classical Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(k + 1) * (Q.leftCols(k + 1).transpose() * w);
    const double b = w.norm();
    if (k + 1 == kmax || b <= 1e-12 * std::max(1.0, std::abs(alpha.back()))) {
      ++k;
      break;
    }
    beta.push_back(b);
    q = w / b;
  }
  Matrix T = Matrix::Zero(k, k);
  for (Index i = 0; i < k; ++i) {
    T(i, i) = alpha[static_cast<std::size_t>(i)];
    if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> es(T, Eigen::EigenvaluesOnly);
  return std::max(es.eigenvalues().maxCoeff(), 0.0);
}

}  // namespace

GraphLaplacian normalized_laplacian(const SparseMatrix& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("normalized_laplacian: adjacency must be square");
  const Index n = A.rows();
  const SparseMatrix At = A.transpose();
  if ((A - At).norm() > 1e-12 * std::max(1.0, A.norm())) throw std::invalid_argument("normalized_laplacian: adjacency is not symmetric");

  Vector deg = Vector::Zero(n);
  for (Index c = 0; c < A.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(A, c); it; ++it) {
      if (it.value() < 0.0) throw std::invalid_argument("normalized_laplacian: negative weight");
      if (it.row() == it.col() && it.value() != 0.0) throw std::invalid_argument("normalized_laplacian: nonzero diagonal");
      deg(it.row()) += it.value();
    }

  std::vector<Eigen::Triplet<double>> trip;
  for (Index i = 0; i < n; ++i)
    if (deg(i) > 0.0) trip.emplace_back(i, i, 1.0);
  for (Index c = 0; c < A.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(A, c); it; ++it)
      if (it.value() != 0.0) trip.emplace_back(it.row(), it.col(), -it.value() / std::sqrt(deg(it.row()) * deg(it.col())));

  GraphLaplacian lap;
  lap.n = n;
  lap.L.resize(n, n);
  lap.L.setFromTriplets(trip.begin(), trip.end());

  lap.lambda_max = largest_eigenvalue(lap.L);
  lap.H = 0;
  while (lap.lambda_max > std::ldexp(kPi, lap.H)) ++lap.H;
  return lap;
}

Vector chebyshev_fit(const std::function<double(double)>& target, int m) {
  if (m < 1) throw std::invalid_argument("chebyshev_fit: order must be >= 1");
  const int N = m + 1;
  std::vector<double> values(static_cast<std::size_t>(N));
  std::vector<double> angles(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) {
    angles[static_cast<std::size_t>(j)] = kPi * (j + 0.5) / N;
    const double x = std::cos(angles[static_cast<std::size_t>(j)]);
    values[static_cast<std::size_t>(j)] = target((x + 1.0) * kPi / 2.0);
  }
  Vector c(N);
  for (int k = 0; k < N; ++k) {
    double acc = 0.0;
    for (int j = 0; j < N; ++j) acc += values[static_cast<std::size_t>(j)] * std::cos(k * angles[static_cast<std::size_t>(j)]);
    c(k) = 2.0 * acc / N;
  }
  c(0) *= 0.5;
  return c;
}

double chebyshev_eval(const Vector& c, double xi) {
  const double x = 2.0 * xi / kPi - 1.0;
  double b1 = 0.0, b2 = 0.0;
  for (Index k = c.size() - 1; k >= 1; --k) {
    const double b0 = c(k) + 2.0 * x * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return c(0) + x * b1 - b2;
}

Matrix chebyshev_apply(const SparseMatrix& L, double scale, const Vector& c, const Matrix& X) {
  if (L.cols() != X.rows()) throw std::invalid_argument("chebyshev_apply: dimension mismatch");
  // Argument map xi -> 2 xi / pi - 1 applied to scale * L.
  const double a = 2.0 * scale / kPi;
  auto shifted = [&](const Matrix& Y) -> Matrix { return a * (L * Y) - Y; };
  Matrix b1 = Matrix::Zero(X.rows(), X.cols());
  Matrix b2 = b1;
  for (Index k = c.size() - 1; k >= 1; --k) {
    Matrix b0 = c(k) * X + 2.0 * shifted(b1) - b2;
    b2 = std::move(b1);
    b1 = std::move(b0);
  }
  return c(0) * X + shifted(b1) - b2;
}

FilterBank FilterBank::haar(int m, int levels) {
  if (levels < 1) throw std::invalid_argument("FilterBank::haar: levels must be >= 1");
  FilterBank fb;
  fb.m = m;
  fb.K = 1;
  fb.levels = levels;
  fb.cheb_low = chebyshev_fit([](double xi) { return std::cos(xi / 2.0); }, m);
  fb.cheb_high = chebyshev_fit([](double xi) { return std::sin(xi / 2.0); }, m);
  return fb;
}

double level_scale(const GraphLaplacian& lap, int level) { return std::ldexp(1.0, -(lap.H + level - 1)); }

FrameletCoeffs framelet_decompose(const GraphLaplacian& lap, const Matrix& X, const FilterBank& fb) {
  if (X.rows() != lap.n) throw std::invalid_argument("framelet_decompose: X rows != number of nodes");
  FrameletCoeffs out;
  out.bands.resize(static_cast<std::size_t>(fb.num_bands()));
  out.index.resize(out.bands.size());
  Matrix low = X;
  for (int l = 1; l <= fb.levels; ++l) {
    const double s = level_scale(lap, l);
    out.bands[static_cast<std::size_t>(l)] = chebyshev_apply(lap.L, s, fb.cheb_high, low);
    out.index[static_cast<std::size_t>(l)] = {l, 1};
    low = chebyshev_apply(lap.L, s, fb.cheb_low, low);
  }
  out.bands[0] = std::move(low);
  out.index[0] = {fb.levels, 0};
  return out;
}

Matrix framelet_reconstruct(const GraphLaplacian& lap, const FrameletCoeffs& coeffs, const FilterBank& fb) {
  if (static_cast<int>(coeffs.bands.size()) != fb.num_bands()) throw std::invalid_argument("framelet_reconstruct: band count mismatch");
  const Index F = coeffs.bands[0].cols();
  for (const auto& b : coeffs.bands)
    if (b.rows() != lap.n || b.cols() != F) throw std::invalid_argument("framelet_reconstruct: band shape mismatch");
  Matrix acc = coeffs.bands[0];
  for (int l = fb.levels; l >= 1; --l) {
    const double s = level_scale(lap, l);
    acc = chebyshev_apply(lap.L, s, fb.cheb_low, acc) +
          chebyshev_apply(lap.L, s, fb.cheb_high, coeffs.bands[static_cast<std::size_t>(l)]);
  }
  return acc;
}

Matrix ufgconv_forward(const GraphLaplacian& lap, const Matrix& X, const Matrix& theta, const Matrix& W,
                       const FilterBank& fb, Activation act, UfgContext* ctx) {
  if (X.rows() != lap.n) throw std::invalid_argument("ufgconv_forward: X rows != number of nodes");
  if (W.rows() != X.cols()) throw std::invalid_argument("ufgconv_forward: W_feat rows != X cols");
  const Index nb = fb.num_bands();
  if (theta.rows() != lap.n || (theta.cols() != nb && theta.cols() != 1))
    throw std::invalid_argument("ufgconv_forward: theta must be n x bands or n x 1");
  if (!theta.allFinite()) throw std::domain_error("ufgconv_forward: non-finite theta");

  const Matrix Xp = X * W;
  FrameletCoeffs coeffs = framelet_decompose(lap, Xp, fb);
  FrameletCoeffs scaled = coeffs;
  for (Index b = 0; b < nb; ++b) {
    const auto col = theta.col(theta.cols() == 1 ? 0 : b);
    scaled.bands[static_cast<std::size_t>(b)] = col.asDiagonal() * coeffs.bands[static_cast<std::size_t>(b)];
  }
  Matrix out = framelet_reconstruct(lap, scaled, fb);
  apply_activation(act, out);
  if (ctx) {
    ctx->lap = lap;
    ctx->fb = fb;
    ctx->X = X;
    ctx->W = W;
    ctx->theta = theta;
    ctx->coeffs = std::move(coeffs);
    ctx->out = out;
    ctx->act = act;
    ctx->valid = true;
  }
  return out;
}

Matrix ufgconv_forward(const BatchGraph& batch, const Matrix& X, const Matrix& theta, const Matrix& W,
                       const FilterBank& fb, Activation act, UfgContext* ctx) {
  return ufgconv_forward(normalized_laplacian(batch.adjacency), X, theta, W, fb, act, ctx);
}

UfgGrad ufgconv_backward(const UfgContext& ctx, const Matrix& upstream) {
  if (!ctx.valid) throw std::logic_error("ufgconv_backward: missing forward context");
  if (upstream.rows() != ctx.out.rows() || upstream.cols() != ctx.out.cols())
    throw std::invalid_argument("ufgconv_backward: upstream shape mismatch");
  const Index nb = ctx.fb.num_bands();
  const Matrix dpre = upstream.cwiseProduct(activation_derivative(ctx.act, ctx.out));
  // reconstruct and decompose are adjoint to each other.
  FrameletCoeffs dscaled = framelet_decompose(ctx.lap, dpre, ctx.fb);

  UfgGrad g;
  g.dTheta = Matrix::Zero(ctx.theta.rows(), ctx.theta.cols());
  FrameletCoeffs dcoeffs = dscaled;
  for (Index b = 0; b < nb; ++b) {
    const auto& D = dscaled.bands[static_cast<std::size_t>(b)];
    const auto& C = ctx.coeffs.bands[static_cast<std::size_t>(b)];
    const Index tc = ctx.theta.cols() == 1 ? 0 : b;
    g.dTheta.col(tc) += D.cwiseProduct(C).rowwise().sum();
    dcoeffs.bands[static_cast<std::size_t>(b)] = ctx.theta.col(tc).asDiagonal() * D;
  }
  const Matrix dXp = framelet_reconstruct(ctx.lap, dcoeffs, ctx.fb);
  g.dW = ctx.X.transpose() * dXp;
  g.dX = dXp * ctx.W.transpose();
  return g;
}

Matrix ThetaStore::pull(const std::vector<std::int64_t>& nodes) const {
  Matrix out(static_cast<Index>(nodes.size()), width_);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto it = values_.find(nodes[i]);
    if (it == values_.end())
      out.row(static_cast<Index>(i)).setConstant(default_);
    else
      out.row(static_cast<Index>(i)) = it->second.transpose();
  }
  return out;
}

void ThetaStore::push(const std::vector<std::int64_t>& nodes, const Matrix& theta) {
  if (theta.rows() != static_cast<Index>(nodes.size()) || theta.cols() != width_)
    throw std::invalid_argument("ThetaStore::push: theta shape does not match node list");
  if (!theta.allFinite()) throw std::domain_error("ThetaStore::push: non-finite theta");
  for (std::size_t i = 0; i < nodes.size(); ++i) values_[nodes[i]] = theta.row(static_cast<Index>(i)).transpose();
}

std::vector<std::int64_t> ThetaStore::sorted_ids() const {
  std::vector<std::int64_t> ids;
  ids.reserve(values_.size());
  for (const auto& [id, v] : values_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool ThetaStore::operator==(const ThetaStore& o) const {
  return width_ == o.width_ && default_ == o.default_ && values_ == o.values_;
}

void write_theta_store(std::ostream& os, const ThetaStore& store) {
  write_u32(os, kThetaMagic);
  write_u32(os, kThetaVersion);
  write_u64(os, static_cast<std::uint64_t>(store.width()));
  write_f64(os, store.default_value());
  const auto ids = store.sorted_ids();
  write_u64(os, ids.size());
  for (auto id : ids) {
    write_u64(os, static_cast<std::uint64_t>(id));
    const auto& v = store.at(id);
    for (Index j = 0; j < v.size(); ++j) write_f64(os, v(j));
  }
}

ThetaStore read_theta_store(std::istream& is) {
  if (read_u32(is) != kThetaMagic) throw std::runtime_error("not a theta store");
  if (read_u32(is) != kThetaVersion) throw std::runtime_error("unsupported theta store version");
  const auto width = static_cast<Index>(read_u64(is));
  const double def = read_f64(is);
  ThetaStore store(width, def);
  const auto count = read_u64(is);
  std::vector<std::int64_t> id(1);
  Matrix row(1, width);
  for (std::uint64_t i = 0; i < count; ++i) {
    id[0] = static_cast<std::int64_t>(read_u64(is));
    for (Index j = 0; j < width; ++j) row(0, j) = read_f64(is);
    store.push(id, row);
  }
  return store;
}

}  // namespace swinit
