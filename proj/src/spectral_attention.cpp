#include "swinit/spectral_attention.hpp"

#include <fstream>
#include <stdexcept>

#include "swinit/matrix_io.hpp"

namespace swinit {

namespace {

constexpr std::uint32_t kEncodingMagic = 0x45535753;  // "SWSE"
constexpr std::uint32_t kEncodingVersion = 1;

// Orthonormal basis of the numerical column space (relative cutoff).
Matrix column_space(const Matrix& A, double rel_cut) {
  if (A.cols() == 0) return Matrix(A.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  const double top = s.size() ? s(0) : 0.0;
  Index keep = 0;
  while (keep < s.size() && s(keep) > rel_cut * top && top > 0.0) ++keep;
  return svd.matrixU().leftCols(keep);
}

}  // namespace

Matrix SpectralEncoding::project(const Matrix& X) const {
  return gemm(X, V);
}

SpectralEncoding spectral_encode(const Matrix& X, const SpectralConfig& cfg) {
  if (X.rows() < 1) throw std::invalid_argument("spectral_encode: no events");
  const RankSelection sel = select_rank(X, cfg.rank_lo, cfg.rank_hi, cfg.tol, cfg.q, cfg.seed);
  const auto svd = randomized_power_svd(X, sel.rank, cfg.q, cfg.seed);
  SpectralEncoding enc;
  enc.V = svd.V;
  enc.Xt = gemm(X, enc.V);
  enc.rank = sel.rank;
  const double top = spectral_norm(X);
  enc.err = top > 0.0 ? svd.err / top : 0.0;
  enc.below_tol = enc.err < cfg.tol;
  enc.q = cfg.q;
  enc.seed = cfg.seed;
  return enc;
}

SpectralEncoding spectral_encode(const EventLog& log, const SpectralConfig& cfg) {
  return spectral_encode(log.feature_matrix(), cfg);
}

void write_encoding(std::ostream& os, const SpectralEncoding& enc) {
  write_u32(os, kEncodingMagic);
  write_u32(os, kEncodingVersion);
  write_u64(os, static_cast<std::uint64_t>(enc.rank));
  write_f64(os, enc.err);
  write_u64(os, enc.seed);
  write_u64(os, static_cast<std::uint64_t>(enc.q));
  write_u64(os, enc.below_tol ? 1 : 0);
  write_matrix(os, enc.V);
  write_matrix(os, enc.Xt);
}

SpectralEncoding read_encoding(std::istream& is) {
  if (read_u32(is) != kEncodingMagic) throw std::runtime_error("not a spectral encoding file");
  if (read_u32(is) != kEncodingVersion) throw std::runtime_error("unsupported spectral encoding version");
  SpectralEncoding enc;
  enc.rank = static_cast<Index>(read_u64(is));
  enc.err = read_f64(is);
  enc.seed = read_u64(is);
  enc.q = static_cast<int>(read_u64(is));
  enc.below_tol = read_u64(is) != 0;
  enc.V = read_matrix(is);
  enc.Xt = read_matrix(is);
  if (enc.V.cols() != enc.rank) throw std::runtime_error("spectral encoding: basis width disagrees with rank");
  return enc;
}

void save_encoding(const std::string& path, const SpectralEncoding& enc) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_encoding(os, enc);
}

SpectralEncoding load_encoding(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_encoding(is);
}

Matrix linear_attention(const Matrix& X, const AttentionWeights& w) {
  const Index d = X.cols();
  if (w.W1.rows() != d || w.W1.cols() != d || w.W2.rows() != d || w.W2.cols() != d)
    throw std::invalid_argument("linear_attention: weights must be d x d with d = X.cols()");
  if (X.rows() == 0) return Matrix(0, d);
  const Matrix gram = X.transpose() * X;
  const Matrix mix = w.W1 * gram * w.W2;
  return (X * mix) / static_cast<double>(X.rows());
}

double attention_svd_gap(const Matrix& X, int q, Index rank, std::uint64_t seed) {
  const auto svd = randomized_power_svd(X, rank, q, seed, /*oversample=*/0);
  const Matrix QA = column_space(X * svd.V, 1e-10);

  const Index d = X.cols();
  const Matrix attn = linear_attention(X, {Matrix::Identity(d, d), Matrix::Identity(d, d)});
  Eigen::JacobiSVD<Matrix> asvd(attn, Eigen::ComputeThinU);
  const auto& s = asvd.singularValues();
  Index keep = 0;
  while (keep < std::min(rank, s.size()) && s(keep) > 1e-10 * s(0) && s(0) > 0.0) ++keep;
  const Matrix QB = asvd.matrixU().leftCols(keep);

  const double a = (QA - QB * (QB.transpose() * QA)).squaredNorm();
  const double b = (QB - QA * (QA.transpose() * QB)).squaredNorm();
  return std::sqrt(0.5 * (a + b));
}

}  // namespace swinit
