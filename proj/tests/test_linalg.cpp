#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <sstream>

#include "oracles.hpp"
#include "swinit/linalg.hpp"
#include "swinit/matrix_io.hpp"
#include "swinit/synthetic.hpp"

using namespace swinit;

namespace {

Matrix with_singular_values(Index rows, Index cols, const Vector& s, std::uint64_t seed) {
  return make_spectrum_matrix(rows, cols, s, seed);
}

}  // namespace

TEST_CASE("gemm: identity, annihilator, naive oracle, shape errors") {
  Rng rng(1);
  const Matrix A = oracle::gaussian(3, 4, rng);
  CHECK((gemm(Matrix::Identity(3, 3), A) - A).norm() == 0.0);
  CHECK(gemm(A, Matrix::Zero(4, 2)).norm() == 0.0);
  const Matrix P = oracle::gaussian(7, 5, rng), Q = oracle::gaussian(5, 3, rng);
  CHECK((gemm(P, Q) - oracle::naive_gemm(P, Q)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(gemm(P, P), std::invalid_argument);
}

TEST_CASE("gemm is templated on the scalar") {
  Mat<float> A = Mat<float>::Identity(2, 2);
  Mat<float> B(2, 2);
  B << 1, 2, 3, 4;
  CHECK((gemm(A, B) - B).norm() == 0.0f);
}

TEST_CASE("qr_gram_schmidt") {
  SUBCASE("orthonormal input is a fixed point") {
    Rng rng(2);
    const Matrix Q0 = make_spectrum_matrix(8, 3, Vector::Ones(3), 7);
    // Columns of U diag(1) V^T with V orthogonal are orthonormal.
    const auto qr = qr_gram_schmidt(Q0);
    for (Index j = 0; j < 3; ++j) CHECK(std::abs(std::abs(qr.Q.col(j).dot(Q0.col(j))) - 1.0) < 1e-12);
    CHECK((qr.R.cwiseAbs() - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("upper triangular input") {
    Matrix A(2, 2);
    A << 1, 1, 0, 1;
    const auto qr = qr_gram_schmidt(A);
    CHECK((qr.Q - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((qr.R - A).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("random 50x10 residual and orthogonality") {
    Rng rng(3);
    const Matrix A = oracle::gaussian(50, 10, rng);
    const auto qr = qr_gram_schmidt(A);
    CHECK((A - qr.Q * qr.R).norm() / A.norm() < 1e-10);
    CHECK((qr.Q.transpose() * qr.Q - Matrix::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-10);
    for (Index i = 0; i < 10; ++i)
      for (Index j = 0; j < i; ++j) CHECK(qr.R(i, j) == 0.0);
  }
  SUBCASE("rank deficiency names the column") {
    Matrix A(4, 3);
    A << 1, 2, 0, 0, 1, 0, 1, 3, 0, 0, 0, 0;
    A.col(2) = A.col(0) + A.col(1);
    try {
      qr_gram_schmidt(A);
      FAIL("expected an error");
    } catch (const std::domain_error& e) {
      CHECK(std::string(e.what()).find("column 2") != std::string::npos);
    }
  }
  CHECK_THROWS_AS(qr_gram_schmidt(Matrix::Ones(2, 3)), std::invalid_argument);
}

TEST_CASE("spectral_norm") {
  CHECK(std::abs(spectral_norm(Vector(Vector::LinSpaced(3, 3, 1)).asDiagonal().toDenseMatrix()) - 3.0) < 3e-9);  // power iteration stops at 1e-9 relative change
  Vector u(3), v(2);
  u << 2, 0, 0;
  v << 0, 1.5;
  CHECK(std::abs(spectral_norm(Matrix(u * v.transpose())) - 3.0) < 1e-12);
  Rng rng(4);
  const Matrix X = oracle::gaussian(40, 9, rng);
  const double ref = oracle::singular_values(X)[0];
  CHECK(std::abs(spectral_norm(X) - ref) / ref < 1e-7);
  CHECK(spectral_norm(Matrix::Zero(4, 3)) == 0.0);
  CHECK(std::abs(spectral_norm(Matrix(X.transpose())) - ref) / ref < 1e-7);
}

TEST_CASE("randomized_power_svd examples") {
  SUBCASE("identity") {
    const auto r = randomized_power_svd(Matrix::Identity(4, 4), 4, 2, 9);
    for (Index j = 0; j < 4; ++j) CHECK(std::abs(r.sigma(j) - 1.0) < 1e-12);
    CHECK(r.err < 1e-10);
  }
  SUBCASE("exact singular values 3, 2, 1") {
    Vector s(3);
    s << 3, 2, 1;
    const Matrix X = with_singular_values(6, 3, s, 11);
    const auto oracle_s = oracle::singular_values(X);
    CHECK(std::abs(oracle_s[0] - 3.0) < 1e-10);
    const auto r = randomized_power_svd(X, 2, 3, 5);
    CHECK(std::abs(r.sigma(0) - 3.0) < 1e-6);
    CHECK(std::abs(r.sigma(1) - 2.0) < 1e-6);
    CHECK(std::abs(r.err - 1.0) < 1e-6);
  }
  SUBCASE("zero matrix") {
    const auto r = randomized_power_svd(Matrix::Zero(5, 3), 2, 3, 1);
    CHECK(r.sigma(0) == 0.0);
    CHECK(r.sigma(1) == 0.0);
    CHECK(r.err == 0.0);
    CHECK((r.V.transpose() * r.V - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(randomized_power_svd(Matrix::Ones(5, 3), 4, 3, 1), std::invalid_argument);
    CHECK_THROWS_AS(randomized_power_svd(Matrix::Ones(5, 3), 0, 3, 1), std::invalid_argument);
    Matrix bad = Matrix::Ones(5, 3);
    bad(1, 1) = std::nan("");
    CHECK_THROWS_AS(randomized_power_svd(bad, 2, 3, 1), std::domain_error);
  }
}

TEST_CASE("randomized_power_svd invariants") {
  Rng rng(12);
  const Matrix X = oracle::gaussian(120, 30, rng);
  const auto r = randomized_power_svd(X, 12, 3, 77);
  CHECK((r.V.transpose() * r.V - Matrix::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-8);
  for (Index j = 1; j < 12; ++j) CHECK(r.sigma(j) <= r.sigma(j - 1));
  CHECK(r.err >= 0.0);
  CHECK(r.q == 3);
  CHECK(r.seed == 77);

  SUBCASE("bit-identical for identical inputs") {
    const auto r2 = randomized_power_svd(X, 12, 3, 77);
    CHECK(r2.V == r.V);
    CHECK(r2.sigma == r.sigma);
    CHECK(r2.err == r.err);
  }
  SUBCASE("Eckart-Young sandwich on five seeds") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng g(100 + seed);
      const Matrix Y = oracle::gaussian(300, 60, g);
      const auto s = oracle::singular_values(Y);
      for (Index k : {5, 20, 40}) {
        const auto rs = randomized_power_svd(Y, k, 3, seed);
        CHECK(rs.err >= s[static_cast<std::size_t>(k)] * (1 - 1e-9));
        CHECK(rs.err <= 1.5 * s[static_cast<std::size_t>(k)]);
      }
    }
  }
  SUBCASE("full rank reproduces the oracle spectrum") {
    const auto s = oracle::singular_values(X);
    const auto full = randomized_power_svd(X, 30, 3, 1);
    for (Index j = 0; j < 30; ++j) CHECK(std::abs(full.sigma(j) - s[static_cast<std::size_t>(j)]) / s[static_cast<std::size_t>(j)] < 1e-4);
  }
}

TEST_CASE("select_rank") {
  SUBCASE("exact rank 10 with 172 columns stops at the lower bound") {
    Vector s = Vector::LinSpaced(10, 10, 1);
    const Matrix X = with_singular_values(400, 172, s, 21);
    const auto sel = select_rank(X, 50, 100, 0.1, 3, 3);
    CHECK(sel.rank == 50);
    CHECK(sel.rel_err < 1e-8);
    CHECK(sel.below_tol);
  }
  SUBCASE("geometric spectrum hits the closed-form rank") {
    // sigma_k / sigma_0 = 0.97^k first drops below 0.1 at k = 76, so the
    // smallest rank with residual sigma_rank / sigma_0 < 0.1 is 76.
    CHECK(std::pow(0.97, 76) < 0.1);
    CHECK(std::pow(0.97, 75) > 0.1);
    const Matrix X = with_singular_values(1000, 172, geometric_spectrum(0.97, 172), 22);
    const auto sel = select_rank(X, 50, 100, 0.1, 3, 4);
    CHECK(sel.rank == 76);
    CHECK(sel.rel_err < 0.1);
  }
  SUBCASE("fewer columns than the lower bound") {
    Rng rng(5);
    CHECK(select_rank(oracle::gaussian(80, 30, rng)).rank == 30);
  }
  SUBCASE("no qualifying rank returns the upper bound with a flag") {
    Rng rng(6);
    const auto sel = select_rank(oracle::gaussian(200, 60, rng), 5, 10, 0.01, 3, 0);
    CHECK(sel.rank == 10);
    CHECK_FALSE(sel.below_tol);
  }
  CHECK_THROWS_AS(select_rank(Matrix::Ones(10, 5), 6, 3), std::invalid_argument);
}

TEST_CASE("matrix blob and CSV io") {
  Rng rng(7);
  const Matrix A = oracle::gaussian(3, 5, rng);
  std::stringstream ss;
  write_matrix(ss, A);
  const std::string bytes = ss.str();
  REQUIRE(bytes.size() == 16 + 8 * 15);
  // Header is little-endian rows then cols; data is row-major.
  CHECK(static_cast<unsigned char>(bytes[0]) == 3);
  CHECK(static_cast<unsigned char>(bytes[8]) == 5);
  double second;
  std::memcpy(&second, bytes.data() + 24, 8);
  CHECK(second == A(0, 1));
  CHECK(read_matrix(ss) == A);

  std::stringstream truncated(bytes.substr(0, 40));
  CHECK_THROWS(read_matrix(truncated));

  std::ostringstream csv;
  write_matrix_csv(csv, A);
  std::istringstream back(csv.str());
  std::string line;
  std::getline(back, line);
  CHECK(std::stod(line.substr(0, line.find(','))) == A(0, 0));
}
