#include "swinit/matrix_io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace swinit {

namespace {

template <typename U>
void put_le(std::ostream& os, U v) {
  char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(buf, sizeof(U));
  if (!os) throw std::runtime_error("write failed");
}

template <typename U>
U get_le(std::istream& is) {
  unsigned char buf[sizeof(U)];
  is.read(reinterpret_cast<char*>(buf), sizeof(U));
  if (is.gcount() != static_cast<std::streamsize>(sizeof(U))) throw std::runtime_error("unexpected end of binary stream");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void write_u32(std::ostream& os, std::uint32_t v) { put_le(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { put_le(os, v); }
void write_f64(std::ostream& os, double v) { put_le(os, std::bit_cast<std::uint64_t>(v)); }
std::uint32_t read_u32(std::istream& is) { return get_le<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream& is) { return get_le<std::uint64_t>(is); }
double read_f64(std::istream& is) { return std::bit_cast<double>(get_le<std::uint64_t>(is)); }

void write_matrix(std::ostream& os, const Matrix& M) {
  write_u64(os, static_cast<std::uint64_t>(M.rows()));
  write_u64(os, static_cast<std::uint64_t>(M.cols()));
  for (Index i = 0; i < M.rows(); ++i)
    for (Index j = 0; j < M.cols(); ++j) write_f64(os, M(i, j));
}

Matrix read_matrix(std::istream& is) {
  const auto rows = read_u64(is);
  const auto cols = read_u64(is);
  if (rows > (1ULL << 32) || cols > (1ULL << 32)) throw std::runtime_error("matrix blob: implausible shape");
  Matrix M(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < M.rows(); ++i)
    for (Index j = 0; j < M.cols(); ++j) M(i, j) = read_f64(is);
  return M;
}

void save_matrix(const std::string& path, const Matrix& M) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_matrix(os, M);
}

Matrix load_matrix(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_matrix(is);
}

void write_matrix_csv(std::ostream& os, const Matrix& M) {
  char buf[32];
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", M(i, j));
      if (j) os << ',';
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace swinit
