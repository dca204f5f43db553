#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "swinit/linalg.hpp"

namespace swinit {

// Little-endian primitives shared by every binary format in the project.
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);

/// Binary matrix blob: rows and cols as u64 LE, then rows*cols f64 LE in
/// row-major order.
void write_matrix(std::ostream& os, const Matrix& M);
Matrix read_matrix(std::istream& is);

void save_matrix(const std::string& path, const Matrix& M);
Matrix load_matrix(const std::string& path);

/// Plain CSV (one row per line, %.17g) for debugging.
void write_matrix_csv(std::ostream& os, const Matrix& M);

}  // namespace swinit
