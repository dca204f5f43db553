#pragma once

#include <cstdint>

#include "swinit/eventstream.hpp"

namespace swinit {

/// Planted-community interaction stream. Users and items each belong to one
/// of `groups` communities and only interact within it; features encode both
/// communities plus Gaussian noise, so links are separable from random pairs.
struct SynthSpec {
  std::int64_t n_users = 200;
  std::int64_t n_items = 100;
  std::size_t n_events = 3000;
  int groups = 8;
  double noise = 0.05;
  double bad_user_frac = 0.1;   // users whose events flip state with prob. bad_state_prob
  double bad_state_prob = 0.5;
  std::uint64_t seed = 0;
};

/// Feature width is 2 * groups. Ids are dense and in first-appearance order.
EventLog make_synthetic_log(const SynthSpec& spec);

/// rows x cols matrix U diag(sigma) V^T with Haar-random orthonormal U, V.
/// sigma may be shorter than min(rows, cols); missing values are zero.
Matrix make_spectrum_matrix(Index rows, Index cols, const Vector& sigma, std::uint64_t seed);

/// sigma_k = ratio^k for k = 0 .. count - 1.
Vector geometric_spectrum(double ratio, Index count);

/// Wraps a feature matrix as an event log with random users and items.
EventLog log_from_features(const Matrix& X, std::int64_t n_users, std::int64_t n_items, std::uint64_t seed);

}  // namespace swinit
