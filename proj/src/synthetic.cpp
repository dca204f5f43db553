#include "swinit/synthetic.hpp"

#include <Eigen/QR>

#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "swinit/rng.hpp"

namespace swinit {

EventLog make_synthetic_log(const SynthSpec& spec) {
  if (spec.groups < 2) throw std::invalid_argument("synthetic: need at least 2 groups");
  if (spec.n_users < spec.groups || spec.n_items < spec.groups)
    throw std::invalid_argument("synthetic: every group needs a user and an item");
  if (spec.n_events == 0) throw std::invalid_argument("synthetic: n_events must be positive");

  Rng rng(derive_seed(spec.seed, "synthetic"));
  const auto G = static_cast<std::int64_t>(spec.groups);
  // Round-robin membership guarantees non-empty groups.
  std::vector<std::vector<std::int64_t>> items_of(static_cast<std::size_t>(G));
  for (std::int64_t i = 0; i < spec.n_items; ++i) items_of[static_cast<std::size_t>(i % G)].push_back(i);
  std::vector<char> bad(static_cast<std::size_t>(spec.n_users));
  for (auto& b : bad) b = rng.bernoulli(spec.bad_user_frac);

  const double centre = 1.0 / static_cast<double>(G);
  std::unordered_map<std::int64_t, std::int64_t> user_id, item_id;
  EventLog log;
  log.d = 2 * G;
  log.events.reserve(spec.n_events);
  for (std::size_t k = 0; k < spec.n_events; ++k) {
    const auto u = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(spec.n_users)));
    const std::int64_t g = u % G;
    const auto& pool = items_of[static_cast<std::size_t>(g)];
    const std::int64_t it = pool[rng.below(pool.size())];

    Event e;
    e.t = static_cast<double>(k);
    e.features.assign(static_cast<std::size_t>(2 * G), -centre);
    e.features[static_cast<std::size_t>(g)] += 1.0;
    e.features[static_cast<std::size_t>(G + it % G)] += 1.0;
    for (auto& f : e.features) f += spec.noise * rng.normal();
    e.state_label = bad[static_cast<std::size_t>(u)] && rng.bernoulli(spec.bad_state_prob) ? 1 : 0;
    e.src = user_id.try_emplace(u, static_cast<std::int64_t>(user_id.size())).first->second;
    e.dst = item_id.try_emplace(it, static_cast<std::int64_t>(item_id.size())).first->second;
    log.events.push_back(std::move(e));
  }
  log.n_src = static_cast<std::int64_t>(user_id.size());
  log.n_dst = static_cast<std::int64_t>(item_id.size());
  return log;
}

namespace {

Matrix haar_orthonormal(Index n, Index k, Rng& rng) {
  Matrix G(n, k);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < k; ++j) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ() * Matrix::Identity(n, k);
  // Sign fix makes the distribution Haar rather than QR-convention dependent.
  const Matrix R = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
  for (Index j = 0; j < k; ++j)
    if (R(j, j) < 0) Q.col(j) *= -1.0;
  return Q;
}

}  // namespace

Matrix make_spectrum_matrix(Index rows, Index cols, const Vector& sigma, std::uint64_t seed) {
  const Index k = std::min(rows, cols);
  if (sigma.size() > k) throw std::invalid_argument("make_spectrum_matrix: more singular values than min(rows, cols)");
  Rng rng(derive_seed(seed, "spectrum"));
  const Matrix U = haar_orthonormal(rows, k, rng);
  const Matrix V = haar_orthonormal(cols, k, rng);
  Vector s = Vector::Zero(k);
  s.head(sigma.size()) = sigma;
  return U * s.asDiagonal() * V.transpose();
}

Vector geometric_spectrum(double ratio, Index count) {
  Vector s(count);
  for (Index k = 0; k < count; ++k) s(k) = std::pow(ratio, static_cast<double>(k));
  return s;
}

EventLog log_from_features(const Matrix& X, std::int64_t n_users, std::int64_t n_items, std::uint64_t seed) {
  if (n_users < 1 || n_items < 1) throw std::invalid_argument("log_from_features: need at least one user and item");
  Rng rng(derive_seed(seed, "features/ids"));
  std::unordered_map<std::int64_t, std::int64_t> user_id, item_id;
  EventLog log;
  log.d = X.cols();
  for (Index r = 0; r < X.rows(); ++r) {
    Event e;
    const auto u = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n_users)));
    const auto it = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n_items)));
    e.src = user_id.try_emplace(u, static_cast<std::int64_t>(user_id.size())).first->second;
    e.dst = item_id.try_emplace(it, static_cast<std::int64_t>(item_id.size())).first->second;
    e.t = static_cast<double>(r);
    e.features.resize(static_cast<std::size_t>(X.cols()));
    for (Index c = 0; c < X.cols(); ++c) e.features[static_cast<std::size_t>(c)] = X(r, c);
    log.events.push_back(std::move(e));
  }
  log.n_src = static_cast<std::int64_t>(user_id.size());
  log.n_dst = static_cast<std::int64_t>(item_id.size());
  return log;
}

}  // namespace swinit
