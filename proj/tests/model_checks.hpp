#pragma once

// Whole-pipeline checks shared by the unit tests and the acceptance driver.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "swinit/synthetic.hpp"
#include "swinit/train.hpp"

namespace checks {

using namespace swinit;

/// A 20-event batch whose nodes already carry memory from the 20 events
/// before it, plus a small model over a 4-dimensional spectral basis.
struct GradFixture {
  TrainConfig cfg;
  Model model;
  EncodedStream stream;
  BatchGraph batch;
  NegativeSet negatives;
};

inline GradFixture make_grad_fixture(std::uint64_t seed, Activation ufg_act = Activation::relu) {
  SynthSpec sp;
  sp.n_users = 12;
  sp.n_items = 6;
  sp.n_events = 60;
  sp.groups = 2;
  sp.noise = 0.3;
  sp.seed = seed;
  const EventLog log = make_synthetic_log(sp);

  GradFixture fx;
  fx.cfg.d_mem = 4;
  fx.cfg.d_embed = 5;
  fx.cfg.mem_hidden = 6;
  fx.cfg.head_hidden = 7;
  fx.cfg.cheb_order = 8;
  fx.cfg.levels = 2;
  fx.cfg.rank_lo = 2;
  fx.cfg.rank_hi = 4;
  fx.cfg.ufg_activation = ufg_act;
  fx.cfg.seed = seed;

  const Matrix X = log.feature_matrix();
  SpectralEncoding enc = spectral_encode(X, fx.cfg.spectral());
  fx.stream = make_encoded_stream(log, enc.project(X));
  Rng rng(derive_seed(seed, "init"));
  fx.model = Model::init(std::move(enc), fx.cfg, rng);

  // Move the framelet scales and the feature mix off their identity starting
  // point so every term of the chain rule is exercised.
  std::vector<std::int64_t> all(static_cast<std::size_t>(fx.stream.num_nodes));
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = static_cast<std::int64_t>(k);
  Matrix th(static_cast<Index>(all.size()), fx.model.theta.width());
  for (Index i = 0; i < th.rows(); ++i)
    for (Index j = 0; j < th.cols(); ++j) th(i, j) = 0.5 + rng.uniform();
  fx.model.theta.push(all, th);
  fx.model.W_feat += 0.3 * oracle::gaussian(fx.model.W_feat.rows(), fx.model.W_feat.cols(), rng);

  MemoryState state = MemoryState::zeros(fx.stream.num_nodes, fx.cfg.d_mem, fx.stream.msg_dim());
  advance_memory(state, fx.stream, 0, 20, fx.model.memory_fn);
  fx.batch = make_batch(fx.stream, 20, 40, state);
  Rng nrng(derive_seed(seed, "neg"));
  fx.negatives = negative_sample(fx.batch, 1.0, nrng);
  return fx;
}

/// Relative error of the analytic gradient against central differences, per
/// parameter group (max abs difference over the largest numeric entry).
inline std::map<std::string, double> pipeline_gradient_errors(GradFixture& fx) {
  Model& m = fx.model;
  const BatchOutput out = link_forward_backward(m, fx.batch, fx.negatives, true);
  auto loss = [&] { return link_forward_backward(m, fx.batch, fx.negatives, false).loss; };

  std::map<std::string, double> err;
  auto mlp_err = [&](Mlp& net, const MlpGrad& g) {
    double worst = 0.0;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      worst = std::max(worst, oracle::rel_error(g.dW[l], oracle::finite_difference(net.layers[l].W, loss)));
      worst = std::max(worst, oracle::rel_error(Matrix(g.db[l]), oracle::finite_difference(net.layers[l].b, loss)));
    }
    return worst;
  };
  err["memory_fn"] = mlp_err(m.memory_fn.net, out.grad.memory_fn);
  err["encoder"] = mlp_err(m.encoder, out.grad.encoder);
  err["link_head"] = mlp_err(m.link_head, out.grad.link_head);
  err["W_feat"] = oracle::rel_error(out.grad.W_feat, oracle::finite_difference(m.W_feat, loss));

  const auto& ids = fx.batch.node_ids;
  Matrix th = m.theta.pull(ids);
  const Matrix fd_theta = oracle::finite_difference(th, [&] {
    m.theta.push(ids, th);
    return loss();
  });
  m.theta.push(ids, th);
  err["theta"] = oracle::rel_error(out.grad.theta, fd_theta);

  const Matrix E = embed_batch(m, fx.batch);
  const BatchOutput node = node_forward_backward(m, fx.batch, E, true);
  double worst = 0.0;
  for (std::size_t l = 0; l < m.node_head.layers.size(); ++l) {
    auto nl = [&] { return node_forward_backward(m, fx.batch, E, false).loss; };
    worst = std::max(worst, oracle::rel_error(node.grad.node_head.dW[l], oracle::finite_difference(m.node_head.layers[l].W, nl)));
    worst = std::max(worst, oracle::rel_error(Matrix(node.grad.node_head.db[l]), oracle::finite_difference(m.node_head.layers[l].b, nl)));
  }
  err["node_head"] = worst;
  return err;
}

/// Synthetic stream for the leakage checks: 600 events, 12 batches of 50.
inline EventLog leakage_log() {
  SynthSpec sp;
  sp.n_users = 40;
  sp.n_items = 20;
  sp.n_events = 600;
  sp.groups = 4;
  sp.seed = 77;
  return make_synthetic_log(sp);
}

inline TrainConfig leakage_config() {
  TrainConfig cfg;
  cfg.batch_size = 50;
  cfg.max_epochs = 1;  // later epochs legitimately see every earlier batch
  cfg.patience = 0;
  cfg.d_mem = 6;
  cfg.d_embed = 6;
  cfg.mem_hidden = 6;
  cfg.head_hidden = 6;
  cfg.cheb_order = 6;
  cfg.rank_lo = 4;
  cfg.rank_hi = 8;
  cfg.node_epochs = 0;
  cfg.lr = 1e-3;
  cfg.seed = 3;
  return cfg;
}

/// Parameters right after training batch `i`, one snapshot per epoch.
inline std::vector<std::vector<double>> params_after(const EventLog& log, const TrainConfig& cfg, std::size_t i) {
  std::vector<std::vector<double>> snaps;
  train(log, cfg, [&](int, std::size_t b, const Model& m) {
    if (b == i) snaps.push_back(m.flatten());
  });
  return snaps;
}

/// Rewrites every event in batches i + 1 and i + 2: endpoints, state label
/// and (optionally) features. Timestamps are kept so the order is unchanged.
inline EventLog perturb_future(EventLog log, std::size_t B, std::size_t i, bool features, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t lo = (i + 1) * B, hi = std::min(log.size(), (i + 3) * B);
  for (std::size_t k = lo; k < hi; ++k) {
    Event& e = log.events[k];
    e.src = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(log.n_src)));
    e.dst = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(log.n_dst)));
    e.state_label = 1 - e.state_label;
    if (features)
      for (auto& f : e.features) f = 3.0 * rng.normal();
  }
  return log;
}

}  // namespace checks
