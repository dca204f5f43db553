#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>

#include "model_checks.hpp"
#include "oracles.hpp"

using namespace swinit;

namespace {

Mlp tiny_tanh_mlp(Rng& rng) {
  // 3 -> 3 -> 2: 12 + 8 = 20 parameters.
  return Mlp::make({3, 3, 2}, {Activation::tanh, Activation::identity}, rng);
}

Matrix naive_mlp(const Mlp& net, const Matrix& X) {
  Matrix H = X;
  for (const auto& l : net.layers) {
    Matrix Z = oracle::naive_gemm(H, l.W);
    for (Index i = 0; i < Z.rows(); ++i) Z.row(i) += l.b.transpose();
    apply_activation(l.act, Z);
    H = Z;
  }
  return H;
}

}  // namespace

TEST_CASE("mlp forward") {
  Rng rng(1);
  SUBCASE("identity layer with zero bias") {
    Mlp net;
    net.layers.push_back({Matrix::Identity(3, 3), Vector::Zero(3), Activation::identity});
    const Matrix X = oracle::gaussian(4, 3, rng);
    CHECK(mlp_forward(net, X) == X);
  }
  SUBCASE("relu clips negatives") {
    Mlp net;
    net.layers.push_back({Matrix::Identity(2, 2), Vector::Zero(2), Activation::relu});
    Matrix X(1, 2);
    X << -1.5, 2.0;
    const Matrix Y = mlp_forward(net, X);
    CHECK(Y(0, 0) == 0.0);
    CHECK(Y(0, 1) == 2.0);
  }
  SUBCASE("matches a naive oracle") {
    const Mlp net = Mlp::make({5, 4, 3}, {Activation::tanh, Activation::sigmoid}, rng);
    const Matrix X = oracle::gaussian(6, 5, rng);
    CHECK((mlp_forward(net, X) - naive_mlp(net, X)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("glorot init and zero bias") {
    const Mlp net = Mlp::make({10, 30}, {Activation::relu}, rng);
    CHECK(net.layers[0].W.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 40.0));
    CHECK(net.layers[0].b.isZero());
    CHECK(net.param_count() == 330);
  }
  CHECK_THROWS_AS(Mlp::make({3}, {}, rng), std::invalid_argument);
  CHECK_THROWS_AS(parse_activation("gelu"), std::invalid_argument);
}

TEST_CASE("mlp backward") {
  Rng rng(2);
  SUBCASE("two-layer tanh net against central differences") {
    Mlp net = tiny_tanh_mlp(rng);
    REQUIRE(net.param_count() == 20);
    const Matrix X = oracle::gaussian(5, 3, rng);
    const Matrix T = oracle::gaussian(5, 2, rng);
    auto loss = [&] { return 0.5 * (mlp_forward(net, X) - T).squaredNorm(); };
    MlpContext ctx;
    const Matrix Y = mlp_forward(net, X, &ctx);
    const MlpGrad g = mlp_backward(net, ctx, Y - T);
    for (std::size_t l = 0; l < 2; ++l) {
      CHECK(oracle::rel_error(g.dW[l], oracle::finite_difference(net.layers[l].W, loss)) < 1e-4);
      CHECK(oracle::rel_error(Matrix(g.db[l]), oracle::finite_difference(net.layers[l].b, loss)) < 1e-4);
    }
    Matrix Xv = X;
    auto loss_x = [&] { return 0.5 * (mlp_forward(net, Xv) - T).squaredNorm(); };
    CHECK(oracle::rel_error(g.dX, oracle::finite_difference(Xv, loss_x)) < 1e-4);
  }
  SUBCASE("zero upstream gives zero gradients") {
    const Mlp net = tiny_tanh_mlp(rng);
    MlpContext ctx;
    const Matrix X = oracle::gaussian(4, 3, rng);
    mlp_forward(net, X, &ctx);
    const MlpGrad g = mlp_backward(net, ctx, Matrix::Zero(4, 2));
    for (std::size_t l = 0; l < 2; ++l) {
      CHECK(g.dW[l].isZero(0.0));
      CHECK(g.db[l].isZero(0.0));
    }
    CHECK(g.dX.isZero(0.0));
  }
  SUBCASE("single linear layer: dW = X^T G") {
    const Mlp net = Mlp::make({4, 3}, {Activation::identity}, rng);
    MlpContext ctx;
    const Matrix X = oracle::gaussian(7, 4, rng);
    mlp_forward(net, X, &ctx);
    const Matrix G = oracle::gaussian(7, 3, rng);
    const MlpGrad g = mlp_backward(net, ctx, G);
    CHECK((g.dW[0] - oracle::naive_gemm(oracle::naive_transpose(X), G)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g.db[0] - G.colwise().sum().transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("stale context is rejected") {
    const Mlp net = tiny_tanh_mlp(rng);
    const Mlp other = Mlp::make({3, 2}, {Activation::identity}, rng);
    MlpContext ctx;
    mlp_forward(other, oracle::gaussian(2, 3, rng), &ctx);
    CHECK_THROWS_AS(mlp_backward(net, ctx, Matrix::Zero(2, 2)), std::logic_error);
  }
}

TEST_CASE("link_predict") {
  Rng rng(3);
  Mlp head = Mlp::make({6, 4, 1}, {Activation::relu, Activation::sigmoid}, rng);
  const Vector hu = oracle::gaussian(3, 1, rng), hv = oracle::gaussian(3, 1, rng);

  SUBCASE("zero output layer gives one half") {
    head.layers[1].W.setZero();
    CHECK(link_predict(hu, hv, head) == 0.5);
  }
  SUBCASE("large bias saturates") {
    head.layers[1].W.setZero();
    head.layers[1].b(0) = 40.0;
    CHECK(link_predict(hu, hv, head) > 1.0 - 1e-12);
  }
  SUBCASE("matches the naive oracle on the concatenation") {
    Matrix x(1, 6);
    x << hu.transpose(), hv.transpose();
    CHECK(std::abs(link_predict(hu, hv, head) - naive_mlp(head, x)(0, 0)) < 1e-12);
  }
  CHECK_THROWS_AS(link_predict(Vector::Ones(2), hv, head), std::invalid_argument);
}

TEST_CASE("negative sampling") {
  SynthSpec sp;
  sp.n_users = 300;
  sp.n_items = 200;
  sp.n_events = 1000;
  sp.seed = 4;
  const EventLog log = make_synthetic_log(sp);
  const EncodedStream stream = make_encoded_stream(log, log.feature_matrix());
  const MemoryState mem = MemoryState::zeros(stream.num_nodes, 2, stream.msg_dim());
  const BatchGraph b = make_batch(stream, 0, 1000, mem);

  SUBCASE("about half of the positives at ratio 0.5, none colliding with edges") {
    Rng rng(5);
    const NegativeSet n = negative_sample(b, 0.5, rng);
    CHECK(n.size() > 430);
    CHECK(n.size() < 570);
    CHECK(n.failed == 0);
    std::set<std::pair<Index, Index>> edges;
    for (std::size_t e = 0; e < b.num_events(); ++e) edges.insert({b.ev_src[e], b.ev_dst[e]});
    for (std::size_t k = 0; k < n.size(); ++k) {
      CHECK_FALSE(edges.contains({n.src[k], n.dst[k]}));
      CHECK(std::find(b.ev_dst.begin(), b.ev_dst.end(), n.dst[k]) != b.ev_dst.end());
    }
  }
  SUBCASE("same seed, same negatives") {
    Rng r1(6), r2(6);
    const NegativeSet a = negative_sample(b, 0.5, r1), c = negative_sample(b, 0.5, r2);
    CHECK(a.src == c.src);
    CHECK(a.dst == c.dst);
  }
  SUBCASE("complete bipartite batch has nothing to corrupt") {
    EventLog full;
    full.d = 1;
    full.n_src = 3;
    full.n_dst = 2;
    double t = 0;
    for (std::int64_t u = 0; u < 3; ++u)
      for (std::int64_t v = 0; v < 2; ++v) full.events.push_back({u, v, t++, {1.0}, 0});
    const EncodedStream s = make_encoded_stream(full, full.feature_matrix());
    const BatchGraph fb = make_batch(s, 0, 6, MemoryState::zeros(s.num_nodes, 1, 1));
    Rng rng(7);
    const NegativeSet n = negative_sample(fb, 1.0, rng);
    CHECK(n.size() == 0);
    CHECK(n.failed == 6);
  }
  SUBCASE("test negatives ignore the epoch") {
    CHECK(negative_seed(1, "test", 4, 1) == negative_seed(1, "test", 4, 9));
    CHECK(negative_seed(1, "train", 4, 1) != negative_seed(1, "train", 4, 2));
    CHECK(negative_seed(1, "val", 4, 1) != negative_seed(1, "val", 4, 2));
    CHECK(negative_seed(1, "train", 4, 1) != negative_seed(1, "val", 4, 1));
  }
}

TEST_CASE("binary cross-entropy") {
  const std::vector<double> p{1.0, 0.0}, y{1.0, 0.0};
  CHECK(bce_loss(p, y).loss < 1e-6);
  const std::vector<double> half{0.5, 0.5};
  CHECK(std::abs(bce_loss(half, y).loss - std::log(2.0)) < 1e-12);
  Rng rng(8);
  std::vector<double> pr(50), lb(50);
  for (std::size_t i = 0; i < 50; ++i) {
    pr[i] = 0.01 + 0.98 * rng.uniform();
    lb[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  }
  double ref = 0.0;
  for (std::size_t i = 0; i < 50; ++i) ref -= lb[i] * std::log(pr[i]) + (1 - lb[i]) * std::log(1 - pr[i]);
  const BceResult r = bce_loss(pr, lb);
  CHECK(std::abs(r.loss - ref / 50.0) < 1e-12);
  // d/dp of the mean loss
  for (std::size_t i = 0; i < 50; ++i)
    CHECK(std::abs(r.grad[i] - (-(lb[i] / pr[i]) + (1 - lb[i]) / (1 - pr[i])) / 50.0) < 1e-12);
  CHECK_THROWS_AS(bce_loss(pr, half), std::invalid_argument);
}

TEST_CASE("adamw") {
  AdamWConfig cfg{1e-2, 0.1};
  SUBCASE("zero gradient only applies the decay") {
    Matrix w = Matrix::Constant(2, 2, 3.0);
    AdamMoments st;
    adamw_step(w, Matrix::Zero(2, 2), st, cfg);
    CHECK((w.array() == 3.0 * (1.0 - 1e-2 * 0.1)).all());
  }
  SUBCASE("two steps follow the hand recurrence") {
    Matrix w(1, 1);
    w << 1.0;
    AdamMoments st;
    const double g1 = 0.4, g2 = -1.2;
    double p = 1.0, m = 0, v = 0;
    int t = 0;
    for (double g : {g1, g2}) {
      ++t;
      m = 0.9 * m + 0.1 * g;
      v = 0.999 * v + 0.001 * g * g;
      const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
      p = p * (1 - 1e-3) - 1e-2 * mh / (std::sqrt(vh) + 1e-8);
      Matrix gm(1, 1);
      gm << g;
      adamw_step(w, gm, st, cfg);
      CHECK(std::abs(w(0, 0) - p) < 1e-15);
    }
    CHECK(st.step == 2);
  }
  SUBCASE("opposite gradients move symmetrically") {
    Matrix a = Matrix::Zero(1, 3), b = Matrix::Zero(1, 3);
    AdamMoments sa, sb;
    Matrix g(1, 3);
    g << 0.3, -2.0, 5.0;
    adamw_step(a, g, sa, cfg);
    adamw_step(b, Matrix(-g), sb, cfg);
    CHECK((a + b).cwiseAbs().maxCoeff() == 0.0);
    // The first bias-corrected step has magnitude lr in every coordinate.
    CHECK((a.cwiseAbs().array() - 1e-2).abs().maxCoeff() < 1e-9);
  }
  SUBCASE("non-finite gradient") {
    Matrix w = Matrix::Ones(1, 2);
    Matrix g(1, 2);
    g << 1.0, std::nan("");
    AdamMoments st;
    CHECK_THROWS_AS(adamw_step(w, g, st, cfg), std::domain_error);
    CHECK_THROWS_AS(adamw_step(w, Matrix::Ones(2, 2), st, cfg), std::invalid_argument);
  }
  SUBCASE("per-row moments follow the key") {
    RowAdamW opt;
    Matrix rows = Matrix::Zero(2, 1), g = Matrix::Ones(2, 1);
    opt.step(rows, g, {5, 9}, cfg);
    Matrix one = rows.topRows(1);
    opt.step(one, Matrix::Ones(1, 1), {5}, cfg);
    Matrix fresh = Matrix::Zero(1, 1);
    RowAdamW opt2;
    opt2.step(fresh, Matrix::Ones(1, 1), {5}, cfg);
    opt2.step(fresh, Matrix::Ones(1, 1), {5}, cfg);
    CHECK(one(0, 0) == fresh(0, 0));
  }
}

TEST_CASE("precision and ROC-AUC") {
  SUBCASE("perfect ranking") {
    const std::vector<double> s{0.9, 0.8, 0.3, 0.1}, y{1, 1, 0, 0};
    CHECK(roc_auc(s, y) == 1.0);
    CHECK(precision(s, y) == 1.0);
  }
  SUBCASE("reversed ranking") {
    const std::vector<double> s{0.1, 0.2, 0.8, 0.9}, y{1, 1, 0, 0};
    CHECK(roc_auc(s, y) == 0.0);
    CHECK(precision(s, y) == 0.0);
  }
  SUBCASE("all ties give one half") {
    const std::vector<double> s(6, 0.4), y{1, 0, 1, 0, 0, 1};
    CHECK(roc_auc(s, y) == 0.5);
    bool none = false;
    CHECK(precision(s, y, 0.5, &none) == 0.0);
    CHECK(none);
  }
  SUBCASE("threshold is inclusive") {
    const std::vector<double> s{0.5, 0.49}, y{1, 1};
    CHECK(precision(s, y) == 1.0);
  }
  SUBCASE("single class is an error") {
    const std::vector<double> s{0.1, 0.2}, y{1, 1};
    CHECK_THROWS_AS(roc_auc(s, y), std::invalid_argument);
    EvalReport r = make_report("x", s, y);
    CHECK(std::isnan(r.roc_auc));
  }
  SUBCASE("pair counting oracle with ties, 20 samples") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> s(20), y(20);
      for (std::size_t i = 0; i < 20; ++i) {
        s[i] = std::floor(rng.uniform() * 6.0) / 6.0;
        y[i] = i < 2 ? static_cast<double>(i) : (rng.bernoulli(0.4) ? 1.0 : 0.0);
      }
      CHECK(roc_auc(s, y) == oracle::auc_pairs(s, y));
    }
  }
  SUBCASE("invariant under strictly increasing transforms") {
    Rng rng(10);
    std::vector<double> s(40), y(40), t(40);
    for (std::size_t i = 0; i < 40; ++i) {
      s[i] = rng.normal();
      y[i] = i % 3 == 0 ? 1.0 : 0.0;
      t[i] = std::exp(3.0 * s[i]) + 7.0;
    }
    CHECK(roc_auc(s, y) == roc_auc(t, y));
  }
}

TEST_CASE("full pipeline gradients against central differences") {
  for (Activation act : {Activation::relu, Activation::tanh}) {
    CAPTURE(to_string(act));
    checks::GradFixture fx = checks::make_grad_fixture(11, act);
    REQUIRE(fx.batch.num_events() == 20);
    REQUIRE(std::count(fx.batch.has_mem.begin(), fx.batch.has_mem.end(), 1) > 0);
    REQUIRE(fx.negatives.size() > 0);
    for (const auto& [group, err] : checks::pipeline_gradient_errors(fx)) {
      CAPTURE(group);
      CHECK(err < 1e-3);
    }
  }
}

TEST_CASE("parameters after batch i do not depend on batches i + 1 and i + 2") {
  const EventLog log = checks::leakage_log();
  const TrainConfig cfg = checks::leakage_config();
  REQUIRE(num_batches(log.size(), cfg.batch_size) == 12);
  // The spectral basis is fit on the first 70% (420 events = batches 0..8),
  // so feature perturbations are only applied past that prefix.
  SUBCASE("endpoints and labels, early batch") {
    const auto ref = checks::params_after(log, cfg, 2);
    const auto got = checks::params_after(checks::perturb_future(log, cfg.batch_size, 2, false, 1), cfg, 2);
    REQUIRE(ref.size() == 1);
    CHECK(ref == got);
  }
  SUBCASE("everything including features, after the fit prefix") {
    const auto ref = checks::params_after(log, cfg, 8);
    const auto got = checks::params_after(checks::perturb_future(log, cfg.batch_size, 8, true, 2), cfg, 8);
    REQUIRE(ref.size() == 1);
    CHECK(ref == got);
  }
  SUBCASE("the check is sensitive: perturbing batch i itself changes the result") {
    const auto ref = checks::params_after(log, cfg, 3);
    const auto got = checks::params_after(checks::perturb_future(log, cfg.batch_size, 2, false, 3), cfg, 3);
    CHECK(ref != got);
  }
}

namespace {

EventLog small_stream(std::size_t n = 1000, std::uint64_t seed = 12) {
  SynthSpec sp;
  sp.n_users = 60;
  sp.n_items = 30;
  sp.n_events = n;
  sp.groups = 4;
  sp.seed = seed;
  return make_synthetic_log(sp);
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.batch_size = 100;
  cfg.max_epochs = 3;
  cfg.patience = 0;
  cfg.d_mem = 8;
  cfg.d_embed = 8;
  cfg.mem_hidden = 8;
  cfg.head_hidden = 8;
  cfg.cheb_order = 8;
  cfg.rank_lo = 4;
  cfg.rank_hi = 8;
  cfg.lr = 1e-3;
  cfg.node_epochs = 2;
  return cfg;
}

}  // namespace

TEST_CASE("training is deterministic") {
  const EventLog log = small_stream();
  const TrainConfig cfg = small_config();
  const TrainResult a = train(log, cfg), b = train(log, cfg);
  CHECK(a.model.flatten() == b.model.flatten());
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t k = 0; k < a.history.size(); ++k) {
    CHECK(a.history[k].roc_auc == b.history[k].roc_auc);
    CHECK(a.history[k].loss == b.history[k].loss);
  }
  const bool same_node = a.node_test.roc_auc == b.node_test.roc_auc || (std::isnan(a.node_test.roc_auc) && std::isnan(b.node_test.roc_auc));
  CHECK(same_node);
  TrainConfig other = cfg;
  other.seed = 99;
  CHECK(train(log, other).model.flatten() != a.model.flatten());
}

TEST_CASE("framelet scales are stored exactly for trained nodes") {
  const EventLog log = small_stream(1000, 13);
  TrainConfig cfg = small_config();
  cfg.max_epochs = 1;
  const TrainResult r = train(log, cfg);
  const std::size_t nt = training_batches(log.size(), cfg.batch_size);
  std::set<std::int64_t> trained;
  for (std::size_t k = 0; k < nt * cfg.batch_size; ++k) {
    trained.insert(log.src_node(log.events[k]));
    trained.insert(log.dst_node(log.events[k]));
  }
  const auto ids = r.model.theta.sorted_ids();
  CHECK(std::set<std::int64_t>(ids.begin(), ids.end()) == trained);
  // Nodes first seen in the last two batches start from the default scale.
  std::int64_t late = -1;
  for (std::size_t k = nt * cfg.batch_size; k < log.size() && late < 0; ++k)
    if (!trained.contains(log.src_node(log.events[k]))) late = log.src_node(log.events[k]);
  if (late >= 0) {
    CHECK_FALSE(r.model.theta.contains(late));
    CHECK((r.model.theta.pull({late}).array() == 1.0).all());
  }
}

TEST_CASE("training loss decreases on a separable stream") {
  const EventLog log = small_stream(1500, 14);
  TrainConfig cfg = small_config();
  cfg.max_epochs = 12;
  cfg.node_epochs = 0;
  const TrainResult r = train(log, cfg);
  std::vector<double> loss;
  for (const auto& row : r.history)
    if (row.split == "train") loss.push_back(row.loss);
  REQUIRE(loss.size() == 12);
  // Three-epoch moving average must not increase.
  for (std::size_t k = 3; k + 2 < loss.size(); ++k) {
    const double prev = loss[k - 1] + loss[k - 2] + loss[k - 3];
    const double cur = loss[k] + loss[k + 1] + loss[k + 2];
    CHECK(cur <= prev);
  }
  CHECK(loss.back() < loss.front());
}

TEST_CASE("early stopping and history layout") {
  const EventLog log = small_stream();
  TrainConfig cfg = small_config();
  cfg.max_epochs = 4;
  const TrainResult r = train(log, cfg);
  CHECK(r.epochs_run == 4);
  CHECK(r.history.size() == 12);
  CHECK(r.history[0].split == "train");
  CHECK(r.history[1].split == "val");
  CHECK(r.history[2].split == "test");
  CHECK(r.best_epoch >= 1);
  CHECK(r.best_epoch <= 4);
  std::ostringstream csv;
  write_metrics_csv(csv, r.history);
  CHECK(csv.str().rfind("epoch,split,precision,roc_auc,loss,seconds\n", 0) == 0);
  const std::string text = csv.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 13);
}

TEST_CASE("configuration and stream validation") {
  const EventLog log = small_stream(250);
  TrainConfig cfg = small_config();
  cfg.batch_size = 100;
  cfg.max_epochs = 1;
  CHECK_NOTHROW(train(log, cfg));  // 3 batches, the last one partial
  cfg.batch_size = 200;
  CHECK_THROWS_AS(train(log, cfg), std::invalid_argument);  // only 2 batches
  TrainConfig bad = small_config();
  bad.lr = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small_config();
  bad.rank_lo = 9;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("checkpoint round trip and evaluation") {
  const EventLog log = small_stream();
  TrainConfig cfg = small_config();
  cfg.max_epochs = 2;
  const TrainResult r = train(log, cfg);
  const auto path = std::filesystem::temp_directory_path() / "swinit_ckpt_test.bin";
  save_checkpoint(path.string(), r.model, cfg, r.best_epoch);
  TrainConfig back_cfg;
  int epoch = 0;
  const Model back = load_checkpoint(path.string(), &back_cfg, &epoch);
  std::filesystem::remove(path);
  CHECK(back.flatten() == r.model.flatten());
  CHECK(epoch == r.best_epoch);
  CHECK(back_cfg.batch_size == cfg.batch_size);
  CHECK(back_cfg.seed == cfg.seed);
  CHECK(back.encoding.V == r.model.encoding.V);

  const EvalResult a = evaluate(r.model, log, cfg), b = evaluate(back, log, cfg);
  CHECK(a.test.roc_auc == b.test.roc_auc);
  CHECK(a.val.roc_auc == b.val.roc_auc);
  CHECK(a.test.roc_auc > 0.0);

  CHECK_THROWS(load_checkpoint("/nonexistent/ckpt.bin"));
}

TEST_CASE("batch arithmetic and parameter budget") {
  CHECK(training_batches(157474, 1000) == 156);
  CHECK(training_batches(2000, 1000) == 0);
  CHECK(training_batches(2001, 1000) == 1);

  // Default widths over a 100-dimensional basis.
  SpectralEncoding enc;
  enc.rank = 100;
  enc.V = Matrix::Zero(172, 100);
  TrainConfig cfg;
  Rng rng(15);
  const Model m = Model::init(enc, cfg, rng);
  CHECK(m.theta.width() == 3);
  CHECK(m.param_count() == m.network_param_count());
  CHECK(m.network_param_count() <= 170000 - 3 * 9227);
  TrainConfig shared = cfg;
  shared.theta_mode = ThetaMode::shared;
  CHECK(Model::init(enc, shared, rng).theta.width() == 1);
}
