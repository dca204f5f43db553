#include "swinit/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "swinit/matrix_io.hpp"

namespace swinit {

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight decay must be non-negative");
  if (max_epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (patience < 0) throw std::invalid_argument("patience must be >= 0");
  if (d_mem < 1 || d_embed < 1 || mem_hidden < 1 || head_hidden < 1) throw std::invalid_argument("layer widths must be positive");
  if (!(neg_ratio_train > 0.0) || !(neg_ratio_eval > 0.0)) throw std::invalid_argument("negative ratios must be positive");
  if (cheb_order < 1) throw std::invalid_argument("Chebyshev order must be >= 1");
  if (levels < 1) throw std::invalid_argument("framelet levels must be >= 1");
  if (rank_lo < 1 || rank_lo > rank_hi) throw std::invalid_argument("rank bounds must satisfy 1 <= lo <= hi");
  if (svd_q < 1) throw std::invalid_argument("power iterations must be >= 1");
  if (node_epochs < 0) throw std::invalid_argument("node epochs must be >= 0");
  split.validate();
}

SpectralConfig TrainConfig::spectral() const {
  return {rank_lo, rank_hi, rank_tol, svd_q, derive_seed(seed, "svd")};
}

// ---------------------------------------------------------------------------
// Model

Model Model::init(SpectralEncoding enc, const TrainConfig& cfg, Rng& rng) {
  Model m;
  const Index dmsg = enc.rank;
  enc.Xt.resize(0, 0);
  m.encoding = std::move(enc);
  m.memory_fn = MessageFn::make(dmsg, cfg.d_mem, cfg.mem_hidden, rng);
  m.encoder = Mlp::make({dmsg + 2 * cfg.d_mem, cfg.d_embed}, {Activation::relu}, rng);
  m.W_feat = Matrix::Identity(cfg.d_embed, cfg.d_embed);
  m.filters = FilterBank::haar(cfg.cheb_order, cfg.levels);
  m.theta_mode = cfg.theta_mode;
  m.ufg_activation = cfg.ufg_activation;
  m.theta = ThetaStore(cfg.theta_mode == ThetaMode::shared ? 1 : m.filters.num_bands(), 1.0);
  m.link_head = Mlp::make({2 * cfg.d_embed, cfg.head_hidden, 1}, {Activation::relu, Activation::sigmoid}, rng);
  m.node_head = Mlp::make({cfg.d_embed, cfg.head_hidden, 1}, {Activation::relu, Activation::sigmoid}, rng);
  return m;
}

Index Model::network_param_count() const {
  return memory_fn.net.param_count() + encoder.param_count() + W_feat.size() + link_head.param_count() +
         node_head.param_count();
}

Index Model::param_count() const {
  return network_param_count() + static_cast<Index>(theta.size()) * theta.width();
}

std::vector<double> Model::flatten() const {
  std::vector<double> out;
  auto put = [&](const auto& M) {
    for (Index j = 0; j < M.cols(); ++j)
      for (Index i = 0; i < M.rows(); ++i) out.push_back(M(i, j));
  };
  for (const Mlp* net : {&memory_fn.net, &encoder, &link_head, &node_head})
    for (const auto& l : net->layers) {
      put(l.W);
      put(l.b);
    }
  put(W_feat);
  for (auto id : theta.sorted_ids()) {
    out.push_back(static_cast<double>(id));
    put(theta.at(id));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

struct EncoderPass {
  std::vector<Index> mem_rows;
  MlpContext fctx;
  MlpContext ectx;
  UfgContext uctx;
  Matrix embeddings;
};

void encoder_forward(const Model& model, const BatchGraph& b, EncoderPass& pass) {
  const Index n = b.num_nodes();
  const Index dm = b.mem_start.cols();
  const Index dmsg = b.msg.cols();
  pass.mem_rows.clear();
  for (Index a = 0; a < n; ++a)
    if (b.has_mem[static_cast<std::size_t>(a)]) pass.mem_rows.push_back(a);

  // Replay the last memory update with the current f so it receives gradient.
  Matrix fin(static_cast<Index>(pass.mem_rows.size()), dm + dmsg);
  for (std::size_t r = 0; r < pass.mem_rows.size(); ++r)
    fin.row(static_cast<Index>(r)) << b.mem_prev.row(pass.mem_rows[r]), b.mem_msg.row(pass.mem_rows[r]);
  Matrix mem_start = Matrix::Zero(n, dm);
  if (!pass.mem_rows.empty()) {
    const Matrix fout = mlp_forward(model.memory_fn.net, fin, &pass.fctx);
    for (std::size_t r = 0; r < pass.mem_rows.size(); ++r) mem_start.row(pass.mem_rows[r]) = fout.row(static_cast<Index>(r));
  }

  const Matrix H0 = assemble_node_features(b, mem_start);
  const Matrix Xe = mlp_forward(model.encoder, H0, &pass.ectx);
  const GraphLaplacian lap = normalized_laplacian(b.adjacency);
  const Matrix theta_local = model.theta.pull(b.node_ids);
  pass.embeddings = ufgconv_forward(lap, Xe, theta_local, model.W_feat, model.filters, model.ufg_activation, &pass.uctx);
}

void encoder_backward(const Model& model, const BatchGraph& b, const EncoderPass& pass, const Matrix& dE,
                      ModelGrad& g) {
  const UfgGrad ug = ufgconv_backward(pass.uctx, dE);
  g.W_feat = ug.dW;
  g.theta = ug.dTheta;
  const MlpGrad eg = mlp_backward(model.encoder, pass.ectx, ug.dX);
  g.encoder = eg;
  const Matrix dmem = node_features_backward(b, eg.dX);
  if (pass.mem_rows.empty()) {
    g.memory_fn = MlpGrad::zeros_like(model.memory_fn.net);
    return;
  }
  Matrix dfout(static_cast<Index>(pass.mem_rows.size()), dmem.cols());
  for (std::size_t r = 0; r < pass.mem_rows.size(); ++r) dfout.row(static_cast<Index>(r)) = dmem.row(pass.mem_rows[r]);
  g.memory_fn = mlp_backward(model.memory_fn.net, pass.fctx, dfout);
}

}  // namespace

double link_predict(const Vector& h_u, const Vector& h_v, const Mlp& head) {
  if (h_u.size() + h_v.size() != head.in_dim()) throw std::invalid_argument("link_predict: embedding widths do not match head");
  Matrix x(1, h_u.size() + h_v.size());
  x << h_u.transpose(), h_v.transpose();
  return mlp_forward(head, x)(0, 0);
}

Matrix embed_batch(const Model& model, const BatchGraph& batch) {
  EncoderPass pass;
  encoder_forward(model, batch, pass);
  return pass.embeddings;
}

BatchOutput link_forward_backward(const Model& model, const BatchGraph& b, const NegativeSet& negatives,
                                  bool need_grad, const std::vector<char>* positive_mask) {
  EncoderPass pass;
  encoder_forward(model, b, pass);
  const Matrix& E = pass.embeddings;
  const Index de = E.cols();

  std::vector<Index> ps, pd;
  BatchOutput out;
  for (std::size_t e = 0; e < b.num_events(); ++e) {
    if (positive_mask && !(*positive_mask)[e]) continue;
    ps.push_back(b.ev_src[e]);
    pd.push_back(b.ev_dst[e]);
    out.labels.push_back(1.0);
  }
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    ps.push_back(negatives.src[k]);
    pd.push_back(negatives.dst[k]);
    out.labels.push_back(0.0);
  }
  const auto np = static_cast<Index>(ps.size());
  out.embeddings = E;

  if (np == 0) {
    if (need_grad) {
      out.grad.memory_fn = MlpGrad::zeros_like(model.memory_fn.net);
      out.grad.encoder = MlpGrad::zeros_like(model.encoder);
      out.grad.link_head = MlpGrad::zeros_like(model.link_head);
      out.grad.W_feat = Matrix::Zero(model.W_feat.rows(), model.W_feat.cols());
      out.grad.theta = Matrix::Zero(b.num_nodes(), model.theta.width());
    }
    return out;
  }

  Matrix P(np, 2 * de);
  for (Index k = 0; k < np; ++k) P.row(k) << E.row(ps[static_cast<std::size_t>(k)]), E.row(pd[static_cast<std::size_t>(k)]);
  MlpContext hctx;
  const Matrix probs = mlp_forward(model.link_head, P, &hctx);
  out.probs.assign(probs.data(), probs.data() + np);
  const BceResult bce = bce_loss(out.probs, out.labels);
  out.loss = bce.loss;
  if (!std::isfinite(out.loss)) throw std::runtime_error("non-finite link loss");
  if (!need_grad) return out;

  const Matrix dprobs = Eigen::Map<const Vector>(bce.grad.data(), np);
  out.grad.link_head = mlp_backward(model.link_head, hctx, dprobs);
  const Matrix& dP = out.grad.link_head.dX;
  Matrix dE = Matrix::Zero(E.rows(), de);
  for (Index k = 0; k < np; ++k) {
    dE.row(ps[static_cast<std::size_t>(k)]) += dP.row(k).head(de);
    dE.row(pd[static_cast<std::size_t>(k)]) += dP.row(k).tail(de);
  }
  encoder_backward(model, b, pass, dE, out.grad);
  return out;
}

BatchOutput node_forward_backward(const Model& model, const BatchGraph& b, const Matrix& E, bool need_grad) {
  BatchOutput out;
  const auto ne = static_cast<Index>(b.num_events());
  if (ne == 0) return out;
  Matrix X(ne, E.cols());
  for (Index e = 0; e < ne; ++e) {
    X.row(e) = E.row(b.ev_src[static_cast<std::size_t>(e)]);
    out.labels.push_back(static_cast<double>(b.state_labels[static_cast<std::size_t>(e)]));
  }
  MlpContext ctx;
  const Matrix probs = mlp_forward(model.node_head, X, &ctx);
  out.probs.assign(probs.data(), probs.data() + ne);
  const BceResult bce = bce_loss(out.probs, out.labels);
  out.loss = bce.loss;
  if (need_grad) out.grad.node_head = mlp_backward(model.node_head, ctx, Eigen::Map<const Vector>(bce.grad.data(), ne));
  return out;
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

struct Prepared {
  SpectralEncoding encoding;
  EncodedStream stream;
};

Prepared prepare(const EventLog& log, const TrainConfig& cfg) {
  const Matrix X = log.feature_matrix();
  std::size_t fit_rows = log.size();
  if (cfg.svd_fit == SvdFit::train) fit_rows = std::max<std::size_t>(1, split_sizes(log.size(), cfg.split).train);
  Prepared p;
  const Matrix fit = X.topRows(static_cast<Index>(fit_rows));
  // A basis needs at least as many rows as columns; pad with zero rows otherwise.
  if (fit.rows() < fit.cols()) {
    Matrix padded = Matrix::Zero(fit.cols(), fit.cols());
    padded.topRows(fit.rows()) = fit;
    p.encoding = spectral_encode(padded, cfg.spectral());
  } else {
    p.encoding = spectral_encode(fit, cfg.spectral());
  }
  p.stream = make_encoded_stream(log, p.encoding.project(X));
  return p;
}

struct MlpMoments {
  std::vector<AdamMoments> W, b;
  void step(Mlp& net, const MlpGrad& g, const AdamWConfig& cfg) {
    W.resize(net.layers.size());
    b.resize(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      adamw_step(net.layers[l].W, g.dW[l], W[l], cfg);
      adamw_step(net.layers[l].b, g.db[l], b[l], cfg);
    }
  }
};

struct Optimizer {
  AdamWConfig cfg;
  MlpMoments memory_fn, encoder, link_head, node_head;
  AdamMoments W_feat;
  RowAdamW theta;

  void link_step(Model& m, const ModelGrad& g, const std::vector<std::int64_t>& nodes) {
    memory_fn.step(m.memory_fn.net, g.memory_fn, cfg);
    encoder.step(m.encoder, g.encoder, cfg);
    link_head.step(m.link_head, g.link_head, cfg);
    adamw_step(m.W_feat, g.W_feat, W_feat, cfg);
    Matrix theta_local = m.theta.pull(nodes);
    theta.step(theta_local, g.theta, nodes, cfg);
    m.theta.push(nodes, theta_local);
  }
};

struct Collected {
  std::vector<double> scores, labels;
  double loss_sum = 0.0;
  std::size_t batches = 0;

  void add(const BatchOutput& out) {
    scores.insert(scores.end(), out.probs.begin(), out.probs.end());
    labels.insert(labels.end(), out.labels.begin(), out.labels.end());
    loss_sum += out.loss;
    ++batches;
  }
  EvalReport report(const std::string& split) const {
    EvalReport r = make_report(split, scores, labels);
    r.loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    return r;
  }
};

std::pair<std::size_t, std::size_t> batch_range(std::size_t i, std::size_t B, std::size_t N) {
  return {i * B, std::min(N, (i + 1) * B)};
}

// Link predictions for batch i + 1 (validation) and i + 2 (test) given the
// memory after batch i. Neither the state nor the model is modified.
void score_ahead(const Model& model, const EncodedStream& stream, const MemoryState& state, std::size_t i,
                 const TrainConfig& cfg, int epoch, Collected& val, Collected& test, std::size_t& failed) {
  const std::size_t N = stream.size();
  const std::size_t B = cfg.batch_size;
  auto [v0, v1] = batch_range(i + 1, B, N);
  const BatchGraph vb = make_batch(stream, v0, v1, state);
  Rng vrng(negative_seed(cfg.seed, "val", i + 1, epoch));
  const NegativeSet vneg = negative_sample(vb, cfg.neg_ratio_eval, vrng);
  failed += vneg.failed;
  val.add(link_forward_backward(model, vb, vneg, false));

  MemoryState ahead = state;
  advance_memory(ahead, stream, v0, v1, model.memory_fn);
  auto [t0, t1] = batch_range(i + 2, B, N);
  const BatchGraph tb = make_batch(stream, t0, t1, ahead);
  Rng trng(negative_seed(cfg.seed, "test", i + 2, epoch));
  const NegativeSet tneg = negative_sample(tb, cfg.neg_ratio_eval, trng);
  failed += tneg.failed;
  test.add(link_forward_backward(model, tb, tneg, false));
}

// Embeddings of every batch under a frozen encoder. With fixed parameters the
// validation view of batch i + 1 and the test view of batch i + 2 coincide
// with their training views, so one pass serves all three roles.
std::vector<std::pair<BatchGraph, Matrix>> frozen_embeddings(const Model& model, const EncodedStream& stream,
                                                             std::size_t B) {
  std::vector<std::pair<BatchGraph, Matrix>> out;
  MemoryState state = MemoryState::zeros(stream.num_nodes, model.memory_fn.mem_dim(), stream.msg_dim());
  for (std::size_t begin = 0; begin < stream.size(); begin += B) {
    const std::size_t end = std::min(stream.size(), begin + B);
    BatchGraph b = make_batch(stream, begin, end, state);
    Matrix E = embed_batch(model, b);
    out.emplace_back(std::move(b), std::move(E));
    advance_memory(state, stream, begin, end, model.memory_fn);
  }
  return out;
}

void node_phase(Model& model, const EncodedStream& stream, const TrainConfig& cfg, EvalReport& val_rep,
                EvalReport& test_rep) {
  const auto views = frozen_embeddings(model, stream, cfg.batch_size);
  const std::size_t nt = views.size() >= 2 ? views.size() - 2 : 0;
  AdamWConfig acfg{cfg.lr, cfg.weight_decay};
  MlpMoments moments;
  Collected val, test;
  for (int epoch = 1; epoch <= std::max(cfg.node_epochs, 1); ++epoch) {
    val = {};
    test = {};
    const bool update = epoch <= cfg.node_epochs;
    for (std::size_t i = 0; i < nt; ++i) {
      if (update) {
        const auto out = node_forward_backward(model, views[i].first, views[i].second, true);
        moments.step(model.node_head, out.grad.node_head, acfg);
      }
      val.add(node_forward_backward(model, views[i + 1].first, views[i + 1].second, false));
      test.add(node_forward_backward(model, views[i + 2].first, views[i + 2].second, false));
    }
  }
  val_rep = val.report("node_val");
  test_rep = test.report("node_test");
}

}  // namespace

TrainResult train(const EventLog& log, const TrainConfig& cfg, const BatchObserver& observer) {
  cfg.validate();
  validate(log);
  const std::size_t N = log.size();
  const std::size_t nb = num_batches(N, cfg.batch_size);
  if (nb < 3) throw std::invalid_argument("train: need at least 3 batches (train, validation, test); got " + std::to_string(nb));
  const std::size_t nt = nb - 2;

  Prepared prep = prepare(log, cfg);
  const EncodedStream& stream = prep.stream;
  Rng init_rng(derive_seed(cfg.seed, "init"));
  Model model = Model::init(std::move(prep.encoding), cfg, init_rng);

  std::unordered_set<std::int64_t> unseen;
  if (cfg.split.inductive) {
    const Split split = chronological_split(log, cfg.split);
    unseen.insert(split.unseen_nodes.begin(), split.unseen_nodes.end());
  }

  Optimizer opt;
  opt.cfg = {cfg.lr, cfg.weight_decay};

  TrainResult result;
  result.num_batches = nb;
  Model best = model;
  double best_auc = -1.0;
  int since_best = 0;
  double total_seconds = 0.0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t_start = std::chrono::steady_clock::now();
    Collected tr, va, te;
    MemoryState state = MemoryState::zeros(stream.num_nodes, cfg.d_mem, stream.msg_dim());
    for (std::size_t i = 0; i < nt; ++i) {
      auto [b0, b1] = batch_range(i, cfg.batch_size, N);
      const BatchGraph batch = make_batch(stream, b0, b1, state);
      Rng rng(negative_seed(cfg.seed, "train", i, epoch));
      const NegativeSet negs = negative_sample(batch, cfg.neg_ratio_train, rng);
      result.failed_negatives += negs.failed;

      std::vector<char> mask;
      if (!unseen.empty()) {
        mask.resize(batch.num_events());
        for (std::size_t e = 0; e < batch.num_events(); ++e)
          mask[e] = !unseen.contains(stream.src[b0 + e]) && !unseen.contains(stream.dst[b0 + e]);
      }
      BatchOutput out = link_forward_backward(model, batch, negs, true, mask.empty() ? nullptr : &mask);
      if (!std::isfinite(out.loss)) throw std::runtime_error("training diverged at batch " + std::to_string(i));
      tr.add(out);
      try {
        opt.link_step(model, out.grad, batch.node_ids);
      } catch (const std::domain_error& e) {
        throw std::runtime_error("training diverged at batch " + std::to_string(i) + ": " + e.what());
      }
      advance_memory(state, stream, b0, b1, model.memory_fn);
      if (observer) observer(epoch, i, model);
      score_ahead(model, stream, state, i, cfg, epoch, va, te, result.failed_negatives);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    total_seconds += secs;
    const EvalReport rt = tr.report("train"), rv = va.report("val"), rs = te.report("test");
    for (const auto* r : {&rt, &rv, &rs}) result.history.push_back({epoch, r->split, r->precision, r->roc_auc, r->loss, secs});
    result.epochs_run = epoch;

    const double auc = std::isnan(rv.roc_auc) ? -1.0 : rv.roc_auc;
    if (auc > best_auc || result.best_epoch == 0) {
      best_auc = auc;
      best = model;
      result.best_epoch = epoch;
      result.train = rt;
      result.val = rv;
      result.test = rs;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  result.seconds_per_epoch = total_seconds / result.epochs_run;
  result.model = std::move(best);
  node_phase(result.model, stream, cfg, result.node_val, result.node_test);
  return result;
}

EvalResult evaluate(const Model& model, const EventLog& log, const TrainConfig& cfg) {
  validate(log);
  if (log.d != model.encoding.V.rows()) throw std::invalid_argument("evaluate: feature dimension does not match the checkpoint");
  const std::size_t N = log.size();
  const std::size_t nb = num_batches(N, cfg.batch_size);
  if (nb < 3) throw std::invalid_argument("evaluate: need at least 3 batches");
  const EncodedStream stream = make_encoded_stream(log, model.encoding.project(log.feature_matrix()));
  MemoryState state = MemoryState::zeros(stream.num_nodes, model.memory_fn.mem_dim(), stream.msg_dim());
  Collected va, te;
  std::size_t failed = 0;
  for (std::size_t i = 0; i + 2 < nb; ++i) {
    auto [b0, b1] = batch_range(i, cfg.batch_size, N);
    advance_memory(state, stream, b0, b1, model.memory_fn);
    score_ahead(model, stream, state, i, cfg, 0, va, te, failed);
  }
  EvalResult r;
  r.val = va.report("val");
  r.test = te.report("test");
  Model frozen = model;
  TrainConfig no_update = cfg;
  no_update.node_epochs = 0;
  node_phase(frozen, stream, no_update, r.node_val, r.node_test);
  return r;
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricRow>& rows) {
  os << "epoch,split,precision,roc_auc,loss,seconds\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%s,%.10g,%.10g,%.10g,%.6f\n", r.epoch, r.split.c_str(), r.precision, r.roc_auc,
                  r.loss, r.seconds);
    os << buf;
  }
}

// ---------------------------------------------------------------------------
// Checkpoint

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x4B435753;  // "SWCK"
constexpr std::uint32_t kCheckpointVersion = 1;

void write_mlp(std::ostream& os, const Mlp& net) {
  write_u64(os, net.layers.size());
  for (const auto& l : net.layers) {
    write_u32(os, static_cast<std::uint32_t>(l.act));
    write_matrix(os, l.W);
    write_matrix(os, Matrix(l.b));
  }
}

Mlp read_mlp(std::istream& is) {
  Mlp net;
  const auto n = read_u64(is);
  if (n > 64) throw std::runtime_error("checkpoint: implausible layer count");
  for (std::uint64_t i = 0; i < n; ++i) {
    Layer l;
    const auto act = read_u32(is);
    if (act > static_cast<std::uint32_t>(Activation::sigmoid)) throw std::runtime_error("checkpoint: bad activation tag");
    l.act = static_cast<Activation>(act);
    l.W = read_matrix(is);
    const Matrix b = read_matrix(is);
    l.b = b.col(0);
    net.layers.push_back(std::move(l));
  }
  return net;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, const TrainConfig& cfg, int epoch) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_u32(os, kCheckpointMagic);
  write_u32(os, kCheckpointVersion);
  // Run configuration needed to rebuild batches and derived RNG streams.
  write_u64(os, cfg.batch_size);
  write_u64(os, static_cast<std::uint64_t>(cfg.d_mem));
  write_u64(os, static_cast<std::uint64_t>(cfg.d_embed));
  write_u64(os, static_cast<std::uint64_t>(cfg.cheb_order));
  write_u64(os, static_cast<std::uint64_t>(cfg.levels));
  write_u32(os, static_cast<std::uint32_t>(model.theta_mode));
  write_u32(os, static_cast<std::uint32_t>(model.ufg_activation));
  write_f64(os, cfg.neg_ratio_eval);
  write_u64(os, cfg.seed);
  write_u64(os, static_cast<std::uint64_t>(epoch));

  SpectralEncoding enc = model.encoding;
  enc.Xt.resize(0, 0);
  write_encoding(os, enc);
  write_mlp(os, model.memory_fn.net);
  write_mlp(os, model.encoder);
  write_matrix(os, model.W_feat);
  write_mlp(os, model.link_head);
  write_mlp(os, model.node_head);
  write_theta_store(os, model.theta);
}

Model load_checkpoint(const std::string& path, TrainConfig* cfg, int* epoch) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  if (read_u32(is) != kCheckpointMagic) throw std::runtime_error("not a checkpoint file: " + path);
  if (read_u32(is) != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version");
  TrainConfig c;
  c.batch_size = read_u64(is);
  c.d_mem = static_cast<Index>(read_u64(is));
  c.d_embed = static_cast<Index>(read_u64(is));
  c.cheb_order = static_cast<int>(read_u64(is));
  c.levels = static_cast<int>(read_u64(is));
  Model m;
  m.theta_mode = static_cast<ThetaMode>(read_u32(is));
  m.ufg_activation = static_cast<Activation>(read_u32(is));
  c.theta_mode = m.theta_mode;
  c.ufg_activation = m.ufg_activation;
  c.neg_ratio_eval = read_f64(is);
  c.seed = read_u64(is);
  const auto ep = static_cast<int>(read_u64(is));

  m.encoding = read_encoding(is);
  m.memory_fn.net = read_mlp(is);
  m.encoder = read_mlp(is);
  m.W_feat = read_matrix(is);
  m.link_head = read_mlp(is);
  m.node_head = read_mlp(is);
  m.theta = read_theta_store(is);
  m.filters = FilterBank::haar(c.cheb_order, c.levels);
  if (cfg) *cfg = c;
  if (epoch) *epoch = ep;
  return m;
}

}  // namespace swinit
