// Command-line front end: train, eval, svd-inspect, framelet-check, attn-gap
// and synth (fixture generator).
//
// Exit codes: 0 success, 1 property or runtime failure, 2 usage or input error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "swinit/diagnostics.hpp"
#include "swinit/synthetic.hpp"
#include "swinit/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace swinit;

namespace {

/// Bad input supplied by the user (exit 2).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  TrainConfig cfg;
  std::string data;
  std::string out;
  std::string checkpoint;
  std::string svd_fit = "train";
  std::string theta_mode = "per_band";
  std::string activation = "relu";
  // framelet-check
  int graphs = 10;
  Index nodes = 0;  // 0: random size per graph
  double edge_prob = 0.3;
  int features = 4;
  // attn-gap
  Index rank = 0;
  std::vector<int> qs{1, 2, 3};
  // synth
  std::string kind = "interactions";
  SynthSpec synth;
  Index rows = 400;
  Index cols = 120;
  double decay = 0.97;
  Index low_rank = 10;
};

EventLog load_log(const std::string& path) {
  if (path.empty()) throw InputError("--data is required");
  if (!fs::exists(path)) throw InputError("dataset not found: '" + path + "'");
  try {
    return parse_jodie_csv(path);
  } catch (const ParseError& e) {
    throw InputError(path + ": " + e.what());
  }
}

void finish_config(Options& o) {
  auto& c = o.cfg;
  if (o.svd_fit == "train")
    c.svd_fit = SvdFit::train;
  else if (o.svd_fit == "all")
    c.svd_fit = SvdFit::all;
  else
    throw InputError("--svd-fit must be 'all' or 'train'");
  if (o.theta_mode == "per_band")
    c.theta_mode = ThetaMode::per_band;
  else if (o.theta_mode == "shared")
    c.theta_mode = ThetaMode::shared;
  else
    throw InputError("--theta-mode must be 'per_band' or 'shared'");
  try {
    c.ufg_activation = parse_activation(o.activation);
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

json report_json(const EvalReport& r) {
  return {{"precision", r.precision}, {"roc_auc", r.roc_auc}, {"loss", r.loss}, {"n_pos", r.n_pos}, {"n_neg", r.n_neg}};
}

json config_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"epochs", c.max_epochs},
          {"patience", c.patience},
          {"d_mem", c.d_mem},
          {"d_embed", c.d_embed},
          {"mem_hidden", c.mem_hidden},
          {"head_hidden", c.head_hidden},
          {"neg_ratio", c.neg_ratio_train},
          {"cheb_order", c.cheb_order},
          {"levels", c.levels},
          {"theta_mode", c.theta_mode == ThetaMode::shared ? "shared" : "per_band"},
          {"activation", to_string(c.ufg_activation)},
          {"svd_fit", c.svd_fit == SvdFit::all ? "all" : "train"},
          {"rank_lo", c.rank_lo},
          {"rank_hi", c.rank_hi},
          {"rank_tol", c.rank_tol},
          {"svd_q", c.svd_q},
          {"inductive", c.split.inductive},
          {"node_epochs", c.node_epochs},
          {"seed", c.seed}};
}

fs::path ensure_dir(const std::string& out, const char* fallback) {
  fs::path dir = out.empty() ? fs::path(fallback) : fs::path(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << j.dump(2) << "\n";
}

int cmd_train(Options& o) {
  finish_config(o);
  const EventLog log = load_log(o.data);
  const fs::path dir = ensure_dir(o.out, "swinit_run");
  TrainResult r;
  try {
    r = train(log, o.cfg, [](int epoch, std::size_t batch, const Model&) {
      if (batch == 0) std::fprintf(stderr, "epoch %d\n", epoch);
    });
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  save_checkpoint((dir / "checkpoint.bin").string(), r.model, o.cfg, r.best_epoch);
  {
    std::ofstream os(dir / "metrics.csv");
    write_metrics_csv(os, r.history);
  }
  const json summary = {{"dataset", o.data},
                        {"num_events", log.size()},
                        {"num_nodes", log.num_nodes()},
                        {"feature_dim", log.d},
                        {"rank", r.model.encoding.rank},
                        {"svd_rel_err", r.model.encoding.err},
                        {"param_count", r.model.param_count()},
                        {"network_param_count", r.model.network_param_count()},
                        {"epochs_run", r.epochs_run},
                        {"best_epoch", r.best_epoch},
                        {"num_batches", r.num_batches},
                        {"seconds_per_epoch", r.seconds_per_epoch},
                        {"failed_negatives", r.failed_negatives},
                        {"train", report_json(r.train)},
                        {"val", report_json(r.val)},
                        {"test", report_json(r.test)},
                        {"node_val", report_json(r.node_val)},
                        {"node_test", report_json(r.node_test)},
                        {"config", config_json(o.cfg)}};
  write_json(dir / "summary.json", summary);
  std::printf("parameters: %lld\n", static_cast<long long>(r.model.param_count()));
  std::printf("rank: %lld (rel err %.4g)\n", static_cast<long long>(r.model.encoding.rank), r.model.encoding.err);
  std::printf("best epoch %d of %d, %.3f s/epoch\n", r.best_epoch, r.epochs_run, r.seconds_per_epoch);
  std::printf("test precision %.4f roc_auc %.4f\n", r.test.precision, r.test.roc_auc);
  std::printf("wrote %s\n", dir.string().c_str());
  return 0;
}

int cmd_eval(Options& o) {
  if (o.checkpoint.empty()) throw InputError("--checkpoint is required");
  if (!fs::exists(o.checkpoint)) throw InputError("checkpoint not found: '" + o.checkpoint + "'");
  TrainConfig saved;
  int epoch = 0;
  Model model;
  try {
    model = load_checkpoint(o.checkpoint, &saved, &epoch);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  const EventLog log = load_log(o.data);
  EvalResult r;
  try {
    r = evaluate(model, log, saved);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  const json j = {{"checkpoint", o.checkpoint},
                  {"epoch", epoch},
                  {"val", report_json(r.val)},
                  {"test", report_json(r.test)},
                  {"node_val", report_json(r.node_val)},
                  {"node_test", report_json(r.node_test)}};
  std::cout << j.dump(2) << "\n";
  if (!o.out.empty()) write_json(o.out, j);
  return 0;
}

int cmd_svd_inspect(Options& o) {
  finish_config(o);
  const EventLog log = load_log(o.data);
  const Matrix X = log.feature_matrix();
  const auto& c = o.cfg;
  const RankSelection sel = select_rank(X, c.rank_lo, c.rank_hi, c.rank_tol, c.svd_q, derive_seed(c.seed, "svd"));
  const SvdResult svd = randomized_power_svd(X, sel.rank, c.svd_q, derive_seed(c.seed, "svd"));
  std::printf("rank,%lld\nrel_err,%.10g\nbelow_tol,%d\n", static_cast<long long>(sel.rank), sel.rel_err,
              sel.below_tol ? 1 : 0);
  std::printf("index,sigma\n");
  for (Index k = 0; k < svd.sigma.size(); ++k) std::printf("%lld,%.12g\n", static_cast<long long>(k), svd.sigma(k));

  // Best of several repeats to suppress scheduler noise.
  std::printf("q,seconds,rel_err\n");
  json timing = json::array();
  const double xn = spectral_norm(X);
  for (int q = 1; q <= 3; ++q) {
    double best = 1e300;
    SvdResult<double> s;
    for (int rep = 0; rep < 5; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      s = randomized_power_svd(X, sel.rank, q, derive_seed(c.seed, "svd"));
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    const double rel = xn > 0 ? s.err / xn : 0.0;
    std::printf("%d,%.6g,%.10g\n", q, best, rel);
    timing.push_back({{"q", q}, {"seconds", best}, {"rel_err", rel}});
  }
  if (!o.out.empty()) {
    const fs::path dir = ensure_dir(o.out, "");
    std::vector<double> sig(svd.sigma.data(), svd.sigma.data() + svd.sigma.size());
    write_json(dir / "svd.json",
               {{"rank", sel.rank}, {"rel_err", sel.rel_err}, {"below_tol", sel.below_tol}, {"sigma", sig}, {"timing", timing}});
  }
  return 0;
}

int cmd_framelet_check(Options& o) {
  finish_config(o);
  constexpr double kRoundTrip = 1e-3, kParseval = 2e-3, kAdjoint = 1e-10, kOracle = 1e-3;
  const FilterBank fb = FilterBank::haar(o.cfg.cheb_order, o.cfg.levels);
  bool ok = true;
  auto line = [&](int g, Index n, const char* name, double err, double tol) {
    const bool pass = err < tol;
    ok = ok && pass;
    std::printf("graph %d n=%lld %-10s err=%.3e tol=%.0e %s\n", g, static_cast<long long>(n), name, err, tol,
                pass ? "PASS" : "FAIL");
  };
  if (o.graphs < 1) throw InputError("--graphs must be >= 1");
  if (o.nodes < 0) throw InputError("--nodes must be >= 0");
  for (int g = 0; g < o.graphs; ++g) {
    Rng rng(derive_seed(o.cfg.seed, "framelet-check", static_cast<std::uint64_t>(g)));
    const Index n = o.nodes > 0 ? o.nodes : 5 + static_cast<Index>(rng.below(36));
    const GraphLaplacian lap = normalized_laplacian(random_adjacency(n, o.edge_prob, rng));
    Matrix X(n, o.features);
    for (Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    FrameletCoeffs C;
    for (int b = 0; b < fb.num_bands(); ++b) {
      Matrix B(n, o.features);
      for (Index i = 0; i < B.size(); ++i) B.data()[i] = rng.normal();
      C.bands.push_back(std::move(B));
    }
    const FrameletErrors e = measure_framelet(lap, X, C, fb);
    line(g, n, "round_trip", e.round_trip, kRoundTrip);
    line(g, n, "parseval", e.parseval, kParseval);
    line(g, n, "adjoint", e.adjoint, kAdjoint);
    line(g, n, "oracle", e.oracle, kOracle);
  }
  std::printf("%s\n", ok ? "all properties PASS" : "property FAILURE");
  return ok ? 0 : 1;
}

int cmd_attn_gap(Options& o) {
  finish_config(o);
  const EventLog log = load_log(o.data);
  const Matrix X = log.feature_matrix();
  const Index rank = o.rank > 0 ? o.rank : std::min<Index>(o.cfg.rank_lo, X.cols());
  if (rank > X.cols() || rank > X.rows()) throw InputError("--rank exceeds the feature matrix dimensions");
  std::printf("q,rank,gap\n");
  for (int q : o.qs) {
    if (q < 1) throw InputError("--q values must be >= 1");
    const double gap = attention_svd_gap(X, q, rank, derive_seed(o.cfg.seed, "attn-gap"));
    std::printf("%d,%lld,%.10g\n", q, static_cast<long long>(rank), gap);
  }
  return 0;
}

int cmd_synth(Options& o) {
  if (o.out.empty()) throw InputError("--out is required");
  EventLog log;
  try {
    if (o.kind == "interactions") {
      o.synth.seed = o.cfg.seed;
      log = make_synthetic_log(o.synth);
    } else if (o.kind == "geometric") {
      const Vector s = geometric_spectrum(o.decay, std::min(o.rows, o.cols));
      log = log_from_features(make_spectrum_matrix(o.rows, o.cols, s, o.cfg.seed), o.synth.n_users, o.synth.n_items,
                              o.cfg.seed);
    } else if (o.kind == "lowrank") {
      Vector s(o.low_rank);
      for (Index k = 0; k < o.low_rank; ++k) s(k) = static_cast<double>(o.low_rank - k);
      log = log_from_features(make_spectrum_matrix(o.rows, o.cols, s, o.cfg.seed), o.synth.n_users, o.synth.n_items,
                              o.cfg.seed);
    } else {
      throw InputError("--kind must be interactions, geometric or lowrank");
    }
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  write_jodie_csv(o.out, log);
  std::printf("wrote %zu events (%lld users, %lld items, d=%lld) to %s\n", log.size(),
              static_cast<long long>(log.n_src), static_cast<long long>(log.n_dst), static_cast<long long>(log.d),
              o.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral window training and diagnostics for interaction streams"};
  app.set_config("--config", "", "key=value file; command-line flags take precedence");
  app.require_subcommand(1);
  Options o;
  auto& c = o.cfg;

  app.add_option("--data", o.data, "JODIE-format CSV");
  app.add_option("--out", o.out, "output directory (train, svd-inspect), JSON file (eval) or CSV (synth)");
  app.add_option("--seed", c.seed, "root seed");
  app.add_option("--batch-size", c.batch_size)->check(CLI::PositiveNumber);
  app.add_option("--lr", c.lr)->check(CLI::PositiveNumber);
  app.add_option("--weight-decay", c.weight_decay)->check(CLI::NonNegativeNumber);
  app.add_option("--epochs", c.max_epochs)->check(CLI::PositiveNumber);
  app.add_option("--patience", c.patience, "early-stopping patience; 0 runs every epoch")->check(CLI::NonNegativeNumber);
  app.add_option("--d-mem", c.d_mem)->check(CLI::PositiveNumber);
  app.add_option("--d-embed", c.d_embed)->check(CLI::PositiveNumber);
  app.add_option("--d-time", c.d_time, "accepted and recorded; the MLP variant has no time encoder");
  app.add_option("--mem-hidden", c.mem_hidden)->check(CLI::PositiveNumber);
  app.add_option("--head-hidden", c.head_hidden)->check(CLI::PositiveNumber);
  app.add_option("--neg-ratio", c.neg_ratio_train, "negatives per positive (train)")->check(CLI::PositiveNumber);
  app.add_option("--eval-neg-ratio", c.neg_ratio_eval)->check(CLI::PositiveNumber);
  app.add_option("--cheb-order", c.cheb_order)->check(CLI::PositiveNumber);
  app.add_option("--levels", c.levels)->check(CLI::PositiveNumber);
  app.add_option("--theta-mode", o.theta_mode, "per_band | shared");
  app.add_option("--activation", o.activation, "UFGConv activation: relu | tanh | sigmoid | identity");
  app.add_option("--svd-fit", o.svd_fit, "all | train");
  app.add_option("--rank-lo", c.rank_lo)->check(CLI::PositiveNumber);
  app.add_option("--rank-hi", c.rank_hi)->check(CLI::PositiveNumber);
  app.add_option("--rank-tol", c.rank_tol)->check(CLI::PositiveNumber);
  app.add_option("--svd-q", c.svd_q)->check(CLI::PositiveNumber);
  app.add_flag("--inductive", c.split.inductive, "hold out unseen nodes from the training loss");
  app.add_option("--node-epochs", c.node_epochs)->check(CLI::NonNegativeNumber);

  auto* train_cmd = app.add_subcommand("train", "train and write checkpoint, metrics CSV and JSON summary");
  auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a dataset");
  eval_cmd->add_option("--checkpoint", o.checkpoint)->required();
  auto* svd_cmd = app.add_subcommand("svd-inspect", "rank selection, spectrum and q timing");
  auto* fr_cmd = app.add_subcommand("framelet-check", "tight-frame, adjoint and dense-oracle checks");
  fr_cmd->add_option("--graphs", o.graphs);
  fr_cmd->add_option("--nodes", o.nodes, "fixed graph size; 0 draws 5..40");
  fr_cmd->add_option("--edge-prob", o.edge_prob)->check(CLI::Range(0.0, 1.0));
  fr_cmd->add_option("--features", o.features)->check(CLI::PositiveNumber);
  auto* gap_cmd = app.add_subcommand("attn-gap", "subspace gap between spectral encoding and linear attention");
  gap_cmd->add_option("--rank", o.rank);
  gap_cmd->add_option("--q", o.qs)->delimiter(',');
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic JODIE-format fixture");
  synth_cmd->add_option("--kind", o.kind, "interactions | geometric | lowrank");
  synth_cmd->add_option("--events", o.synth.n_events);
  synth_cmd->add_option("--users", o.synth.n_users);
  synth_cmd->add_option("--items", o.synth.n_items);
  synth_cmd->add_option("--groups", o.synth.groups);
  synth_cmd->add_option("--noise", o.synth.noise);
  synth_cmd->add_option("--rows", o.rows);
  synth_cmd->add_option("--cols", o.cols);
  synth_cmd->add_option("--decay", o.decay);
  synth_cmd->add_option("--low-rank", o.low_rank);
  for (auto* s : {train_cmd, eval_cmd, svd_cmd, fr_cmd, gap_cmd, synth_cmd}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train_cmd) return cmd_train(o);
    if (*eval_cmd) return cmd_eval(o);
    if (*svd_cmd) return cmd_svd_inspect(o);
    if (*fr_cmd) return cmd_framelet_check(o);
    if (*gap_cmd) return cmd_attn_gap(o);
    if (*synth_cmd) return cmd_synth(o);
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
