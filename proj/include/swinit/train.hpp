#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <unordered_set>
#include <vector>

#include "swinit/eventstream.hpp"
#include "swinit/framelet.hpp"
#include "swinit/memory_window.hpp"
#include "swinit/metrics.hpp"
#include "swinit/mlp.hpp"
#include "swinit/optim.hpp"
#include "swinit/sampling.hpp"
#include "swinit/spectral_attention.hpp"

namespace swinit {

enum class SvdFit { train, all };

struct TrainConfig {
  std::size_t batch_size = 1000;
  double lr = 1e-4;
  double weight_decay = 1e-2;
  int max_epochs = 200;
  int patience = 10;  // epochs without validation ROC-AUC gain before stopping; 0 runs every epoch
  Index d_mem = 100;
  Index d_embed = 100;
  Index d_time = 100;  // accepted for configuration parity; the MLP variant has no time encoder
  Index mem_hidden = 100;
  Index head_hidden = 100;
  double neg_ratio_train = 0.5;
  double neg_ratio_eval = 0.5;
  int cheb_order = 16;
  int levels = 2;
  ThetaMode theta_mode = ThetaMode::per_band;
  Activation ufg_activation = Activation::relu;
  SvdFit svd_fit = SvdFit::train;
  Index rank_lo = 50;
  Index rank_hi = 100;
  double rank_tol = 0.1;
  int svd_q = 3;
  SplitSpec split;
  int node_epochs = 5;
  std::uint64_t seed = 0;

  void validate() const;
  SpectralConfig spectral() const;
};

/// All parameter groups of the link/node prediction model.
struct Model {
  SpectralEncoding encoding;  // frozen basis; Xt is not kept
  MessageFn memory_fn;
  Mlp encoder;                // FC: (d' + 2 d_mem) -> d_embed, ReLU
  Matrix W_feat;              // d_embed x d_embed feature mix before the framelet transform
  ThetaStore theta;
  Mlp link_head;              // 2 d_embed -> hidden -> 1, sigmoid output
  Mlp node_head;              // d_embed -> hidden -> 1, sigmoid output
  FilterBank filters;
  ThetaMode theta_mode = ThetaMode::per_band;
  Activation ufg_activation = Activation::relu;

  static Model init(SpectralEncoding enc, const TrainConfig& cfg, Rng& rng);
  Index network_param_count() const;
  /// Network parameters plus every stored framelet scale.
  Index param_count() const;
  /// Flattened copy of every trainable value, for equality checks.
  std::vector<double> flatten() const;
};

struct ModelGrad {
  MlpGrad memory_fn;
  MlpGrad encoder;
  MlpGrad link_head;
  MlpGrad node_head;
  Matrix W_feat;
  Matrix theta;  // batch-local rows, aligned with BatchGraph::node_ids
};

struct BatchOutput {
  double loss = 0.0;
  std::vector<double> probs;
  std::vector<double> labels;
  Matrix embeddings;  // n_local x d_embed
  ModelGrad grad;
};

/// Sigmoid link probability from the concatenated pair embedding.
double link_predict(const Vector& h_u, const Vector& h_v, const Mlp& head);

/// Node embeddings for one batch: memory replay, FC encoder, UFGConv.
Matrix embed_batch(const Model& model, const BatchGraph& batch);

/// Link loss over the batch positives (optionally masked) and `negatives`,
/// with gradients for memory f, encoder, W_feat, theta and link head.
BatchOutput link_forward_backward(const Model& model, const BatchGraph& batch, const NegativeSet& negatives,
                                  bool need_grad, const std::vector<char>* positive_mask = nullptr);

/// State-change loss on the source node of each event, given frozen
/// embeddings; gradients for the node head only.
BatchOutput node_forward_backward(const Model& model, const BatchGraph& batch, const Matrix& embeddings,
                                  bool need_grad);

struct MetricRow {
  int epoch = 0;
  std::string split;
  double precision = 0.0;
  double roc_auc = 0.0;
  double loss = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<MetricRow> history;
  EvalReport train, val, test;          // link prediction, best epoch
  EvalReport node_val, node_test;       // state-change classification
  int epochs_run = 0;
  int best_epoch = 0;
  double seconds_per_epoch = 0.0;
  std::size_t num_batches = 0;
  std::size_t failed_negatives = 0;
};

/// Called after each training batch has updated the parameters.
using BatchObserver = std::function<void(int epoch, std::size_t batch, const Model& model)>;

/// Rolling protocol over memory-window batches: train on batch i, then
/// score batch i + 1 as validation and batch i + 2 as test without any
/// update. Early stopping keeps the epoch with the best validation ROC-AUC.
TrainResult train(const EventLog& log, const TrainConfig& cfg, const BatchObserver& observer = {});

struct EvalResult {
  EvalReport val, test;
  EvalReport node_val, node_test;
};

/// Replays the rolling protocol with a trained model and no updates.
EvalResult evaluate(const Model& model, const EventLog& log, const TrainConfig& cfg);

/// Number of batches trained per epoch: all but the last two.
inline std::size_t training_batches(std::size_t n_events, std::size_t batch_size) {
  const std::size_t nb = num_batches(n_events, batch_size);
  return nb >= 2 ? nb - 2 : 0;
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricRow>& rows);

void save_checkpoint(const std::string& path, const Model& model, const TrainConfig& cfg, int epoch);
Model load_checkpoint(const std::string& path, TrainConfig* cfg = nullptr, int* epoch = nullptr);

}  // namespace swinit
