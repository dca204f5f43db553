#pragma once

#include <Eigen/SparseCore>

#include <cstdint>
#include <limits>
#include <vector>

#include "swinit/eventstream.hpp"
#include "swinit/linalg.hpp"
#include "swinit/mlp.hpp"

namespace swinit {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Events after spectral projection: ids live in the shared node space and
/// each message is the projected feature row.
struct EncodedStream {
  std::vector<std::int64_t> src;
  std::vector<std::int64_t> dst;
  std::vector<double> t;
  std::vector<int> state_label;
  Matrix msg;  // N x d'
  std::int64_t num_nodes = 0;

  std::size_t size() const { return src.size(); }
  Index msg_dim() const { return msg.cols(); }
};

EncodedStream make_encoded_stream(const EventLog& log, const Matrix& projected);

/// Trainable memory update f: concat(mem, msg) -> tanh hidden -> linear d_mem.
struct MessageFn {
  Mlp net;

  static MessageFn make(Index msg_dim, Index d_mem, Index hidden, Rng& rng);
  Index msg_dim() const { return net.in_dim() - net.out_dim(); }
  Index mem_dim() const { return net.out_dim(); }
};

/// Per-node memory plus the inputs of each node's most recent update, so the
/// last application of f can be replayed with gradients.
struct MemoryState {
  Index d_mem = 0;
  Matrix mem;        // num_nodes x d_mem
  Matrix prev_mem;   // memory before the most recent update
  Matrix last_msg;   // message of the most recent update
  std::vector<double> last_update;

  static constexpr double kNever = -std::numeric_limits<double>::infinity();

  static MemoryState zeros(std::int64_t num_nodes, Index d_mem, Index msg_dim);
  bool observed(std::int64_t node) const { return last_update[static_cast<std::size_t>(node)] != kNever; }
  std::int64_t num_nodes() const { return static_cast<std::int64_t>(last_update.size()); }
};

/// Edge-event row concat(msg | mem_i | mem_j).
Vector encode_event(const Vector& msg, std::int64_t i, std::int64_t j, const MemoryState& state);
/// Node-event row concat(msg | mem_i | 0), same width as an edge row.
Vector encode_node_event(const Vector& msg, std::int64_t i, const MemoryState& state);

/// Applies f to both endpoints of event `k` (both read the pre-event memory).
void update_memory(MemoryState& state, const EncodedStream& stream, std::size_t k, const MessageFn& f);

/// One memory-window slice of the stream.
struct BatchGraph {
  std::size_t begin = 0;  // stream index of the first event
  std::vector<std::int64_t> node_ids;  // local -> shared id
  std::vector<Index> ev_src;           // local endpoint per event
  std::vector<Index> ev_dst;
  std::vector<double> ev_t;
  std::vector<int> state_labels;
  std::vector<double> link_labels;     // observed events are positives
  SparseMatrix adjacency;              // binary, symmetric, zero diagonal
  Matrix msg;                          // B x d'
  Matrix event_rows;                   // B x (d' + 2 d_mem)
  Matrix H0;                           // n_local x (d' + 2 d_mem)

  // Memory at batch start and where it came from.
  Matrix mem_start;                    // n_local x d_mem
  Matrix mem_prev;                     // n_local x d_mem
  Matrix mem_msg;                      // n_local x d'
  std::vector<char> has_mem;

  std::size_t num_events() const { return ev_src.size(); }
  Index num_nodes() const { return static_cast<Index>(node_ids.size()); }
};

/// Assembles the batch for stream[begin, end) against the memory as of the
/// batch start. Does not modify `state`.
///
/// Node rows of H0 average the oriented event rows of every incident event:
/// [mean msg | own memory | mean memory of the other endpoints].
BatchGraph make_batch(const EncodedStream& stream, std::size_t begin, std::size_t end, const MemoryState& state);

/// Node features from per-node memory at batch start (the part of H0 that
/// depends on f); `H0 = assemble_node_features(batch, batch.mem_start)`.
Matrix assemble_node_features(const BatchGraph& batch, const Matrix& mem_start);

/// Adjoint of assemble_node_features with respect to mem_start.
Matrix node_features_backward(const BatchGraph& batch, const Matrix& dH0);

/// Applies memory updates for stream[begin, end) in strict event order.
void advance_memory(MemoryState& state, const EncodedStream& stream, std::size_t begin, std::size_t end,
                    const MessageFn& f);

/// Slices the stream into consecutive windows of `batch_size` events (last
/// one possibly partial), building each against the memory at its start and
/// then updating memory event by event. `state` ends after the last event.
std::vector<BatchGraph> build_batches(const EncodedStream& stream, std::size_t batch_size, MemoryState& state,
                                      const MessageFn& f);

inline std::size_t num_batches(std::size_t n_events, std::size_t batch_size) {
  return (n_events + batch_size - 1) / batch_size;
}

}  // namespace swinit
