#include "swinit/memory_window.hpp"

#include <stdexcept>
#include <unordered_map>

namespace swinit {

EncodedStream make_encoded_stream(const EventLog& log, const Matrix& projected) {
  if (projected.rows() != static_cast<Index>(log.size()))
    throw std::invalid_argument("make_encoded_stream: projected rows != number of events");
  EncodedStream s;
  s.num_nodes = log.num_nodes();
  s.msg = projected;
  s.src.reserve(log.size());
  for (const auto& e : log.events) {
    s.src.push_back(log.src_node(e));
    s.dst.push_back(log.dst_node(e));
    s.t.push_back(e.t);
    s.state_label.push_back(e.state_label);
  }
  return s;
}

MessageFn MessageFn::make(Index msg_dim, Index d_mem, Index hidden, Rng& rng) {
  return {Mlp::make({d_mem + msg_dim, hidden, d_mem}, {Activation::tanh, Activation::identity}, rng)};
}

MemoryState MemoryState::zeros(std::int64_t num_nodes, Index d_mem, Index msg_dim) {
  MemoryState s;
  s.d_mem = d_mem;
  s.mem = Matrix::Zero(num_nodes, d_mem);
  s.prev_mem = Matrix::Zero(num_nodes, d_mem);
  s.last_msg = Matrix::Zero(num_nodes, msg_dim);
  s.last_update.assign(static_cast<std::size_t>(num_nodes), kNever);
  return s;
}

Vector encode_event(const Vector& msg, std::int64_t i, std::int64_t j, const MemoryState& state) {
  if (i < 0 || j < 0 || i >= state.num_nodes() || j >= state.num_nodes()) throw std::out_of_range("encode_event: node id");
  const Index dm = state.d_mem;
  Vector row(msg.size() + 2 * dm);
  row << msg, state.mem.row(i).transpose(), state.mem.row(j).transpose();
  return row;
}

Vector encode_node_event(const Vector& msg, std::int64_t i, const MemoryState& state) {
  if (i < 0 || i >= state.num_nodes()) throw std::out_of_range("encode_node_event: node id");
  const Index dm = state.d_mem;
  Vector row(msg.size() + 2 * dm);
  row << msg, state.mem.row(i).transpose(), Vector::Zero(dm);
  return row;
}

void update_memory(MemoryState& state, const EncodedStream& stream, std::size_t k, const MessageFn& f) {
  const std::int64_t i = stream.src[k];
  const std::int64_t j = stream.dst[k];
  const Index dm = state.d_mem;
  const Index dmsg = stream.msg_dim();
  if (f.mem_dim() != dm || f.msg_dim() != dmsg) throw std::invalid_argument("update_memory: width mismatch between f and state");

  Matrix in(2, dm + dmsg);
  in.row(0) << state.mem.row(i), stream.msg.row(static_cast<Index>(k));
  in.row(1) << state.mem.row(j), stream.msg.row(static_cast<Index>(k));
  const Matrix out = mlp_forward(f.net, in);
  if (!out.allFinite()) throw std::runtime_error("update_memory: non-finite memory at event " + std::to_string(k));

  for (int r = 0; r < 2; ++r) {
    const std::int64_t node = r == 0 ? i : j;
    state.prev_mem.row(node) = in.row(r).head(dm);
    state.last_msg.row(node) = stream.msg.row(static_cast<Index>(k));
    state.mem.row(node) = out.row(r);
    state.last_update[static_cast<std::size_t>(node)] = stream.t[k];
  }
}

BatchGraph make_batch(const EncodedStream& stream, std::size_t begin, std::size_t end, const MemoryState& state) {
  if (begin > end || end > stream.size()) throw std::out_of_range("make_batch: bad event range");
  BatchGraph b;
  b.begin = begin;
  const Index dm = state.d_mem;
  const Index dmsg = stream.msg_dim();
  const auto B = static_cast<Index>(end - begin);

  std::unordered_map<std::int64_t, Index> local;
  auto local_id = [&](std::int64_t g) {
    auto [it, fresh] = local.try_emplace(g, static_cast<Index>(b.node_ids.size()));
    if (fresh) b.node_ids.push_back(g);
    return it->second;
  };

  b.msg = stream.msg.middleRows(static_cast<Index>(begin), B);
  b.event_rows.resize(B, dmsg + 2 * dm);
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t k = begin; k < end; ++k) {
    const Index u = local_id(stream.src[k]);
    const Index v = local_id(stream.dst[k]);
    b.ev_src.push_back(u);
    b.ev_dst.push_back(v);
    b.ev_t.push_back(stream.t[k]);
    b.state_labels.push_back(stream.state_label[k]);
    b.link_labels.push_back(1.0);
    b.event_rows.row(static_cast<Index>(k - begin)) =
        encode_event(stream.msg.row(static_cast<Index>(k)).transpose(), stream.src[k], stream.dst[k], state).transpose();
    if (u != v) {
      trip.emplace_back(u, v, 1.0);
      trip.emplace_back(v, u, 1.0);
    }
  }
  const Index n = b.num_nodes();
  b.adjacency.resize(n, n);
  b.adjacency.setFromTriplets(trip.begin(), trip.end());
  for (Index c = 0; c < b.adjacency.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(b.adjacency, c); it; ++it) it.valueRef() = 1.0;

  b.mem_start.resize(n, dm);
  b.mem_prev.resize(n, dm);
  b.mem_msg.resize(n, dmsg);
  b.has_mem.resize(static_cast<std::size_t>(n));
  for (Index a = 0; a < n; ++a) {
    const std::int64_t g = b.node_ids[static_cast<std::size_t>(a)];
    b.mem_start.row(a) = state.mem.row(g);
    b.mem_prev.row(a) = state.prev_mem.row(g);
    b.mem_msg.row(a) = state.last_msg.row(g);
    b.has_mem[static_cast<std::size_t>(a)] = state.observed(g) ? 1 : 0;
  }
  b.H0 = assemble_node_features(b, b.mem_start);
  return b;
}

namespace {

std::vector<double> node_degrees(const BatchGraph& b) {
  std::vector<double> deg(static_cast<std::size_t>(b.num_nodes()), 0.0);
  for (std::size_t e = 0; e < b.num_events(); ++e) {
    deg[static_cast<std::size_t>(b.ev_src[e])] += 1.0;
    deg[static_cast<std::size_t>(b.ev_dst[e])] += 1.0;
  }
  return deg;
}

}  // namespace

Matrix assemble_node_features(const BatchGraph& b, const Matrix& mem_start) {
  const Index n = b.num_nodes();
  const Index dmsg = b.msg.cols();
  const Index dm = mem_start.cols();
  Matrix msg_sum = Matrix::Zero(n, dmsg);
  Matrix other_sum = Matrix::Zero(n, dm);
  for (std::size_t e = 0; e < b.num_events(); ++e) {
    const Index u = b.ev_src[e];
    const Index v = b.ev_dst[e];
    const auto m = b.msg.row(static_cast<Index>(e));
    msg_sum.row(u) += m;
    msg_sum.row(v) += m;
    other_sum.row(u) += mem_start.row(v);
    other_sum.row(v) += mem_start.row(u);
  }
  const auto deg = node_degrees(b);
  Matrix H(n, dmsg + 2 * dm);
  for (Index a = 0; a < n; ++a) {
    const double inv = 1.0 / deg[static_cast<std::size_t>(a)];
    H.row(a) << msg_sum.row(a) * inv, mem_start.row(a), other_sum.row(a) * inv;
  }
  return H;
}

Matrix node_features_backward(const BatchGraph& b, const Matrix& dH0) {
  const Index dmsg = b.msg.cols();
  const Index dm = (dH0.cols() - dmsg) / 2;
  const auto deg = node_degrees(b);
  Matrix dmem = dH0.middleCols(dmsg, dm);
  for (std::size_t e = 0; e < b.num_events(); ++e) {
    const Index u = b.ev_src[e];
    const Index v = b.ev_dst[e];
    dmem.row(v) += dH0.row(u).tail(dm) / deg[static_cast<std::size_t>(u)];
    dmem.row(u) += dH0.row(v).tail(dm) / deg[static_cast<std::size_t>(v)];
  }
  return dmem;
}

void advance_memory(MemoryState& state, const EncodedStream& stream, std::size_t begin, std::size_t end,
                    const MessageFn& f) {
  for (std::size_t k = begin; k < end; ++k) update_memory(state, stream, k, f);
}

std::vector<BatchGraph> build_batches(const EncodedStream& stream, std::size_t batch_size, MemoryState& state,
                                      const MessageFn& f) {
  if (batch_size < 1) throw std::invalid_argument("build_batches: batch size must be >= 1");
  std::vector<BatchGraph> out;
  out.reserve(num_batches(stream.size(), batch_size));
  for (std::size_t begin = 0; begin < stream.size(); begin += batch_size) {
    const std::size_t end = std::min(stream.size(), begin + batch_size);
    out.push_back(make_batch(stream, begin, end, state));
    advance_memory(state, stream, begin, end, f);
  }
  return out;
}

}  // namespace swinit
