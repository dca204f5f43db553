#include "swinit/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace swinit {

Activation parse_activation(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

const char* to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

void apply_activation(Activation a, Matrix& Z) {
  switch (a) {
    case Activation::identity: break;
    case Activation::tanh: Z = Z.array().tanh().matrix(); break;
    case Activation::relu: Z = Z.cwiseMax(0.0); break;
    case Activation::sigmoid: Z = (1.0 / (1.0 + (-Z.array()).exp())).matrix(); break;
  }
}

Matrix activation_derivative(Activation a, const Matrix& Y) {
  switch (a) {
    case Activation::identity: return Matrix::Ones(Y.rows(), Y.cols());
    case Activation::tanh: return (1.0 - Y.array().square()).matrix();
    case Activation::relu: return (Y.array() > 0.0).cast<double>().matrix();
    case Activation::sigmoid: return (Y.array() * (1.0 - Y.array())).matrix();
  }
  return {};
}

Mlp Mlp::make(const std::vector<Index>& dims, const std::vector<Activation>& acts, Rng& rng) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1) throw std::invalid_argument("Mlp::make: need one activation per layer");
  Mlp net;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    const double bound = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
    layer.W.resize(dims[l], dims[l + 1]);
    for (Index i = 0; i < layer.W.rows(); ++i)
      for (Index j = 0; j < layer.W.cols(); ++j) layer.W(i, j) = bound * (2.0 * rng.uniform() - 1.0);
    layer.b = Vector::Zero(dims[l + 1]);
    layer.act = acts[l];
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Index Mlp::param_count() const {
  Index n = 0;
  for (const auto& l : layers) n += l.W.size() + l.b.size();
  return n;
}

bool Mlp::all_finite() const {
  for (const auto& l : layers)
    if (!l.W.allFinite() || !l.b.allFinite()) return false;
  return true;
}

MlpGrad MlpGrad::zeros_like(const Mlp& net) {
  MlpGrad g;
  for (const auto& l : net.layers) {
    g.dW.push_back(Matrix::Zero(l.W.rows(), l.W.cols()));
    g.db.push_back(Vector::Zero(l.b.size()));
  }
  return g;
}

void MlpGrad::accumulate(const MlpGrad& other) {
  for (std::size_t l = 0; l < dW.size(); ++l) {
    dW[l] += other.dW[l];
    db[l] += other.db[l];
  }
}

Matrix mlp_forward(const Mlp& net, const Matrix& X, MlpContext* ctx) {
  if (net.layers.empty()) throw std::invalid_argument("mlp_forward: empty network");
  if (X.cols() != net.in_dim())
    throw std::invalid_argument("mlp_forward: input width " + std::to_string(X.cols()) + " != " + std::to_string(net.in_dim()));
  if (ctx) {
    ctx->inputs.clear();
    ctx->outputs.clear();
  }
  Matrix h = X;
  for (const auto& layer : net.layers) {
    if (ctx) ctx->inputs.push_back(h);
    Matrix z = h * layer.W;
    z.rowwise() += layer.b.transpose();
    apply_activation(layer.act, z);
    h = std::move(z);
    if (ctx) ctx->outputs.push_back(h);
  }
  return h;
}

MlpGrad mlp_backward(const Mlp& net, const MlpContext& ctx, const Matrix& upstream) {
  const std::size_t L = net.layers.size();
  if (ctx.inputs.size() != L || ctx.outputs.size() != L) throw std::logic_error("mlp_backward: context does not match network");
  for (std::size_t l = 0; l < L; ++l)
    if (ctx.inputs[l].cols() != net.layers[l].W.rows() || ctx.outputs[l].cols() != net.layers[l].W.cols())
      throw std::logic_error("mlp_backward: stale context (layer shapes changed)");
  if (upstream.rows() != ctx.outputs.back().rows() || upstream.cols() != ctx.outputs.back().cols())
    throw std::invalid_argument("mlp_backward: upstream gradient shape mismatch");

  MlpGrad g;
  g.dW.resize(L);
  g.db.resize(L);
  Matrix delta = upstream;
  for (std::size_t k = L; k-- > 0;) {
    const auto& layer = net.layers[k];
    delta = delta.cwiseProduct(activation_derivative(layer.act, ctx.outputs[k]));
    g.dW[k] = ctx.inputs[k].transpose() * delta;
    g.db[k] = delta.colwise().sum().transpose();
    delta = delta * layer.W.transpose();
  }
  g.dX = std::move(delta);
  return g;
}

}  // namespace swinit
