#pragma once

#include <string>
#include <vector>

#include "swinit/linalg.hpp"
#include "swinit/rng.hpp"

namespace swinit {

enum class Activation { identity, tanh, relu, sigmoid };

Activation parse_activation(const std::string& name);
const char* to_string(Activation a);

void apply_activation(Activation a, Matrix& Z);
/// d act / d z expressed through the activation output.
Matrix activation_derivative(Activation a, const Matrix& output);

/// Dense layer acting on row samples: y = act(x W + b).
struct Layer {
  Matrix W;  // in x out
  Vector b;  // out
  Activation act = Activation::identity;
};

struct Mlp {
  std::vector<Layer> layers;

  /// Layer widths dims[0] -> dims[1] -> ... with one activation per layer.
  /// Weights are Glorot-uniform from `rng`, biases zero.
  static Mlp make(const std::vector<Index>& dims, const std::vector<Activation>& acts, Rng& rng);

  Index in_dim() const { return layers.empty() ? 0 : layers.front().W.rows(); }
  Index out_dim() const { return layers.empty() ? 0 : layers.back().W.cols(); }
  Index param_count() const;
  bool all_finite() const;
};

/// Saved forward state: per-layer input and post-activation output.
struct MlpContext {
  std::vector<Matrix> inputs;
  std::vector<Matrix> outputs;
};

struct MlpGrad {
  std::vector<Matrix> dW;
  std::vector<Vector> db;
  Matrix dX;

  static MlpGrad zeros_like(const Mlp& net);
  void accumulate(const MlpGrad& other);
};

Matrix mlp_forward(const Mlp& net, const Matrix& X, MlpContext* ctx = nullptr);

/// Reverse-mode gradients for the forward pass recorded in `ctx`; throws
/// std::logic_error if the context does not match the network.
MlpGrad mlp_backward(const Mlp& net, const MlpContext& ctx, const Matrix& upstream);

}  // namespace swinit
