#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "swinit/linalg.hpp"

namespace swinit {

struct AdamWConfig {
  double lr = 1e-4;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamMoments {
  Matrix m;
  Matrix v;
  std::int64_t step = 0;
};

/// One AdamW step with decoupled weight decay: the parameter is first shrunk
/// by (1 - lr * wd), then moved by the bias-corrected Adam direction.
template <typename Derived, typename DerivedG>
void adamw_step(Eigen::MatrixBase<Derived>& param, const Eigen::MatrixBase<DerivedG>& grad, AdamMoments& st,
                const AdamWConfig& cfg) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols()) throw std::invalid_argument("adamw_step: shape mismatch");
  if (!grad.allFinite()) throw std::domain_error("adamw_step: non-finite gradient");
  if (st.step == 0) {
    st.m = Matrix::Zero(param.rows(), param.cols());
    st.v = Matrix::Zero(param.rows(), param.cols());
  }
  ++st.step;
  st.m = cfg.beta1 * st.m + (1.0 - cfg.beta1) * grad;
  st.v = cfg.beta2 * st.v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
  param *= (1.0 - cfg.lr * cfg.weight_decay);
  param -= (cfg.lr * (st.m.array() / c1) / ((st.v.array() / c2).sqrt() + cfg.eps)).matrix();
}

/// AdamW moments kept per row key, for parameters that live in a global
/// table and are only touched when their node is in the current batch.
class RowAdamW {
 public:
  void step(Matrix& rows, const Matrix& grad, const std::vector<std::int64_t>& keys, const AdamWConfig& cfg) {
    if (rows.rows() != static_cast<Index>(keys.size()) || grad.rows() != rows.rows() || grad.cols() != rows.cols())
      throw std::invalid_argument("RowAdamW::step: shape mismatch");
    for (std::size_t i = 0; i < keys.size(); ++i) {
      auto r = rows.row(static_cast<Index>(i));
      adamw_step(r, grad.row(static_cast<Index>(i)), moments_[keys[i]], cfg);
    }
  }
  void clear() { moments_.clear(); }

 private:
  std::unordered_map<std::int64_t, AdamMoments> moments_;
};

}  // namespace swinit
