#include "swinit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace swinit {

double precision(std::span<const double> scores, std::span<const double> labels, double threshold,
                 bool* no_positive_predictions) {
  if (scores.size() != labels.size()) throw std::invalid_argument("precision: length mismatch");
  std::int64_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] < threshold) continue;
    if (labels[i] > 0.5)
      ++tp;
    else
      ++fp;
  }
  if (no_positive_predictions) *no_positive_predictions = (tp + fp) == 0;
  if (tp + fp == 0) return 0.0;
  return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double roc_auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the mid-rank keeps every quantity an exact integer.
  std::int64_t rank2_pos = 0, n_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const auto mid2 = static_cast<std::int64_t>(i + j + 2);  // 2 * ((i+1 + j+1) / 2)
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] > 0.5) {
        rank2_pos += mid2;
        ++n_pos;
      }
    i = j + 1;
  }
  const auto n_neg = static_cast<std::int64_t>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("roc_auc: both classes must be present");
  // 2U = sum of doubled positive ranks - n_pos (n_pos + 1)
  const std::int64_t u2 = rank2_pos - n_pos * (n_pos + 1);
  return static_cast<double>(u2) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

BceResult bce_loss(std::span<const double> probs, std::span<const double> labels) {
  if (probs.size() != labels.size()) throw std::invalid_argument("bce_loss: length mismatch");
  BceResult r;
  r.grad.resize(probs.size());
  if (probs.empty()) return r;
  constexpr double kClamp = 1e-7;
  const double inv_n = 1.0 / static_cast<double>(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kClamp, 1.0 - kClamp);
    const double y = labels[i];
    r.loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    r.grad[i] = inv_n * (p - y) / (p * (1.0 - p));
  }
  r.loss *= inv_n;
  return r;
}

EvalReport make_report(const std::string& split, std::span<const double> scores, std::span<const double> labels) {
  EvalReport rep;
  rep.split = split;
  for (double y : labels) (y > 0.5 ? rep.n_pos : rep.n_neg)++;
  rep.precision = precision(scores, labels);
  rep.roc_auc = (rep.n_pos > 0 && rep.n_neg > 0) ? roc_auc(scores, labels) : std::numeric_limits<double>::quiet_NaN();
  rep.loss = scores.empty() ? 0.0 : bce_loss(scores, labels).loss;
  return rep;
}

}  // namespace swinit
