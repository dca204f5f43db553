#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace swinit {

/// TP / (TP + FP) with "predicted positive" meaning score >= threshold.
/// Returns 0 and sets *no_positive_predictions when nothing is predicted
/// positive.
double precision(std::span<const double> scores, std::span<const double> labels, double threshold = 0.5,
                 bool* no_positive_predictions = nullptr);

/// Mann-Whitney form of ROC-AUC: (concordant + 0.5 ties) / (n_pos n_neg),
/// computed from mid-ranks in O(n log n). Throws if a class is missing.
double roc_auc(std::span<const double> scores, std::span<const double> labels);

struct BceResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d p
};

/// Mean binary cross-entropy over probabilities clamped to [1e-7, 1 - 1e-7].
BceResult bce_loss(std::span<const double> probs, std::span<const double> labels);

struct EvalReport {
  std::string split;
  double precision = 0.0;
  double roc_auc = 0.0;  // NaN when a class is missing
  std::int64_t n_pos = 0;
  std::int64_t n_neg = 0;
  double loss = 0.0;
};

EvalReport make_report(const std::string& split, std::span<const double> scores, std::span<const double> labels);

}  // namespace swinit
