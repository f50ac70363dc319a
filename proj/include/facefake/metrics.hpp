#pragma once

#include <optional>
#include <string>
#include <vector>

#include "facefake/errors.hpp"

namespace facefake {

/// Video-level labels (1 = fake) with predicted fake probabilities.
/// Probabilities are clipped to [clip_eps, 1 - clip_eps] inside log loss
/// only; every other metric sees the raw values.
struct LabeledPredictionSet {
  std::vector<int> y;
  std::vector<double> p;
  double clip_eps = 1e-15;

  size_t size() const { return y.size(); }
};

void check_set(const LabeledPredictionSet& s);  // nonempty, aligned, in-range

/// Mean binary cross-entropy, -(1/n) sum[y ln p + (1-y) ln(1-p)].
double log_loss(const LabeledPredictionSet& s);

/// Log loss restricted to each class; absent classes report nullopt.
struct PerClassLogLoss {
  std::optional<double> real;
  std::optional<double> fake;
};
PerClassLogLoss per_class_log_loss(const LabeledPredictionSet& s);

/// Threshold the probabilities at `threshold` (predict fake when p >=
/// threshold). Any 0/0 ratio is reported as 0 with its degenerate flag set,
/// so batch evaluation never aborts.
struct PrecisionRecallF1 {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  bool precision_degenerate = false;
  bool recall_degenerate = false;
  bool f1_degenerate = false;
};
PrecisionRecallF1 precision_recall_f1(const LabeledPredictionSet& s,
                                      double threshold = 0.5);

/// Area under the ROC curve by trapezoidal integration over all distinct
/// score thresholds. Tie groups collapse onto one curve segment, which makes
/// the result equal to the rank statistic (wins + half ties) / (n+ * n-).
/// Throws DataError when only one class is present.
double roc_auc(const LabeledPredictionSet& s);

/// One row of the evaluation comparison table; absent cells print "-".
/// Cells are preformatted strings so published reference figures render
/// exactly as reported.
struct TableRow {
  std::string name;
  std::optional<std::string> logloss;
  std::optional<std::string> auc;
  std::optional<std::string> f1;
};

std::string comparison_table(const std::vector<TableRow>& rows);

/// The published comparison rows this project evaluates against.
std::vector<TableRow> reference_rows();

}  // namespace facefake
