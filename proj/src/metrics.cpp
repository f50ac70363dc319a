#include "facefake/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

namespace facefake {

void check_set(const LabeledPredictionSet& s) {
  if (s.y.empty()) throw DataError("metric called on an empty prediction set");
  if (s.y.size() != s.p.size()) {
    throw DataError("labels and predictions differ in length");
  }
  for (size_t i = 0; i < s.y.size(); ++i) {
    if (s.y[i] != 0 && s.y[i] != 1) throw DataError("labels must be 0 or 1");
    if (!(s.p[i] >= 0.0 && s.p[i] <= 1.0)) {
      throw DataError("probabilities must lie in [0, 1]");
    }
  }
}

namespace {

double clipped(double p, double eps) {
  return std::min(1.0 - eps, std::max(eps, p));
}

double mean_log_loss(const LabeledPredictionSet& s, int keep_label) {
  double total = 0;
  size_t n = 0;
  for (size_t i = 0; i < s.y.size(); ++i) {
    if (keep_label >= 0 && s.y[i] != keep_label) continue;
    const double p = clipped(s.p[i], s.clip_eps);
    total += s.y[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
    ++n;
  }
  return n == 0 ? -1.0 : total / static_cast<double>(n);
}

}  // namespace

double log_loss(const LabeledPredictionSet& s) {
  check_set(s);
  return mean_log_loss(s, -1);
}

PerClassLogLoss per_class_log_loss(const LabeledPredictionSet& s) {
  check_set(s);
  PerClassLogLoss out;
  const double real = mean_log_loss(s, 0);
  const double fake = mean_log_loss(s, 1);
  if (real >= 0) out.real = real;
  if (fake >= 0) out.fake = fake;
  return out;
}

PrecisionRecallF1 precision_recall_f1(const LabeledPredictionSet& s,
                                      double threshold) {
  check_set(s);
  long tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < s.y.size(); ++i) {
    const bool pred_fake = s.p[i] >= threshold;
    if (pred_fake && s.y[i] == 1) ++tp;
    if (pred_fake && s.y[i] == 0) ++fp;
    if (!pred_fake && s.y[i] == 1) ++fn;
  }
  PrecisionRecallF1 out;
  if (tp + fp == 0) {
    out.precision_degenerate = true;
  } else {
    out.precision = static_cast<double>(tp) / (tp + fp);
  }
  if (tp + fn == 0) {
    out.recall_degenerate = true;
  } else {
    out.recall = static_cast<double>(tp) / (tp + fn);
  }
  if (out.precision + out.recall == 0) {
    out.f1_degenerate = true;
  } else {
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  }
  return out;
}

double roc_auc(const LabeledPredictionSet& s) {
  check_set(s);
  const long n_pos = std::count(s.y.begin(), s.y.end(), 1);
  const long n_neg = static_cast<long>(s.y.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw DataError("roc_auc needs both classes present");
  }
  std::vector<size_t> order(s.y.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return s.p[a] > s.p[b]; });

  // Walk thresholds from high to low; tie groups advance TP/FP together so
  // the trapezoid under each segment hands out half credit for ties.
  double area = 0;
  double tp = 0, fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    long group_pos = 0, group_neg = 0;
    while (j < order.size() && s.p[order[j]] == s.p[order[i]]) {
      if (s.y[order[j]] == 1) ++group_pos;
      else ++group_neg;
      ++j;
    }
    const double new_tp = tp + group_pos;
    const double new_fp = fp + group_neg;
    area += (new_fp - fp) * (tp + new_tp) / 2.0;
    tp = new_tp;
    fp = new_fp;
    i = j;
  }
  return area / (static_cast<double>(n_pos) * n_neg);
}

std::string comparison_table(const std::vector<TableRow>& rows) {
  const std::array<std::string, 4> header = {"Model", "Log loss", "AUC",
                                             "F1 score"};
  std::array<size_t, 4> width = {header[0].size(), header[1].size(),
                                 header[2].size(), header[3].size()};
  const auto cell = [](const std::optional<std::string>& v) -> std::string {
    return v.has_value() ? *v : "-";
  };
  for (const TableRow& r : rows) {
    width[0] = std::max(width[0], r.name.size());
    width[1] = std::max(width[1], cell(r.logloss).size());
    width[2] = std::max(width[2], cell(r.auc).size());
    width[3] = std::max(width[3], cell(r.f1).size());
  }
  std::ostringstream out;
  const auto line = [&](const std::array<std::string, 4>& cells) {
    for (int c = 0; c < 4; ++c) {
      out << cells[c];
      if (c < 3) out << std::string(width[c] - cells[c].size() + 2, ' ');
    }
    out << "\n";
  };
  line(header);
  size_t total = width[0] + width[1] + width[2] + width[3] + 6;
  out << std::string(total, '-') << "\n";
  for (const TableRow& r : rows) {
    line({r.name, cell(r.logloss), cell(r.auc), cell(r.f1)});
  }
  return out.str();
}

std::vector<TableRow> reference_rows() {
  return {
      {"Proposed MTCNN-EfficientNetB5", "0.4278", "0.9380", "0.8682"},
      {"EfficientNet-Vision Transformer", std::nullopt, "0.951", "0.88"},
      {"Ensemble CNN", "0.464", std::nullopt, std::nullopt},
  };
}

}  // namespace facefake
