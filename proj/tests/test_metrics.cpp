#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "facefake/metrics.hpp"

using namespace facefake;

namespace {

LabeledPredictionSet make_set(std::vector<int> y, std::vector<double> p) {
  LabeledPredictionSet s;
  s.y = std::move(y);
  s.p = std::move(p);
  return s;
}

// O(n^2) rank statistic: wins plus half ties over all positive/negative pairs.
double auc_pair_oracle(const LabeledPredictionSet& s) {
  double wins = 0;
  long n_pos = 0, n_neg = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s.y[i] != 1) continue;
    ++n_pos;
    for (size_t j = 0; j < s.size(); ++j) {
      if (s.y[j] != 0) continue;
      if (s.p[i] > s.p[j]) wins += 1;
      else if (s.p[i] == s.p[j]) wins += 0.5;
    }
  }
  for (int v : s.y) n_neg += v == 0;
  return wins / (static_cast<double>(n_pos) * n_neg);
}

LabeledPredictionSet random_set(std::mt19937& rng, int max_n, bool quantized) {
  std::uniform_int_distribution<int> size(2, max_n);
  std::uniform_int_distribution<int> label(0, 1);
  std::uniform_real_distribution<double> prob(0.0, 1.0);
  std::uniform_int_distribution<int> bucket(0, 9);
  while (true) {
    LabeledPredictionSet s;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) {
      s.y.push_back(label(rng));
      s.p.push_back(quantized ? bucket(rng) / 10.0 : prob(rng));
    }
    const bool has_pos = std::count(s.y.begin(), s.y.end(), 1) > 0;
    const bool has_neg = std::count(s.y.begin(), s.y.end(), 0) > 0;
    if (has_pos && has_neg) return s;
  }
}

}  // namespace

TEST_CASE("log loss basics") {
  // confidently correct predictions, clipped at 1e-15
  const auto perfect = make_set({1, 0}, {1.0, 0.0});
  CHECK(log_loss(perfect) <= 1e-14);

  const auto coinflip = make_set({1, 0, 1}, {0.5, 0.5, 0.5});
  CHECK(std::abs(log_loss(coinflip) - std::log(2.0)) < 1e-12);

  const auto pair = make_set({1, 0}, {0.8, 0.2});
  CHECK(log_loss(pair) == doctest::Approx(0.22314355131420971).epsilon(1e-12));

  CHECK_THROWS_AS(log_loss(make_set({}, {})), DataError);
}

TEST_CASE("log loss invariances") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_set(rng, 30, false);
    const double base = log_loss(s);

    // permutation invariance
    LabeledPredictionSet shuffled = s;
    std::vector<size_t> order(s.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t i = 0; i < order.size(); ++i) {
      shuffled.y[i] = s.y[order[i]];
      shuffled.p[i] = s.p[order[i]];
    }
    CHECK(log_loss(shuffled) == doctest::Approx(base).epsilon(1e-12));

    // label-flip symmetry
    LabeledPredictionSet flipped = s;
    for (size_t i = 0; i < s.size(); ++i) {
      flipped.y[i] = 1 - s.y[i];
      flipped.p[i] = 1.0 - s.p[i];
    }
    CHECK(log_loss(flipped) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("per-class log loss") {
  const auto s = make_set({1, 1, 0}, {0.9, 0.8, 0.3});
  const PerClassLogLoss pc = per_class_log_loss(s);
  REQUIRE(pc.fake.has_value());
  REQUIRE(pc.real.has_value());
  CHECK(*pc.fake == doctest::Approx(0.164252033486018).epsilon(1e-12));
  CHECK(*pc.real == doctest::Approx(0.35667494393873245).epsilon(1e-12));

  // overall equals the count-weighted mean of the class losses
  const double overall = log_loss(s);
  CHECK(overall == doctest::Approx((2 * *pc.fake + 1 * *pc.real) / 3).epsilon(1e-12));

  const PerClassLogLoss single = per_class_log_loss(make_set({1, 1}, {0.6, 0.7}));
  CHECK(single.fake.has_value());
  CHECK(!single.real.has_value());
}

TEST_CASE("precision, recall, F1") {
  const auto perfect = precision_recall_f1(make_set({1, 0}, {0.9, 0.1}));
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  // TP=8, FP=2, FN=3 (plus true negatives that do not matter)
  LabeledPredictionSet s;
  for (int i = 0; i < 8; ++i) { s.y.push_back(1); s.p.push_back(0.9); }
  for (int i = 0; i < 2; ++i) { s.y.push_back(0); s.p.push_back(0.8); }
  for (int i = 0; i < 3; ++i) { s.y.push_back(1); s.p.push_back(0.2); }
  for (int i = 0; i < 4; ++i) { s.y.push_back(0); s.p.push_back(0.1); }
  const auto r = precision_recall_f1(s);
  CHECK(r.precision == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(r.recall == doctest::Approx(8.0 / 11.0).epsilon(1e-12));
  CHECK(r.f1 == doctest::Approx(0.761904761904762).epsilon(1e-9));

  const auto none = precision_recall_f1(make_set({1, 0}, {0.1, 0.2}));
  CHECK(none.precision_degenerate);
  CHECK(none.precision == 0.0);
  CHECK(none.f1_degenerate);
}

TEST_CASE("F1 equals the harmonic-mean identity on random confusion counts") {
  std::mt19937 rng(8);
  std::uniform_int_distribution<int> cnt(0, 30);
  for (int trial = 0; trial < 300; ++trial) {
    const int tp = cnt(rng), fp = cnt(rng), fn = cnt(rng), tn = cnt(rng);
    if (tp + fn == 0 || tp + fp == 0 || tp + fp + fn + tn == 0) continue;
    LabeledPredictionSet s;
    for (int i = 0; i < tp; ++i) { s.y.push_back(1); s.p.push_back(0.9); }
    for (int i = 0; i < fp; ++i) { s.y.push_back(0); s.p.push_back(0.9); }
    for (int i = 0; i < fn; ++i) { s.y.push_back(1); s.p.push_back(0.1); }
    for (int i = 0; i < tn; ++i) { s.y.push_back(0); s.p.push_back(0.1); }
    const auto r = precision_recall_f1(s);
    const double p = static_cast<double>(tp) / (tp + fp);
    const double rec = static_cast<double>(tp) / (tp + fn);
    if (p + rec > 0) {
      CHECK(r.f1 == doctest::Approx(2 * p * rec / (p + rec)).epsilon(1e-12));
    } else {
      CHECK(r.f1_degenerate);
    }
  }
}

TEST_CASE("roc auc basics") {
  CHECK(roc_auc(make_set({1, 1, 0, 0}, {0.9, 0.8, 0.2, 0.1})) == 1.0);
  CHECK(roc_auc(make_set({1, 0, 1, 0}, {0.5, 0.5, 0.5, 0.5})) == 0.5);
  CHECK_THROWS_AS(roc_auc(make_set({1, 1}, {0.4, 0.6})), DataError);
}

TEST_CASE("trapezoidal auc equals the pair-counting oracle") {
  std::mt19937 rng(10);
  for (int trial = 0; trial < 1000; ++trial) {
    // alternate continuous and heavily tied score sets
    const auto s = random_set(rng, 50, trial % 2 == 1);
    CHECK(std::abs(roc_auc(s) - auc_pair_oracle(s)) < 1e-9);
  }
}

TEST_CASE("auc invariances") {
  std::mt19937 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_set(rng, 30, false);
    const double base = roc_auc(s);

    // strictly monotone transform of the scores
    LabeledPredictionSet warped = s;
    for (double& p : warped.p) p = p * p * 0.5 + 0.5 * p;
    CHECK(roc_auc(warped) == doctest::Approx(base).epsilon(1e-12));

    // score flip mirrors the curve (no ties in continuous draws)
    LabeledPredictionSet flipped = s;
    for (double& p : flipped.p) p = 1.0 - p;
    CHECK(roc_auc(flipped) == doctest::Approx(1.0 - base).epsilon(1e-9));
  }
}

TEST_CASE("fixture file matches exactly") {
  std::ifstream in(std::string(FACEFAKE_FIXTURE_DIR) + "/metrics_fixture.json");
  REQUIRE(in.good());
  nlohmann::json fixture;
  in >> fixture;

  LabeledPredictionSet s;
  for (const auto& v : fixture["y"]) s.y.push_back(v.get<int>());
  for (const auto& v : fixture["p"]) s.p.push_back(v.get<double>());

  CHECK(log_loss(s) == doctest::Approx(fixture["logloss"].get<double>()).epsilon(1e-15));
  const auto pc = per_class_log_loss(s);
  CHECK(*pc.real == doctest::Approx(fixture["logloss_real"].get<double>()).epsilon(1e-15));
  CHECK(*pc.fake == doctest::Approx(fixture["logloss_fake"].get<double>()).epsilon(1e-15));
  CHECK(roc_auc(s) == doctest::Approx(fixture["auc"].get<double>()).epsilon(1e-15));
  const auto prf = precision_recall_f1(s, fixture["threshold"].get<double>());
  CHECK(prf.precision == doctest::Approx(fixture["precision"].get<double>()).epsilon(1e-15));
  CHECK(prf.recall == doctest::Approx(fixture["recall"].get<double>()).epsilon(1e-15));
  CHECK(prf.f1 == doctest::Approx(fixture["f1"].get<double>()).epsilon(1e-15));
}

TEST_CASE("comparison table renders the published rows verbatim") {
  const std::string table = comparison_table(reference_rows());
  CHECK(table.find("Model") != std::string::npos);
  CHECK(table.find("Log loss") != std::string::npos);
  CHECK(table.find("AUC") != std::string::npos);
  CHECK(table.find("F1 score") != std::string::npos);
  CHECK(table.find("Proposed MTCNN-EfficientNetB5") != std::string::npos);
  CHECK(table.find("0.4278") != std::string::npos);
  CHECK(table.find("0.9380") != std::string::npos);
  CHECK(table.find("0.8682") != std::string::npos);
  CHECK(table.find("EfficientNet-Vision Transformer") != std::string::npos);
  CHECK(table.find("0.951") != std::string::npos);
  CHECK(table.find("0.88") != std::string::npos);
  CHECK(table.find("Ensemble CNN") != std::string::npos);
  CHECK(table.find("0.464") != std::string::npos);

  // absent cells render as "-": the transformer row has no log loss
  std::istringstream lines(table);
  std::string line;
  bool found = false;
  while (std::getline(lines, line)) {
    if (line.find("EfficientNet-Vision Transformer") != std::string::npos) {
      found = true;
      CHECK(line.find(" - ") != std::string::npos);
    }
  }
  CHECK(found);

  // empty input keeps the header shape
  const std::string empty = comparison_table({});
  CHECK(empty.find("Model") != std::string::npos);

  // single-metric rows fill the rest with "-"
  const std::string partial = comparison_table({{"only-auc", std::nullopt, "0.5", std::nullopt}});
  CHECK(partial.find("only-auc") != std::string::npos);
  CHECK(partial.find("0.5") != std::string::npos);
}
