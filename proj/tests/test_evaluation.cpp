#include <Eigen/Dense>
#include <algorithm>
#include <fstream>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "pme/errors.hpp"
#include "pme/evaluation.hpp"

using namespace pme;
using namespace pme::evaluation;

namespace {

// Separable synthetic classification set: features carry the label bits
// plus small noise, so every fold model can nail it.
Dataset separable_dataset(int n, std::uint64_t seed, double noise = 0.02) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, noise);
  Dataset ds;
  ds.X.resize(n, 6);
  for (int i = 0; i < n; ++i) {
    const FaultLabel label = FaultLabel::from_class_index(i % kNumFaultClasses);
    ds.labels.push_back(label);
    for (int d = 0; d < 3; ++d) {
      ds.X(i, 2 * d) = label.bits[static_cast<std::size_t>(d)] + gauss(rng);
      ds.X(i, 2 * d + 1) = 0.5 * label.bits[static_cast<std::size_t>(d)] + gauss(rng);
    }
  }
  return ds;
}

CvConfig fast_config(int n_rules = 2) {
  CvConfig config;
  config.pca_components = 4;
  config.n_rules = n_rules;
  config.train.max_epochs = 20;
  config.seed = 11;
  return config;
}

std::vector<std::uint8_t> bits(std::initializer_list<int> v) {
  std::vector<std::uint8_t> out;
  for (int x : v) out.push_back(static_cast<std::uint8_t>(x));
  return out;
}

}  // namespace

TEST_CASE("confusion counts follow the >= decision convention") {
  {
    const auto c = confusion(std::vector<double>{0.9, 0.1}, bits({1, 0}), 0.5);
    CHECK(c.tp == 1);
    CHECK(c.tn == 1);
    CHECK(c.fp == 0);
    CHECK(c.fn == 0);
  }
  {
    // All labels 0 at threshold 0: everything predicted positive.
    const auto c = confusion(std::vector<double>{0.3, 0.8}, bits({0, 0}), 0.0);
    CHECK(c.tp == 0);
    CHECK(c.fn == 0);
    CHECK(c.fp == 2);
    CHECK(c.tn == 0);
  }
  {
    // 0.5 >= 0.5 counts as a positive prediction.
    const auto c = confusion(std::vector<double>{0.4, 0.6, 0.5}, bits({1, 0, 1}), 0.5);
    CHECK(c.tp == 1);
    CHECK(c.fn == 1);
    CHECK(c.fp == 1);
    CHECK(c.tn == 0);
  }
  CHECK_THROWS_AS(confusion(std::vector<double>{0.4}, bits({1, 0}), 0.5), DataError);
}

TEST_CASE("tpr and fpr report undefined denominators distinctly") {
  CHECK(*tpr({5, 0, 0, 0}) == 1.0);
  CHECK(*tpr({0, 5, 0, 0}) == 0.0);
  CHECK(*tpr({3, 1, 0, 0}) == doctest::Approx(0.75));
  CHECK_FALSE(tpr({0, 0, 3, 4}).has_value());

  CHECK(*fpr({0, 0, 0, 7}) == 0.0);
  CHECK(*fpr({0, 0, 7, 0}) == 1.0);
  CHECK(*fpr({0, 0, 1, 3}) == doctest::Approx(0.25));
  CHECK_FALSE(fpr({3, 4, 0, 0}).has_value());
}

TEST_CASE("importance-weighted accuracy") {
  CHECK(*accuracy({5, 0, 0, 5}, 1.0) == doctest::Approx(1.0));   // tpr 1, fpr 0
  CHECK(*accuracy({0, 5, 5, 0}, 1.0) == doctest::Approx(0.0));   // tpr 0, fpr 1
  CHECK(*accuracy({9, 1, 1, 9}, 1.0) == doctest::Approx(0.9));   // 0.9 / 0.1
  CHECK_FALSE(accuracy({0, 0, 1, 9}, 1.0).has_value());
  CHECK_THROWS_AS(accuracy({1, 1, 1, 1}, 0.0), UsageError);
}

TEST_CASE("optimize_thresholds separates separable scores and flags single classes") {
  Eigen::MatrixXd scores(4, 3);
  scores << 0.2, 0.9, 0.5, 0.4, 0.8, 0.5, 0.6, 0.1, 0.5, 0.8, 0.2, 0.5;
  const std::vector<FaultLabel> labels = {
      FaultLabel::from_string("010"), FaultLabel::from_string("010"),
      FaultLabel::from_string("100"), FaultLabel::from_string("100")};
  const ThresholdResult result = optimize_thresholds(scores, labels);

  // Output x: positives {0.6, 0.8}, negatives {0.2, 0.4} -> gap (0.4, 0.6).
  CHECK(result.thresholds.t[0] == doctest::Approx(0.5));
  CHECK(result.achieved_accuracy[0] == doctest::Approx(1.0));
  // Output y: positives {0.9, 0.8}, negatives {0.1, 0.2} -> perfect too.
  CHECK(result.achieved_accuracy[1] == doctest::Approx(1.0));
  CHECK_FALSE(result.fallback[0]);
  // Output z: all labels 0 -> fallback at 0.5.
  CHECK(result.fallback[2]);
  CHECK(result.thresholds.t[2] == 0.5);
}

TEST_CASE("optimize_thresholds midpoint example from four scores") {
  Eigen::MatrixXd scores(4, 3);
  scores << 0.2, 0.2, 0.2, 0.4, 0.4, 0.4, 0.6, 0.6, 0.6, 0.8, 0.8, 0.8;
  const std::vector<FaultLabel> labels = {
      FaultLabel::from_string("000"), FaultLabel::from_string("000"),
      FaultLabel::from_string("111"), FaultLabel::from_string("111")};
  const ThresholdResult result = optimize_thresholds(scores, labels);
  for (int d = 0; d < 3; ++d) {
    CHECK(result.thresholds.t[static_cast<std::size_t>(d)] == doctest::Approx(0.5));
    CHECK(result.achieved_accuracy[static_cast<std::size_t>(d)] == doctest::Approx(1.0));
  }
}

TEST_CASE("optimized thresholds never lose to the fixed threshold") {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 12;
    Eigen::MatrixXd scores(n, 3);
    std::vector<FaultLabel> labels;
    for (int i = 0; i < n; ++i) {
      FaultLabel label;
      for (int d = 0; d < 3; ++d) {
        scores(i, d) = u01(rng);
        label.bits[static_cast<std::size_t>(d)] = u01(rng) < 0.5;
      }
      labels.push_back(label);
    }
    const ThresholdResult result = optimize_thresholds(scores, labels);
    for (int d = 0; d < 3; ++d) {
      if (result.fallback[static_cast<std::size_t>(d)]) continue;
      std::vector<double> col(static_cast<std::size_t>(n));
      std::vector<std::uint8_t> b(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        col[static_cast<std::size_t>(i)] = scores(i, d);
        b[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(i)]
                                             .bits[static_cast<std::size_t>(d)];
      }
      const auto fixed = accuracy(confusion(col, b, 0.5), 1.0);
      REQUIRE(fixed.has_value());
      CHECK(result.achieved_accuracy[static_cast<std::size_t>(d)] >= *fixed - 1e-12);
    }
  }
}

TEST_CASE("classify applies the >= convention per output") {
  ThresholdSet t;
  CHECK(classify(Eigen::Vector3d(0.9, 0.1, 0.7), t) == FaultLabel::from_string("101"));
  CHECK(classify(Eigen::Vector3d(0.5, 0.5, 0.5), t) == FaultLabel::from_string("111"));
  t.t = {0.4, 0.6, 0.5};
  CHECK(classify(Eigen::Vector3d(0.45, 0.55, 0.5), t) == FaultLabel::from_string("101"));
  CHECK_THROWS_AS(classify(Eigen::Vector3d(std::nan(""), 0.0, 0.0), t), DataError);
}

TEST_CASE("threshold curve covers the candidate sweep") {
  const std::vector<double> scores{0.2, 0.4, 0.6, 0.8};
  const auto curve = threshold_curve(scores, bits({0, 0, 1, 1}));
  CHECK(curve.size() == 3);  // three midpoints; 0.5 coincides with one
  double best = 0.0;
  for (const auto& [t, acc] : curve) best = std::max(best, acc);
  CHECK(best == doctest::Approx(1.0));
}

TEST_CASE("partition_folds: identity for folds == n, stratified sizes otherwise") {
  // 167 instances over 8 classes, 10 folds: sizes 16 or 17, seven of 17.
  std::vector<FaultLabel> labels;
  for (int i = 0; i < 167; ++i) labels.push_back(FaultLabel::from_class_index(i % 8));
  const auto partition = partition_folds(labels, 10, 42);
  std::multiset<std::size_t> sizes;
  std::set<int> seen;
  for (const auto& fold : partition) {
    sizes.insert(fold.size());
    for (int idx : fold) CHECK(seen.insert(idx).second);
  }
  CHECK(seen.size() == 167);
  CHECK(sizes.count(17) == 7);
  CHECK(sizes.count(16) == 3);

  const auto identity = partition_folds(labels, 167, 9);
  for (int i = 0; i < 167; ++i) {
    REQUIRE(identity[static_cast<std::size_t>(i)].size() == 1);
    CHECK(identity[static_cast<std::size_t>(i)][0] == i);
  }

  std::vector<FaultLabel> ten(10);
  const auto five = partition_folds(ten, 5, 1);
  for (const auto& fold : five) CHECK(fold.size() == 2);

  CHECK_THROWS_AS(partition_folds(ten, 11, 0), DataError);
  CHECK_THROWS_AS(partition_folds(ten, 1, 0), DataError);
}

TEST_CASE("loo on two identical instances with identical labels is perfect") {
  Dataset ds;
  ds.X.resize(2, 4);
  ds.X << 1.0, 2.0, 3.0, 4.0, 1.0, 2.0, 3.0, 4.0;
  ds.labels = {FaultLabel::from_string("101"), FaultLabel::from_string("101")};
  const CvReport report = loo_cv(ds, fast_config(1));
  CHECK(report.misclassified == 0);
  CHECK(report.exact_match_accuracy == 1.0);
}

TEST_CASE("report accuracy formatting reproduces the reference arithmetic") {
  CvReport report;
  report.n_instances = 167;
  report.evaluated = 167;
  report.misclassified = 14;
  report.exact_match_accuracy = 1.0 - 14.0 / 167.0;
  report.folds = 167;
  CHECK(format_summary(report).find("91.62%") != std::string::npos);
  report.misclassified = 16;
  report.exact_match_accuracy = 1.0 - 16.0 / 167.0;
  CHECK(format_summary(report).find("90.42%") != std::string::npos);
}

TEST_CASE("loo report satisfies the accuracy identity and per-output bound") {
  const Dataset ds = separable_dataset(16, 5, 0.3);  // noisy enough to miss some
  const CvReport report = loo_cv(ds, fast_config());
  CHECK(report.exact_match_accuracy ==
        doctest::Approx(1.0 - double(report.misclassified) / report.evaluated)
            .epsilon(1e-12));
  for (int d = 0; d < 3; ++d) {
    const auto& c = report.per_output[static_cast<std::size_t>(d)];
    const double bit_accuracy =
        double(c.tp + c.tn) / double(c.tp + c.tn + c.fp + c.fn);
    CHECK(report.exact_match_accuracy <= bit_accuracy + 1e-12);
  }
}

TEST_CASE("kfold with folds = n matches loo fold for fold") {
  const Dataset ds = separable_dataset(12, 21);
  const CvConfig config = fast_config();
  const CvReport a = loo_cv(ds, config);
  const CvReport b = kfold_cv(ds, ds.size(), 999, config);  // seed must not matter
  REQUIRE(a.fold_records.size() == b.fold_records.size());
  for (std::size_t f = 0; f < a.fold_records.size(); ++f) {
    CHECK(a.fold_records[f].test_indices == b.fold_records[f].test_indices);
    CHECK(a.fold_records[f].thresholds.t == b.fold_records[f].thresholds.t);
  }
  REQUIRE(a.instances.size() == b.instances.size());
  for (std::size_t i = 0; i < a.instances.size(); ++i) {
    CHECK(a.instances[i].scores == b.instances[i].scores);
    CHECK(a.instances[i].predicted == b.instances[i].predicted);
  }
}

TEST_CASE("held-out prediction does not depend on the held-out label") {
  Dataset ds = separable_dataset(10, 33);
  const CvConfig config = fast_config();
  const CvReport before = loo_cv(ds, config);

  const int target = 3;
  ds.labels[target] = FaultLabel::from_class_index(
      (ds.labels[target].class_index() + 5) % kNumFaultClasses);
  const CvReport after = loo_cv(ds, config);

  CHECK(before.instances[target].scores == after.instances[target].scores);
  CHECK(before.instances[target].predicted == after.instances[target].predicted);
}

TEST_CASE("paper mode pools held-out scores into one threshold set") {
  const Dataset ds = separable_dataset(14, 8);
  CvConfig config = fast_config();
  config.paper_mode = true;
  const CvReport report = loo_cv(ds, config);
  for (const auto& fr : report.fold_records)
    CHECK(fr.thresholds.t == report.thresholds.t);
}

TEST_CASE("fixed threshold mode reports 0.5 everywhere") {
  const Dataset ds = separable_dataset(10, 13);
  CvConfig config = fast_config();
  config.threshold_mode = ThresholdMode::fixed;
  const CvReport report = loo_cv(ds, config);
  for (double t : report.thresholds.t) CHECK(t == 0.5);
}

TEST_CASE("cross-validation rejects invalid fold counts") {
  const Dataset ds = separable_dataset(8, 3);
  CHECK_THROWS_AS(kfold_cv(ds, 1, 0, fast_config()), DataError);
  CHECK_THROWS_AS(kfold_cv(ds, 9, 0, fast_config()), DataError);
}

TEST_CASE("report JSON and predictions CSV round trip") {
  test::TempDir dir("report_io");
  const Dataset ds = separable_dataset(10, 55);
  const CvReport report = loo_cv(ds, fast_config());
  write_report_json(dir.path() / "report.json", report);
  const CvReport back = read_report_json(dir.path() / "report.json");
  CHECK(back.n_instances == report.n_instances);
  CHECK(back.misclassified == report.misclassified);
  CHECK(back.exact_match_accuracy == report.exact_match_accuracy);
  CHECK(back.thresholds.t == report.thresholds.t);
  REQUIRE(back.instances.size() == report.instances.size());
  for (std::size_t i = 0; i < report.instances.size(); ++i) {
    CHECK(back.instances[i].scores == report.instances[i].scores);
    CHECK(back.instances[i].predicted == report.instances[i].predicted);
    CHECK(back.instances[i].truth == report.instances[i].truth);
  }
  REQUIRE(back.fold_records.size() == report.fold_records.size());
  for (std::size_t f = 0; f < report.fold_records.size(); ++f) {
    CHECK(back.fold_records[f].test_indices == report.fold_records[f].test_indices);
    CHECK(back.fold_records[f].thresholds.t == report.fold_records[f].thresholds.t);
  }

  write_predictions_csv(dir.path() / "pred.csv", report);
  std::ifstream in(dir.path() / "pred.csv");
  std::string line;
  int lines = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  CHECK(lines == report.evaluated + 1);  // header + rows
}
