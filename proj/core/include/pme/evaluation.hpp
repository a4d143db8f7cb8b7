#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pme/faults.hpp"
#include "pme/neurofuzzy.hpp"

namespace pme::evaluation {

struct ConfusionCounts {
  long tp = 0;
  long fn = 0;
  long fp = 0;
  long tn = 0;
};

// Decision convention everywhere: score >= threshold predicts 1.
ConfusionCounts confusion(std::span<const double> scores,
                          std::span<const std::uint8_t> labels,
                          double threshold);

// True positive rate tp/(tp+fn); empty when tp+fn = 0 rather than silently 0.
std::optional<double> tpr(const ConfusionCounts& c);

// False positive rate fp/(fp+tn); empty when fp+tn = 0.
std::optional<double> fpr(const ConfusionCounts& c);

// Importance-weighted accuracy (tpr + c (1 - fpr)) / (c + 1); c = 1 gives
// balanced accuracy. Undefined rates propagate as empty.
std::optional<double> accuracy(const ConfusionCounts& counts,
                               double relative_importance = 1.0);

struct ThresholdSet {
  std::array<double, 3> t{0.5, 0.5, 0.5};
};

enum class ThresholdMode { fixed, optimized };

struct ThresholdResult {
  ThresholdSet thresholds;
  std::array<bool, 3> fallback{false, false, false};  // single-class outputs
  std::array<double, 3> achieved_accuracy{0, 0, 0};
};

// Per output independently: evaluates every midpoint of adjacent sorted
// unique scores plus 0.5 (clamped to [0,1]) and keeps the candidate with the
// best accuracy; ties go to the candidate nearest 0.5, then the smaller one.
// Outputs with a single class fall back to 0.5 and are flagged. Because 0.5
// is always a candidate the achieved accuracy never drops below the fixed
// threshold's.
ThresholdResult optimize_thresholds(const Eigen::MatrixXd& scores,
                                    const std::vector<FaultLabel>& labels,
                                    double relative_importance = 1.0);

// Accuracy as a function of threshold over the same candidate set; data
// behind the per-output threshold curves.
std::vector<std::pair<double, double>> threshold_curve(
    std::span<const double> scores, std::span<const std::uint8_t> labels,
    double relative_importance = 1.0);

FaultLabel classify(const Eigen::Vector3d& outputs, const ThresholdSet& thresholds);

// --- cross-validation harness ---

struct Dataset {
  Eigen::MatrixXd X;  // n x D feature matrix
  std::vector<FaultLabel> labels;

  int size() const { return static_cast<int>(X.rows()); }
  void validate() const;
};

// Per-fold pipeline settings. The rule count is fixed here; selecting it is
// a separate, earlier step (see pipeline::run_crossval).
struct CvConfig {
  int pca_components = 10;
  int n_rules = 4;
  ThresholdMode threshold_mode = ThresholdMode::optimized;
  // Optimize one threshold set on the pooled held-out scores of all folds
  // (mirrors tuning the decision point on the full training set) instead of
  // per fold on training data only.
  bool paper_mode = false;
  double relative_importance = 1.0;
  neurofuzzy::TrainConfig train;
  std::uint64_t seed = 0;
  // When true a fold whose training fails numerically is recorded and its
  // instances excluded instead of aborting the whole run.
  bool skip_failed_folds = false;
};

struct FoldRecord {
  int fold = 0;
  std::vector<int> test_indices;
  ThresholdSet thresholds;
  std::array<bool, 3> threshold_fallback{false, false, false};
  // Training-set accuracy per output at the fold's thresholds and at the
  // fixed 0.5 threshold (NaN when undefined).
  std::array<double, 3> train_accuracy{0, 0, 0};
  std::array<double, 3> train_accuracy_fixed{0, 0, 0};
  bool failed = false;
  std::string failure;
};

struct InstanceRecord {
  int index = 0;
  FaultLabel truth;
  FaultLabel predicted;
  std::array<double, 3> scores{0, 0, 0};
  bool correct = false;
};

struct CvReport {
  int n_instances = 0;
  int evaluated = 0;  // instances actually scored (folds may be skipped)
  int misclassified = 0;
  double exact_match_accuracy = 0.0;  // 1 - misclassified/evaluated
  std::array<ConfusionCounts, 3> per_output;
  ThresholdSet thresholds;  // fixed set, paper-mode set, or mean over folds
  ThresholdMode threshold_mode = ThresholdMode::optimized;
  bool paper_mode = false;
  int n_rules = 0;
  int pca_components = 0;
  int folds = 0;
  std::vector<FoldRecord> fold_records;
  std::vector<InstanceRecord> instances;
};

// Partition n instances into folds of size differing by at most one,
// stratified by label class where possible. folds == n degenerates to the
// identity partition {0},{1},...,{n-1} independent of seed and labels.
std::vector<std::vector<int>> partition_folds(const std::vector<FaultLabel>& labels,
                                              int folds, std::uint64_t seed);

// K-fold cross-validation of the full per-fold pipeline: PCA fit, model
// training and threshold choice happen inside each fold on its training
// instances only; the held-out instances never influence their own
// prediction. Exact-match scoring: a prediction is correct only when all
// three bits match.
CvReport kfold_cv(const Dataset& dataset, int folds, std::uint64_t seed,
                  const CvConfig& config);

// Leave-one-out: k-fold with folds = n (identity partition).
CvReport loo_cv(const Dataset& dataset, const CvConfig& config);

std::string format_summary(const CvReport& report);

void write_report_json(const std::filesystem::path& path, const CvReport& report);
CvReport read_report_json(const std::filesystem::path& path);

// CSV `instance,true,pred,correct`, one row per evaluated instance.
void write_predictions_csv(const std::filesystem::path& path, const CvReport& report);

}  // namespace pme::evaluation
