#include "pme/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include "detail.hpp"
#include "pme/errors.hpp"
#include "pme/features.hpp"
#include "pme/rng.hpp"

namespace pme::evaluation {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

enum : std::uint64_t { kStreamPartition = 0x9a27, kStreamFoldInit = 0xcf1d };

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * fraction);
  return buf;
}

std::vector<std::uint8_t> label_bits(const std::vector<FaultLabel>& labels, int output) {
  std::vector<std::uint8_t> bits(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    bits[i] = labels[i].bits[static_cast<std::size_t>(output)];
  return bits;
}

// Midpoints of adjacent sorted unique scores, plus 0.5, clamped to [0, 1].
std::vector<double> threshold_candidates(std::span<const double> scores) {
  std::set<double> unique(scores.begin(), scores.end());
  std::vector<double> sorted(unique.begin(), unique.end());
  std::set<double> candidates{0.5};
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
    candidates.insert(std::clamp(0.5 * (sorted[i] + sorted[i + 1]), 0.0, 1.0));
  return {candidates.begin(), candidates.end()};
}

double accuracy_at(std::span<const double> scores, std::span<const std::uint8_t> bits,
                   double threshold, double c) {
  const auto acc = accuracy(confusion(scores, bits, threshold), c);
  return acc ? *acc : kNan;
}

detail::json json_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double double_or_nan(const detail::json& j) {
  return j.is_null() ? kNan : j.get<double>();
}

}  // namespace

ConfusionCounts confusion(std::span<const double> scores,
                          std::span<const std::uint8_t> labels, double threshold) {
  if (scores.size() != labels.size())
    throw DataError("scores and labels differ in length");
  if (!std::isfinite(threshold)) throw DataError("threshold must be finite");
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] != 0;
    if (predicted && actual) ++c.tp;
    else if (!predicted && actual) ++c.fn;
    else if (predicted && !actual) ++c.fp;
    else ++c.tn;
  }
  return c;
}

std::optional<double> tpr(const ConfusionCounts& c) {
  if (c.tp + c.fn == 0) return std::nullopt;
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

std::optional<double> fpr(const ConfusionCounts& c) {
  if (c.fp + c.tn == 0) return std::nullopt;
  return static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
}

std::optional<double> accuracy(const ConfusionCounts& counts, double relative_importance) {
  if (!(relative_importance > 0.0))
    throw UsageError("relative importance must be positive");
  const auto t = tpr(counts);
  const auto f = fpr(counts);
  if (!t || !f) return std::nullopt;
  return (*t + relative_importance * (1.0 - *f)) / (relative_importance + 1.0);
}

ThresholdResult optimize_thresholds(const Eigen::MatrixXd& scores,
                                    const std::vector<FaultLabel>& labels,
                                    double relative_importance) {
  if (scores.rows() != static_cast<Eigen::Index>(labels.size()))
    throw DataError("scores and labels differ in length");
  if (scores.cols() != 3) throw DataError("scores must have 3 columns");
  if (scores.rows() < 2) throw DataError("need at least 2 instances");

  ThresholdResult result;
  for (int d = 0; d < 3; ++d) {
    const std::vector<std::uint8_t> bits = label_bits(labels, d);
    const bool has_pos = std::find(bits.begin(), bits.end(), 1) != bits.end();
    const bool has_neg = std::find(bits.begin(), bits.end(), 0) != bits.end();
    std::vector<double> col(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i)
      col[i] = scores(static_cast<Eigen::Index>(i), d);

    if (!has_pos || !has_neg) {
      result.thresholds.t[static_cast<std::size_t>(d)] = 0.5;
      result.fallback[static_cast<std::size_t>(d)] = true;
      result.achieved_accuracy[static_cast<std::size_t>(d)] = kNan;
      continue;
    }

    double best_t = 0.5;
    double best_acc = -1.0;
    for (double cand : threshold_candidates(col)) {
      const double acc = accuracy_at(col, bits, cand, relative_importance);
      const bool better =
          acc > best_acc ||
          (acc == best_acc &&
           (std::abs(cand - 0.5) < std::abs(best_t - 0.5) ||
            (std::abs(cand - 0.5) == std::abs(best_t - 0.5) && cand < best_t)));
      if (better) {
        best_acc = acc;
        best_t = cand;
      }
    }
    result.thresholds.t[static_cast<std::size_t>(d)] = best_t;
    result.achieved_accuracy[static_cast<std::size_t>(d)] = best_acc;
  }
  return result;
}

std::vector<std::pair<double, double>> threshold_curve(
    std::span<const double> scores, std::span<const std::uint8_t> labels,
    double relative_importance) {
  if (scores.size() != labels.size())
    throw DataError("scores and labels differ in length");
  std::vector<std::pair<double, double>> curve;
  for (double cand : threshold_candidates(scores))
    curve.emplace_back(cand, accuracy_at(scores, labels, cand, relative_importance));
  return curve;
}

FaultLabel classify(const Eigen::Vector3d& outputs, const ThresholdSet& thresholds) {
  FaultLabel label;
  for (int d = 0; d < 3; ++d) {
    if (!std::isfinite(outputs[d])) throw DataError("non-finite model output");
    label.bits[static_cast<std::size_t>(d)] =
        outputs[d] >= thresholds.t[static_cast<std::size_t>(d)] ? 1 : 0;
  }
  return label;
}

void Dataset::validate() const {
  if (X.rows() < 1) throw DataError("dataset is empty");
  if (X.rows() != static_cast<Eigen::Index>(labels.size()))
    throw DataError("feature rows and labels differ in count");
  if (!X.allFinite()) throw DataError("features contain non-finite entries");
}

std::vector<std::vector<int>> partition_folds(const std::vector<FaultLabel>& labels,
                                              int folds, std::uint64_t seed) {
  const int n = static_cast<int>(labels.size());
  if (folds < 2 || folds > n)
    throw DataError("fold count must lie in [2, n]; got " + std::to_string(folds) +
                    " with n=" + std::to_string(n));

  std::vector<std::vector<int>> partition(static_cast<std::size_t>(folds));
  if (folds == n) {
    // Leave-one-out: identity partition, independent of seed and labels.
    for (int i = 0; i < n; ++i) partition[static_cast<std::size_t>(i)] = {i};
    return partition;
  }

  // Stratified where possible: deal each class round-robin, carrying the
  // fold pointer across classes so sizes differ by at most one.
  std::array<std::vector<int>, kNumFaultClasses> groups;
  for (int i = 0; i < n; ++i)
    groups[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)].class_index())]
        .push_back(i);
  std::size_t fold_ptr = 0;
  for (int cls = 0; cls < kNumFaultClasses; ++cls) {
    auto& group = groups[static_cast<std::size_t>(cls)];
    auto rng = make_rng(seed, kStreamPartition, static_cast<std::uint64_t>(cls));
    std::shuffle(group.begin(), group.end(), rng);
    for (int idx : group) {
      partition[fold_ptr % static_cast<std::size_t>(folds)].push_back(idx);
      ++fold_ptr;
    }
  }
  for (auto& fold : partition) std::sort(fold.begin(), fold.end());
  return partition;
}

namespace {

struct FoldOutcome {
  FoldRecord record;
  std::vector<int> test_indices;
  Eigen::MatrixXd test_scores;  // |test| x 3
};

std::array<double, 3> per_output_accuracy(const Eigen::MatrixXd& scores,
                                          const std::vector<FaultLabel>& labels,
                                          const ThresholdSet& t, double c) {
  std::array<double, 3> acc{kNan, kNan, kNan};
  for (int d = 0; d < 3; ++d) {
    std::vector<double> col(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
      col[i] = scores(static_cast<Eigen::Index>(i), d);
    acc[static_cast<std::size_t>(d)] = accuracy_at(
        col, label_bits(labels, d), t.t[static_cast<std::size_t>(d)], c);
  }
  return acc;
}

}  // namespace

CvReport kfold_cv(const Dataset& dataset, int folds, std::uint64_t seed,
                  const CvConfig& config) {
  dataset.validate();
  config.train.validate();
  const int n = dataset.size();
  if (n < 2) throw DataError("cross-validation needs at least 2 instances");
  if (config.n_rules < 1) throw UsageError("n_rules must be positive");
  if (config.pca_components < 1) throw UsageError("pca_components must be positive");

  const auto partition = partition_folds(dataset.labels, folds, seed);

  Eigen::MatrixXd Y(n, 3);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < 3; ++d)
      Y(i, d) = dataset.labels[static_cast<std::size_t>(i)]
                    .bits[static_cast<std::size_t>(d)];

  CvReport report;
  report.n_instances = n;
  report.threshold_mode = config.threshold_mode;
  report.paper_mode = config.paper_mode;
  report.n_rules = config.n_rules;
  report.pca_components = config.pca_components;
  report.folds = folds;

  const bool optimize_per_fold =
      config.threshold_mode == ThresholdMode::optimized && !config.paper_mode;
  const ThresholdSet fixed_set;  // 0.5 everywhere

  std::vector<FoldOutcome> outcomes;
  for (int f = 0; f < folds; ++f) {
    const auto& test = partition[static_cast<std::size_t>(f)];
    FoldOutcome outcome;
    outcome.record.fold = f;
    outcome.record.test_indices = test;
    outcome.test_indices = test;

    try {
      std::vector<int> train_idx;
      train_idx.reserve(static_cast<std::size_t>(n) - test.size());
      std::vector<char> in_test(static_cast<std::size_t>(n), 0);
      for (int idx : test) in_test[static_cast<std::size_t>(idx)] = 1;
      for (int i = 0; i < n; ++i)
        if (!in_test[static_cast<std::size_t>(i)]) train_idx.push_back(i);
      const int n_train = static_cast<int>(train_idx.size());

      Eigen::MatrixXd Xtr(n_train, dataset.X.cols());
      Eigen::MatrixXd Ytr(n_train, 3);
      std::vector<FaultLabel> labels_tr(static_cast<std::size_t>(n_train));
      for (int i = 0; i < n_train; ++i) {
        Xtr.row(i) = dataset.X.row(train_idx[static_cast<std::size_t>(i)]);
        Ytr.row(i) = Y.row(train_idx[static_cast<std::size_t>(i)]);
        labels_tr[static_cast<std::size_t>(i)] =
            dataset.labels[static_cast<std::size_t>(
                train_idx[static_cast<std::size_t>(i)])];
      }
      Eigen::MatrixXd Xte(static_cast<Eigen::Index>(test.size()), dataset.X.cols());
      for (std::size_t i = 0; i < test.size(); ++i)
        Xte.row(static_cast<Eigen::Index>(i)) =
            dataset.X.row(test[static_cast<std::size_t>(i)]);

      // PCA on the training fold only; single-sample folds skip it.
      Eigen::MatrixXd Ztr, Zte;
      if (n_train >= 2) {
        const int m = std::min<int>(
            {config.pca_components, n_train, static_cast<int>(dataset.X.cols())});
        const features::PcaModel pca = features::pca_fit(Xtr, m);
        Ztr = features::pca_transform(pca, Xtr);
        Zte = features::pca_transform(pca, Xte);
      } else {
        Ztr = Xtr;
        Zte = Xte;
      }

      const int k_eff = std::min(config.n_rules, n_train);
      neurofuzzy::TsModel model = neurofuzzy::init_antecedents(
          Ztr, k_eff, 3,
          derive_seed(config.seed, kStreamFoldInit, static_cast<std::uint64_t>(f)));
      neurofuzzy::train(model, Ztr, Ytr, config.train);

      const Eigen::MatrixXd train_scores = neurofuzzy::predict(model, Ztr);
      if (optimize_per_fold && n_train >= 2) {
        const ThresholdResult opt = optimize_thresholds(
            train_scores, labels_tr, config.relative_importance);
        outcome.record.thresholds = opt.thresholds;
        outcome.record.threshold_fallback = opt.fallback;
      } else {
        // Single-sample training folds have single-class outputs by
        // construction; fall back to 0.5 as optimize_thresholds would.
        outcome.record.thresholds = fixed_set;
        if (optimize_per_fold)
          outcome.record.threshold_fallback = {true, true, true};
      }
      outcome.record.train_accuracy = per_output_accuracy(
          train_scores, labels_tr, outcome.record.thresholds,
          config.relative_importance);
      outcome.record.train_accuracy_fixed = per_output_accuracy(
          train_scores, labels_tr, fixed_set, config.relative_importance);

      outcome.test_scores = neurofuzzy::predict(model, Zte);
    } catch (const NumericError& e) {
      if (!config.skip_failed_folds)
        throw NumericError("fold " + std::to_string(f) + ": " + e.what());
      outcome.record.failed = true;
      outcome.record.failure = e.what();
    }
    outcomes.push_back(std::move(outcome));
  }

  // Paper mode: one threshold set tuned on the pooled held-out scores.
  ThresholdSet paper_set;
  if (config.threshold_mode == ThresholdMode::optimized && config.paper_mode) {
    std::vector<FaultLabel> pooled_labels;
    std::vector<std::array<double, 3>> pooled_scores;
    for (const auto& outcome : outcomes) {
      if (outcome.record.failed) continue;
      for (std::size_t i = 0; i < outcome.test_indices.size(); ++i) {
        pooled_labels.push_back(
            dataset.labels[static_cast<std::size_t>(outcome.test_indices[i])]);
        pooled_scores.push_back({outcome.test_scores(static_cast<Eigen::Index>(i), 0),
                                 outcome.test_scores(static_cast<Eigen::Index>(i), 1),
                                 outcome.test_scores(static_cast<Eigen::Index>(i), 2)});
      }
    }
    Eigen::MatrixXd S(static_cast<Eigen::Index>(pooled_scores.size()), 3);
    for (std::size_t i = 0; i < pooled_scores.size(); ++i)
      for (int d = 0; d < 3; ++d)
        S(static_cast<Eigen::Index>(i), d) = pooled_scores[i][static_cast<std::size_t>(d)];
    const ThresholdResult opt =
        optimize_thresholds(S, pooled_labels, config.relative_importance);
    paper_set = opt.thresholds;
    for (auto& outcome : outcomes) {
      outcome.record.thresholds = paper_set;
      outcome.record.threshold_fallback = opt.fallback;
    }
  }

  // Score every held-out instance with its fold's thresholds.
  for (auto& outcome : outcomes) {
    report.fold_records.push_back(outcome.record);
    if (outcome.record.failed) continue;
    for (std::size_t i = 0; i < outcome.test_indices.size(); ++i) {
      InstanceRecord rec;
      rec.index = outcome.test_indices[i];
      rec.truth = dataset.labels[static_cast<std::size_t>(rec.index)];
      Eigen::Vector3d s = outcome.test_scores.row(static_cast<Eigen::Index>(i));
      rec.scores = {s[0], s[1], s[2]};
      rec.predicted = classify(s, outcome.record.thresholds);
      rec.correct = rec.predicted == rec.truth;
      for (int d = 0; d < 3; ++d) {
        const bool predicted = rec.predicted.bits[static_cast<std::size_t>(d)] != 0;
        const bool actual = rec.truth.bits[static_cast<std::size_t>(d)] != 0;
        auto& c = report.per_output[static_cast<std::size_t>(d)];
        if (predicted && actual) ++c.tp;
        else if (!predicted && actual) ++c.fn;
        else if (predicted && !actual) ++c.fp;
        else ++c.tn;
      }
      report.instances.push_back(rec);
    }
  }
  std::sort(report.instances.begin(), report.instances.end(),
            [](const InstanceRecord& a, const InstanceRecord& b) {
              return a.index < b.index;
            });

  report.evaluated = static_cast<int>(report.instances.size());
  for (const auto& rec : report.instances)
    if (!rec.correct) ++report.misclassified;
  report.exact_match_accuracy =
      report.evaluated > 0
          ? 1.0 - static_cast<double>(report.misclassified) /
                      static_cast<double>(report.evaluated)
          : 0.0;

  // Threshold summary: the single set when there is one, otherwise the mean
  // of the per-fold sets.
  if (config.threshold_mode == ThresholdMode::fixed) {
    report.thresholds = fixed_set;
  } else if (config.paper_mode) {
    report.thresholds = paper_set;
  } else {
    std::array<double, 3> sum{0, 0, 0};
    int used = 0;
    for (const auto& fr : report.fold_records) {
      if (fr.failed) continue;
      for (int d = 0; d < 3; ++d)
        sum[static_cast<std::size_t>(d)] += fr.thresholds.t[static_cast<std::size_t>(d)];
      ++used;
    }
    if (used > 0)
      for (int d = 0; d < 3; ++d)
        report.thresholds.t[static_cast<std::size_t>(d)] =
            sum[static_cast<std::size_t>(d)] / used;
  }
  return report;
}

CvReport loo_cv(const Dataset& dataset, const CvConfig& config) {
  return kfold_cv(dataset, dataset.size(), config.seed, config);
}

std::string format_summary(const CvReport& report) {
  std::string out;
  out += "instances: " + std::to_string(report.n_instances) + "\n";
  if (report.evaluated != report.n_instances)
    out += "evaluated: " + std::to_string(report.evaluated) +
           " (failed folds skipped)\n";
  out += "misclassified: " + std::to_string(report.misclassified) + "\n";
  out += "exact-match accuracy: " + percent(report.exact_match_accuracy) + "\n";
  out += "folds: " + std::to_string(report.folds) +
         (report.folds == report.n_instances ? " (leave-one-out)" : "") + "\n";
  out += "rules: " + std::to_string(report.n_rules) + "\n";
  out += "pca components: " + std::to_string(report.pca_components) + "\n";
  out += std::string("threshold mode: ") +
         (report.threshold_mode == ThresholdMode::fixed ? "fixed (0.5)" : "optimized") +
         (report.paper_mode ? " on pooled held-out scores" : "") + "\n";
  char buf[96];
  std::snprintf(buf, sizeof(buf), "thresholds: x=%.4f y=%.4f z=%.4f\n",
                report.thresholds.t[0], report.thresholds.t[1], report.thresholds.t[2]);
  out += buf;
  const char* names = "xyz";
  for (int d = 0; d < 3; ++d) {
    const auto& c = report.per_output[static_cast<std::size_t>(d)];
    const auto t = tpr(c);
    const auto f = fpr(c);
    std::snprintf(buf, sizeof(buf), "output %c: tp=%ld fn=%ld fp=%ld tn=%ld tpr=%s fpr=%s\n",
                  names[d], c.tp, c.fn, c.fp, c.tn,
                  t ? percent(*t).c_str() : "n/a", f ? percent(*f).c_str() : "n/a");
    out += buf;
  }
  return out;
}

namespace {

detail::json thresholds_to_json(const ThresholdSet& t) {
  return detail::json::array({t.t[0], t.t[1], t.t[2]});
}

ThresholdSet thresholds_from_json(const detail::json& j) {
  ThresholdSet t;
  for (int d = 0; d < 3; ++d)
    t.t[static_cast<std::size_t>(d)] = j.at(static_cast<std::size_t>(d)).get<double>();
  return t;
}

detail::json counts_to_json(const ConfusionCounts& c) {
  return detail::json{{"tp", c.tp}, {"fn", c.fn}, {"fp", c.fp}, {"tn", c.tn}};
}

ConfusionCounts counts_from_json(const detail::json& j) {
  ConfusionCounts c;
  c.tp = j.at("tp").get<long>();
  c.fn = j.at("fn").get<long>();
  c.fp = j.at("fp").get<long>();
  c.tn = j.at("tn").get<long>();
  return c;
}

}  // namespace

void write_report_json(const std::filesystem::path& path, const CvReport& report) {
  detail::json j;
  j["n_instances"] = report.n_instances;
  j["evaluated"] = report.evaluated;
  j["misclassified"] = report.misclassified;
  j["exact_match_accuracy"] = report.exact_match_accuracy;
  j["thresholds"] = thresholds_to_json(report.thresholds);
  j["threshold_mode"] =
      report.threshold_mode == ThresholdMode::fixed ? "fixed" : "optimized";
  j["paper_mode"] = report.paper_mode;
  j["n_rules"] = report.n_rules;
  j["pca_components"] = report.pca_components;
  j["folds"] = report.folds;
  detail::json per_output = detail::json::array();
  for (const auto& c : report.per_output) per_output.push_back(counts_to_json(c));
  j["per_output"] = std::move(per_output);

  detail::json fold_records = detail::json::array();
  for (const auto& fr : report.fold_records) {
    detail::json f;
    f["fold"] = fr.fold;
    f["test_indices"] = fr.test_indices;
    f["thresholds"] = thresholds_to_json(fr.thresholds);
    f["threshold_fallback"] = fr.threshold_fallback;
    f["train_accuracy"] = detail::json::array(
        {json_or_null(fr.train_accuracy[0]), json_or_null(fr.train_accuracy[1]),
         json_or_null(fr.train_accuracy[2])});
    f["train_accuracy_fixed"] = detail::json::array(
        {json_or_null(fr.train_accuracy_fixed[0]),
         json_or_null(fr.train_accuracy_fixed[1]),
         json_or_null(fr.train_accuracy_fixed[2])});
    f["failed"] = fr.failed;
    if (fr.failed) f["failure"] = fr.failure;
    fold_records.push_back(std::move(f));
  }
  j["fold_records"] = std::move(fold_records);

  detail::json instances = detail::json::array();
  for (const auto& rec : report.instances) {
    detail::json r;
    r["index"] = rec.index;
    r["true"] = rec.truth.to_string();
    r["pred"] = rec.predicted.to_string();
    r["scores"] = detail::json::array({rec.scores[0], rec.scores[1], rec.scores[2]});
    r["correct"] = rec.correct;
    instances.push_back(std::move(r));
  }
  j["instances"] = std::move(instances);
  detail::save_json(path, j);
}

CvReport read_report_json(const std::filesystem::path& path) {
  const detail::json j = detail::load_json(path);
  CvReport report;
  report.n_instances = j.at("n_instances").get<int>();
  report.evaluated = j.at("evaluated").get<int>();
  report.misclassified = j.at("misclassified").get<int>();
  report.exact_match_accuracy = j.at("exact_match_accuracy").get<double>();
  report.thresholds = thresholds_from_json(j.at("thresholds"));
  report.threshold_mode = j.at("threshold_mode").get<std::string>() == "fixed"
                              ? ThresholdMode::fixed
                              : ThresholdMode::optimized;
  report.paper_mode = j.at("paper_mode").get<bool>();
  report.n_rules = j.at("n_rules").get<int>();
  report.pca_components = j.at("pca_components").get<int>();
  report.folds = j.at("folds").get<int>();
  for (int d = 0; d < 3; ++d)
    report.per_output[static_cast<std::size_t>(d)] =
        counts_from_json(j.at("per_output").at(static_cast<std::size_t>(d)));
  for (const auto& f : j.at("fold_records")) {
    FoldRecord fr;
    fr.fold = f.at("fold").get<int>();
    fr.test_indices = f.at("test_indices").get<std::vector<int>>();
    fr.thresholds = thresholds_from_json(f.at("thresholds"));
    const auto fb = f.at("threshold_fallback");
    for (int d = 0; d < 3; ++d) {
      fr.threshold_fallback[static_cast<std::size_t>(d)] =
          fb.at(static_cast<std::size_t>(d)).get<bool>();
      fr.train_accuracy[static_cast<std::size_t>(d)] =
          double_or_nan(f.at("train_accuracy").at(static_cast<std::size_t>(d)));
      fr.train_accuracy_fixed[static_cast<std::size_t>(d)] =
          double_or_nan(f.at("train_accuracy_fixed").at(static_cast<std::size_t>(d)));
    }
    fr.failed = f.at("failed").get<bool>();
    if (fr.failed) fr.failure = f.value("failure", "");
    report.fold_records.push_back(std::move(fr));
  }
  for (const auto& r : j.at("instances")) {
    InstanceRecord rec;
    rec.index = r.at("index").get<int>();
    rec.truth = FaultLabel::from_string(r.at("true").get<std::string>());
    rec.predicted = FaultLabel::from_string(r.at("pred").get<std::string>());
    for (int d = 0; d < 3; ++d)
      rec.scores[static_cast<std::size_t>(d)] =
          r.at("scores").at(static_cast<std::size_t>(d)).get<double>();
    rec.correct = r.at("correct").get<bool>();
    report.instances.push_back(rec);
  }
  return report;
}

void write_predictions_csv(const std::filesystem::path& path, const CvReport& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "instance,true,pred,correct\n";
  for (const auto& rec : report.instances)
    out << rec.index << ',' << rec.truth.to_string() << ',' << rec.predicted.to_string()
        << ',' << (rec.correct ? 1 : 0) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace pme::evaluation
