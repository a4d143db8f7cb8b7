#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pme/evaluation.hpp"
#include "pme/features.hpp"
#include "pme/modal.hpp"
#include "pme/neurofuzzy.hpp"
#include "pme/synthdata.hpp"

namespace pme::pipeline {

struct RuleRange {
  int lo = 1;
  int hi = 10;

  bool operator==(const RuleRange&) const = default;
};

struct CvSpec {
  bool loo = true;
  int k = 10;  // used when loo is false

  bool operator==(const CvSpec&) const = default;
};

// Whole-pipeline configuration, normally read from one JSON file that the
// CLI subcommands share; flags override individual fields.
struct PipelineConfig {
  std::vector<modal::Band> bands;  // defaults to the reference band list
  int pca_components = 10;
  RuleRange rule_range;
  CvSpec cv;
  evaluation::ThresholdMode threshold_mode = evaluation::ThresholdMode::optimized;
  bool paper_mode = false;
  neurofuzzy::TrainConfig train;
  synthdata::PopulationConfig synth;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const PipelineConfig&) const = default;
};

PipelineConfig default_config();
PipelineConfig read_config(const std::filesystem::path& path);
void write_config(const std::filesystem::path& path, const PipelineConfig& config);

// Features for one instance's FRF set under the config bands.
evaluation::Dataset extract_dataset(const std::vector<synthdata::LabeledInstance>& instances,
                                    const std::vector<modal::Band>& bands,
                                    features::FeatureLayout* layout_out = nullptr);

struct CrossvalResult {
  neurofuzzy::RuleCountSelection selection;  // trivial when the range is one K
  evaluation::CvReport report;
  // Final model fit on the full dataset with the chosen rule count.
  features::PcaModel pca;
  neurofuzzy::TsModel model;
  evaluation::ThresholdSet final_thresholds;
  std::array<bool, 3> final_threshold_fallback{false, false, false};
  // Accuracy-vs-threshold curves per output over the held-out scores.
  std::array<std::vector<std::pair<double, double>>, 3> threshold_curves;
};

// PCA reduction, rule-count selection over config.rule_range (10-fold),
// then LOO or k-fold cross-validation with the chosen count, then a final
// fit on all instances.
CrossvalResult run_crossval(const evaluation::Dataset& dataset,
                            const PipelineConfig& config);

// Deployable bundle: bands + PCA + TS model in one file, plus the
// thresholds alongside. `pairs` records the expected (excitation, sensor)
// pairs when known; it may be empty for bundles built from a bare feature
// matrix, in which case only the dimension is checked at classify time.
struct ModelBundle {
  std::vector<modal::Band> bands;
  std::vector<std::pair<int, int>> pairs;
  features::PcaModel pca;
  neurofuzzy::TsModel model;
};

void write_model_bundle(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle read_model_bundle(const std::filesystem::path& path);

void write_thresholds(const std::filesystem::path& path,
                      const evaluation::ThresholdSet& thresholds,
                      evaluation::ThresholdMode mode);
evaluation::ThresholdSet read_thresholds(const std::filesystem::path& path);

// Scores and labels for new instances under a trained bundle.
struct Classification {
  FaultLabel label;
  std::array<double, 3> scores{0, 0, 0};
};

std::vector<Classification> classify_features(const ModelBundle& bundle,
                                              const Eigen::MatrixXd& X,
                                              const evaluation::ThresholdSet& thresholds);

}  // namespace pme::pipeline
