#include "pme/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "config_json.hpp"
#include "detail.hpp"
#include "model_json.hpp"
#include "pme/errors.hpp"
#include "pme/rng.hpp"

namespace pme::pipeline {

namespace {

enum : std::uint64_t { kStreamSelect = 0x5e1e, kStreamFinal = 0xf1a1 };

detail::json bands_to_json(const std::vector<modal::Band>& bands) {
  detail::json arr = detail::json::array();
  for (const auto& band : bands)
    arr.push_back(detail::json{{"lo_hz", band.lo_hz}, {"hi_hz", band.hi_hz}});
  return arr;
}

std::vector<modal::Band> bands_from_json(const detail::json& arr) {
  std::vector<modal::Band> bands;
  for (const auto& b : arr)
    bands.push_back({b.at("lo_hz").get<double>(), b.at("hi_hz").get<double>()});
  return bands;
}

Eigen::MatrixXd labels_matrix(const std::vector<FaultLabel>& labels) {
  Eigen::MatrixXd Y(static_cast<Eigen::Index>(labels.size()), 3);
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (int d = 0; d < 3; ++d)
      Y(static_cast<Eigen::Index>(i), d) = labels[i].bits[static_cast<std::size_t>(d)];
  return Y;
}

}  // namespace

void PipelineConfig::validate() const {
  if (bands.empty()) throw UsageError("config field 'bands' must not be empty");
  for (const auto& band : bands) band.validate();
  if (pca_components < 1)
    throw UsageError("config field 'pca_components' must be positive");
  if (rule_range.lo < 1 || rule_range.hi < rule_range.lo)
    throw UsageError("config field 'rule_range' must satisfy 1 <= lo <= hi");
  if (!cv.loo && cv.k < 2)
    throw UsageError("config field 'cv.k' must be at least 2");
  train.validate();
  synth.validate();
}

PipelineConfig default_config() {
  PipelineConfig config;
  config.bands = modal::default_analysis_bands();
  return config;
}

PipelineConfig read_config(const std::filesystem::path& path) {
  const detail::json j = detail::load_json(path);
  PipelineConfig config = default_config();
  try {
    if (j.contains("bands")) config.bands = bands_from_json(j.at("bands"));
    config.pca_components = j.value("pca_components", config.pca_components);
    if (j.contains("rule_range")) {
      config.rule_range.lo = j.at("rule_range").value("lo", 1);
      config.rule_range.hi = j.at("rule_range").value("hi", 10);
    }
    if (j.contains("cv")) {
      const std::string type = j.at("cv").value("type", "loo");
      if (type == "loo") {
        config.cv.loo = true;
      } else if (type == "kfold") {
        config.cv.loo = false;
        config.cv.k = j.at("cv").value("k", 10);
      } else {
        throw UsageError("config field 'cv.type' must be 'loo' or 'kfold'");
      }
    }
    if (j.contains("threshold_mode")) {
      const std::string mode = j.at("threshold_mode").get<std::string>();
      if (mode == "fixed")
        config.threshold_mode = evaluation::ThresholdMode::fixed;
      else if (mode == "optimized")
        config.threshold_mode = evaluation::ThresholdMode::optimized;
      else
        throw UsageError("config field 'threshold_mode' must be 'fixed' or 'optimized'");
    }
    config.paper_mode = j.value("paper_mode", config.paper_mode);
    if (j.contains("train")) {
      const auto& t = j.at("train");
      config.train.max_epochs = t.value("max_epochs", config.train.max_epochs);
      config.train.learning_rate = t.value("learning_rate", config.train.learning_rate);
      config.train.tolerance = t.value("tolerance", config.train.tolerance);
      config.train.seed = t.value("seed", config.train.seed);
    }
    if (j.contains("synth"))
      config.synth = synthdata::population_from_json(j.at("synth"));
    config.seed = j.value("seed", config.seed);
  } catch (const detail::json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  config.validate();
  return config;
}

namespace {

detail::json config_to_json(const PipelineConfig& config) {
  detail::json j;
  j["bands"] = bands_to_json(config.bands);
  j["pca_components"] = config.pca_components;
  j["rule_range"] = detail::json{{"lo", config.rule_range.lo}, {"hi", config.rule_range.hi}};
  if (config.cv.loo)
    j["cv"] = detail::json{{"type", "loo"}};
  else
    j["cv"] = detail::json{{"type", "kfold"}, {"k", config.cv.k}};
  j["threshold_mode"] =
      config.threshold_mode == evaluation::ThresholdMode::fixed ? "fixed" : "optimized";
  j["paper_mode"] = config.paper_mode;
  j["train"] = detail::json{{"max_epochs", config.train.max_epochs},
                            {"learning_rate", config.train.learning_rate},
                            {"tolerance", config.train.tolerance},
                            {"seed", config.train.seed}};
  j["synth"] = synthdata::population_to_json(config.synth);
  j["seed"] = config.seed;
  return j;
}

}  // namespace

void write_config(const std::filesystem::path& path, const PipelineConfig& config) {
  detail::save_json(path, config_to_json(config));
}

evaluation::Dataset extract_dataset(const std::vector<synthdata::LabeledInstance>& instances,
                                    const std::vector<modal::Band>& bands,
                                    features::FeatureLayout* layout_out) {
  if (instances.empty()) throw DataError("no instances to extract features from");
  const features::FeatureLayout layout =
      features::derive_layout(instances.front().frfs, bands);

  evaluation::Dataset dataset;
  dataset.X.resize(static_cast<Eigen::Index>(instances.size()), layout.dimension());
  dataset.labels.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    dataset.X.row(static_cast<Eigen::Index>(i)) =
        features::extract_features(instances[i].frfs, bands, layout).transpose();
    dataset.labels.push_back(instances[i].label);
  }
  if (layout_out) *layout_out = layout;
  return dataset;
}

CrossvalResult run_crossval(const evaluation::Dataset& dataset,
                            const PipelineConfig& config) {
  config.validate();
  dataset.validate();
  const int n = dataset.size();
  const int d = static_cast<int>(dataset.X.cols());

  // Reduction used for rule-count selection and the final model. CV folds
  // refit their own PCA internally.
  const int m = std::min({config.pca_components, n, d});
  const features::PcaModel pca = features::pca_fit(dataset.X, m);
  const Eigen::MatrixXd Z = features::pca_transform(pca, dataset.X);
  const Eigen::MatrixXd Y = labels_matrix(dataset.labels);

  CrossvalResult result;
  if (config.rule_range.lo == config.rule_range.hi) {
    result.selection.chosen = config.rule_range.lo;
    result.selection.k_min = config.rule_range.lo;
    result.selection.mean_error = {};
    result.selection.std_error = {};
  } else {
    result.selection = neurofuzzy::select_rule_count(
        Z, Y, config.rule_range.lo, config.rule_range.hi,
        std::min(10, n), derive_seed(config.seed, kStreamSelect), config.train);
  }

  evaluation::CvConfig cv_config;
  cv_config.pca_components = config.pca_components;
  cv_config.n_rules = result.selection.chosen;
  cv_config.threshold_mode = config.threshold_mode;
  cv_config.paper_mode = config.paper_mode;
  cv_config.train = config.train;
  cv_config.seed = config.seed;
  result.report = config.cv.loo
                      ? evaluation::loo_cv(dataset, cv_config)
                      : evaluation::kfold_cv(dataset, config.cv.k, config.seed, cv_config);

  // Final deployable model on all instances.
  result.pca = pca;
  result.model = neurofuzzy::init_antecedents(
      Z, std::min(result.selection.chosen, n), 3,
      derive_seed(config.seed, kStreamFinal));
  neurofuzzy::train(result.model, Z, Y, config.train);
  if (config.threshold_mode == evaluation::ThresholdMode::optimized) {
    const Eigen::MatrixXd scores = neurofuzzy::predict(result.model, Z);
    const evaluation::ThresholdResult opt =
        evaluation::optimize_thresholds(scores, dataset.labels);
    result.final_thresholds = opt.thresholds;
    result.final_threshold_fallback = opt.fallback;
  }

  // Accuracy-vs-threshold curves over the held-out scores.
  for (int output = 0; output < 3; ++output) {
    std::vector<double> scores;
    std::vector<std::uint8_t> bits;
    for (const auto& rec : result.report.instances) {
      scores.push_back(rec.scores[static_cast<std::size_t>(output)]);
      bits.push_back(rec.truth.bits[static_cast<std::size_t>(output)]);
    }
    if (!scores.empty())
      result.threshold_curves[static_cast<std::size_t>(output)] =
          evaluation::threshold_curve(scores, bits);
  }
  return result;
}

void write_model_bundle(const std::filesystem::path& path, const ModelBundle& bundle) {
  detail::json j;
  j["version"] = 1;
  j["bands"] = bands_to_json(bundle.bands);
  detail::json pairs = detail::json::array();
  for (const auto& [k, l] : bundle.pairs)
    pairs.push_back(detail::json::array({k, l}));
  j["pairs"] = std::move(pairs);
  j["pca"] = features::pca_to_json(bundle.pca);
  j["model"] = neurofuzzy::ts_to_json(bundle.model);
  detail::save_json(path, j);
}

ModelBundle read_model_bundle(const std::filesystem::path& path) {
  const detail::json j = detail::load_json(path);
  ModelBundle bundle;
  bundle.bands = bands_from_json(j.at("bands"));
  for (const auto& pair : j.at("pairs"))
    bundle.pairs.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
  bundle.pca = features::pca_from_json(j.at("pca"), path.string());
  bundle.model = neurofuzzy::ts_from_json(j.at("model"), path.string());
  return bundle;
}

void write_thresholds(const std::filesystem::path& path,
                      const evaluation::ThresholdSet& thresholds,
                      evaluation::ThresholdMode mode) {
  detail::json j;
  j["thresholds"] = detail::json::array(
      {thresholds.t[0], thresholds.t[1], thresholds.t[2]});
  j["mode"] = mode == evaluation::ThresholdMode::fixed ? "fixed" : "optimized";
  detail::save_json(path, j);
}

evaluation::ThresholdSet read_thresholds(const std::filesystem::path& path) {
  const detail::json j = detail::load_json(path);
  evaluation::ThresholdSet t;
  for (int i = 0; i < 3; ++i)
    t.t[static_cast<std::size_t>(i)] =
        j.at("thresholds").at(static_cast<std::size_t>(i)).get<double>();
  return t;
}

std::vector<Classification> classify_features(const ModelBundle& bundle,
                                              const Eigen::MatrixXd& X,
                                              const evaluation::ThresholdSet& thresholds) {
  if (X.cols() != bundle.pca.input_dimension())
    throw DataError("feature dimension mismatch: expected " +
                    std::to_string(bundle.pca.input_dimension()) + ", got " +
                    std::to_string(X.cols()));
  const Eigen::MatrixXd Z = features::pca_transform(bundle.pca, X);
  const Eigen::MatrixXd scores = neurofuzzy::predict(bundle.model, Z);

  std::vector<Classification> out;
  out.reserve(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Classification c;
    c.scores = {scores(i, 0), scores(i, 1), scores(i, 2)};
    c.label = evaluation::classify(scores.row(i).transpose(), thresholds);
    out.push_back(c);
  }
  return out;
}

}  // namespace pme::pipeline
