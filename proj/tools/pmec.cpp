// pmec — pseudomodal-energy fault classification pipeline.
//
// Subcommands: synth, extract, crossval, classify, report. One JSON config
// file drives the pipeline; flags override individual fields. Exit codes:
// 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pme/errors.hpp"
#include "pme/evaluation.hpp"
#include "pme/features.hpp"
#include "pme/pipeline.hpp"
#include "pme/synthdata.hpp"

namespace {

namespace fs = std::filesystem;
using pme::pipeline::PipelineConfig;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> pca;
  std::optional<std::string> threshold_mode;
  std::optional<bool> paper_mode;
  std::optional<std::string> rules;  // "K" or "lo:hi"
  bool loo = false;
  std::optional<int> kfold;
};

void apply(PipelineConfig& config, const Overrides& o) {
  if (o.seed) {
    config.seed = *o.seed;
    config.synth.seed = *o.seed;
    config.train.seed = *o.seed;
  }
  if (o.pca) config.pca_components = *o.pca;
  if (o.threshold_mode) {
    if (*o.threshold_mode == "fixed")
      config.threshold_mode = pme::evaluation::ThresholdMode::fixed;
    else if (*o.threshold_mode == "optimized")
      config.threshold_mode = pme::evaluation::ThresholdMode::optimized;
    else
      throw pme::UsageError("--threshold-mode must be 'fixed' or 'optimized'");
  }
  if (o.paper_mode) config.paper_mode = *o.paper_mode;
  if (o.rules) {
    const auto colon = o.rules->find(':');
    try {
      if (colon == std::string::npos) {
        config.rule_range.lo = config.rule_range.hi = std::stoi(*o.rules);
      } else {
        config.rule_range.lo = std::stoi(o.rules->substr(0, colon));
        config.rule_range.hi = std::stoi(o.rules->substr(colon + 1));
      }
    } catch (const std::exception&) {
      throw pme::UsageError("--rules expects 'K' or 'lo:hi'");
    }
  }
  if (o.loo) config.cv.loo = true;
  if (o.kfold) {
    config.cv.loo = false;
    config.cv.k = *o.kfold;
  }
  config.validate();
}

std::string csv_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int cmd_synth(const std::string& config_path, const std::string& out_dir,
              const Overrides& overrides) {
  PipelineConfig config = pme::pipeline::read_config(config_path);
  apply(config, overrides);
  const auto instances = pme::synthdata::generate_population(config.synth);
  pme::synthdata::write_dataset(out_dir, instances, config.synth);
  std::cout << "wrote " << instances.size() << " instances to " << out_dir << "\n";
  return 0;
}

int cmd_extract(const std::string& dataset_dir, const std::string& config_path,
                const std::string& out_csv, const Overrides& overrides) {
  PipelineConfig config = pme::pipeline::read_config(config_path);
  apply(config, overrides);
  const auto data = pme::synthdata::read_dataset(dataset_dir);
  pme::features::FeatureLayout layout;
  const auto dataset = pme::pipeline::extract_dataset(data.instances, config.bands, &layout);

  pme::features::LabeledFeatures out;
  out.X = dataset.X;
  out.labels = dataset.labels;
  for (int c = 0; c < layout.dimension(); ++c)
    out.column_names.push_back(layout.column_name(c));
  pme::features::write_features_csv(out_csv, out);
  std::cout << "wrote " << out.X.rows() << " x " << out.X.cols()
            << " feature matrix to " << out_csv << "\n";
  return 0;
}

int cmd_crossval(const std::string& features_csv, const std::string& config_path,
                 const std::string& out_dir, const Overrides& overrides) {
  PipelineConfig config = pme::pipeline::read_config(config_path);
  apply(config, overrides);
  const auto data = pme::features::read_features_csv(features_csv);

  pme::evaluation::Dataset dataset;
  dataset.X = data.X;
  dataset.labels = data.labels;
  const auto result = pme::pipeline::run_crossval(dataset, config);

  const fs::path out(out_dir);
  fs::create_directories(out);
  pme::evaluation::write_report_json(out / "report.json", result.report);
  pme::evaluation::write_predictions_csv(out / "predictions.csv", result.report);
  pme::pipeline::write_config(out / "config_echo.json", config);

  const std::string summary = pme::evaluation::format_summary(result.report);
  {
    std::ofstream sfile(out / "summary.txt");
    sfile << summary;
  }

  // Rule-count selection table (empty when the range is a single K).
  {
    std::ofstream sel(out / "selection.csv");
    sel << "rules,mean_error,std_error,chosen\n";
    for (std::size_t i = 0; i < result.selection.mean_error.size(); ++i) {
      const int k = result.selection.k_min + static_cast<int>(i);
      sel << k << ',' << csv_double(result.selection.mean_error[i]) << ','
          << csv_double(result.selection.std_error[i]) << ','
          << (k == result.selection.chosen ? 1 : 0) << '\n';
    }
  }

  const char* names = "xyz";
  for (int d = 0; d < 3; ++d) {
    std::ofstream curve(out / (std::string("threshold_curve_") + names[d] + ".csv"));
    curve << "threshold,acc\n";
    for (const auto& [t, acc] : result.threshold_curves[static_cast<std::size_t>(d)])
      curve << csv_double(t) << ',' << csv_double(acc) << '\n';
  }

  pme::pipeline::ModelBundle bundle;
  bundle.bands = config.bands;
  bundle.pca = result.pca;
  bundle.model = result.model;
  pme::pipeline::write_model_bundle(out / "model.json", bundle);
  pme::pipeline::write_thresholds(out / "thresholds.json", result.final_thresholds,
                                  config.threshold_mode);

  std::cout << summary;
  std::cout << "selected rules: " << result.selection.chosen << "\n";
  std::cout << "report written to " << out_dir << "\n";
  return 0;
}

int cmd_classify(const std::string& model_path, const std::string& thresholds_path,
                 const std::string& input) {
  const auto bundle = pme::pipeline::read_model_bundle(model_path);
  const auto thresholds = pme::pipeline::read_thresholds(thresholds_path);

  Eigen::MatrixXd X;
  if (fs::is_directory(input)) {
    const auto data = pme::synthdata::read_dataset(input);
    pme::features::FeatureLayout layout;
    const auto dataset =
        pme::pipeline::extract_dataset(data.instances, bundle.bands, &layout);
    if (!bundle.pairs.empty() && layout.pairs != bundle.pairs)
      throw pme::DataError("dataset location pairs do not match the model bundle");
    X = dataset.X;
  } else {
    X = pme::features::read_features_csv(input).X;
  }

  const auto results = pme::pipeline::classify_features(bundle, X, thresholds);
  for (const auto& r : results)
    std::cout << r.label.to_string() << ',' << csv_double(r.scores[0]) << ','
              << csv_double(r.scores[1]) << ',' << csv_double(r.scores[2]) << "\n";
  return 0;
}

int cmd_report(const std::string& report_path) {
  const auto report = pme::evaluation::read_report_json(report_path);
  std::cout << pme::evaluation::format_summary(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pseudomodal-energy fault classification pipeline"};
  app.require_subcommand(1);

  Overrides overrides;
  std::string config_path, out_path, dataset_dir, features_csv, model_path,
      thresholds_path, input_path, report_path;

  const auto add_overrides = [&](CLI::App* cmd, bool cv_flags) {
    cmd->add_option("--seed", overrides.seed, "override every seed in the config");
    if (cv_flags) {
      cmd->add_option("--pca", overrides.pca, "PCA component count");
      cmd->add_option("--threshold-mode", overrides.threshold_mode,
                      "fixed | optimized");
      cmd->add_flag_callback(
          "--paper-mode", [&] { overrides.paper_mode = true; },
          "optimize one threshold set on the pooled held-out scores");
      cmd->add_option("--rules", overrides.rules, "rule count K or range lo:hi");
      cmd->add_flag_callback("--loo", [&] { overrides.loo = true; },
                             "leave-one-out cross-validation");
      cmd->add_option("--kfold", overrides.kfold, "k-fold cross-validation");
    }
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset directory");
  synth->add_option("--config", config_path, "pipeline config JSON")->required();
  synth->add_option("--out", out_path, "output dataset directory")->required();
  add_overrides(synth, false);

  auto* extract = app.add_subcommand("extract", "extract pseudomodal-energy features");
  extract->add_option("--dataset", dataset_dir, "dataset directory")->required();
  extract->add_option("--config", config_path, "pipeline config JSON")->required();
  extract->add_option("--out", out_path, "output features CSV")->required();
  add_overrides(extract, false);

  auto* crossval = app.add_subcommand("crossval", "cross-validate the classifier");
  crossval->add_option("--features", features_csv, "features CSV")->required();
  crossval->add_option("--config", config_path, "pipeline config JSON")->required();
  crossval->add_option("--out", out_path, "output report directory")->required();
  add_overrides(crossval, true);

  auto* classify = app.add_subcommand("classify", "classify new instances");
  classify->add_option("--model", model_path, "model bundle JSON")->required();
  classify->add_option("--thresholds", thresholds_path, "thresholds JSON")->required();
  classify->add_option("--input", input_path, "features CSV or dataset directory")
      ->required();

  auto* report = app.add_subcommand("report", "print the summary of a report");
  report->add_option("--report", report_path, "report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (app.got_subcommand(synth)) return cmd_synth(config_path, out_path, overrides);
    if (app.got_subcommand(extract))
      return cmd_extract(dataset_dir, config_path, out_path, overrides);
    if (app.got_subcommand(crossval))
      return cmd_crossval(features_csv, config_path, out_path, overrides);
    if (app.got_subcommand(classify))
      return cmd_classify(model_path, thresholds_path, input_path);
    if (app.got_subcommand(report)) return cmd_report(report_path);
  } catch (const pme::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const pme::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pme::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
