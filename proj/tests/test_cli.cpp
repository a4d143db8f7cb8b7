// Subprocess tests of the pmec binary: exit codes, error formatting, and a
// tiny synth -> extract -> crossval -> classify flow.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "pme/modal.hpp"
#include "pme/pipeline.hpp"
#include "pme/synthdata.hpp"

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void check(bool ok, const std::string& what) {
  if (!ok) {
    ++g_failures;
    std::cerr << "FAILED: " << what << "\n";
  }
}

std::string g_bin;
fs::path g_dir;

int run(const std::string& args, const std::string& tag) {
  const std::string cmd = g_bin + " " + args + " >" + (g_dir / (tag + ".out")).string() +
                          " 2>" + (g_dir / (tag + ".err")).string();
  const int status = std::system(cmd.c_str());
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  int n = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

pme::pipeline::PipelineConfig tiny_config() {
  pme::pipeline::PipelineConfig config = pme::pipeline::default_config();
  config.synth.n_cylinders = 8;
  config.synth.repeats_per_cylinder = 1;
  config.synth.n_modes = 3;
  config.synth.n_locations = 4;
  config.synth.grid_spacing_hz = 8.0;
  config.synth.seed = 77;
  config.seed = 77;
  const auto baseline = pme::synthdata::generate_baseline(config.synth, 77);
  config.bands = pme::modal::bands_around(baseline.natural_freqs_hz, 6.0);
  config.pca_components = 4;
  config.rule_range = {1, 2};
  config.train.max_epochs = 20;
  return config;
}

}  // namespace

int main() {
  const char* bin = std::getenv("PMEC_BIN");
  if (!bin) {
    std::cerr << "PMEC_BIN not set\n";
    return 1;
  }
  g_bin = bin;
  g_dir = fs::temp_directory_path() / ("pme_cli_" + std::to_string(::getpid()));
  fs::create_directories(g_dir);

  // No subcommand is a usage error.
  check(run("", "noargs") == 1, "no arguments exits 1");

  // Config validation failures exit 1 and name the field.
  {
    std::ofstream out(g_dir / "bad.json");
    out << "{\"pca_components\": 0}\n";
  }
  check(run("synth --config " + (g_dir / "bad.json").string() + " --out " +
                (g_dir / "ds_bad").string(),
            "badcfg") == 1,
        "invalid config exits 1");
  const std::string badcfg_err = slurp(g_dir / "badcfg.err");
  check(badcfg_err.rfind("error:", 0) == 0, "error line starts with 'error:'");
  check(badcfg_err.find("pca_components") != std::string::npos,
        "error names the offending field");
  check(badcfg_err.find('\n') == badcfg_err.size() - 1, "single-line error output");

  // Missing input files are data errors (exit 2).
  pme::pipeline::write_config(g_dir / "config.json", tiny_config());
  check(run("extract --dataset " + (g_dir / "missing").string() + " --config " +
                (g_dir / "config.json").string() + " --out " +
                (g_dir / "f.csv").string(),
            "missing_ds") == 2,
        "missing dataset exits 2");

  // synth -> extract -> crossval -> classify -> report.
  check(run("synth --config " + (g_dir / "config.json").string() + " --out " +
                (g_dir / "ds").string(),
            "synth") == 0,
        "synth succeeds");
  check(slurp(g_dir / "synth.out").find("8 instances") != std::string::npos,
        "synth prints the instance count");

  check(run("extract --dataset " + (g_dir / "ds").string() + " --config " +
                (g_dir / "config.json").string() + " --out " +
                (g_dir / "features.csv").string(),
            "extract") == 0,
        "extract succeeds");
  {
    std::ifstream in(g_dir / "features.csv");
    std::string header;
    std::getline(in, header);
    int commas = 0;
    for (char c : header) commas += c == ',';
    check(commas == 3 * 4 * 2, "extract writes Q*P*2 feature columns plus label");
  }

  check(run("crossval --features " + (g_dir / "features.csv").string() + " --config " +
                (g_dir / "config.json").string() + " --out " + (g_dir / "cv").string(),
            "crossval") == 0,
        "crossval succeeds");
  for (const char* f : {"report.json", "summary.txt", "predictions.csv", "model.json",
                        "thresholds.json", "config_echo.json", "selection.csv",
                        "threshold_curve_x.csv", "threshold_curve_y.csv",
                        "threshold_curve_z.csv"})
    check(fs::exists(g_dir / "cv" / f), std::string("crossval writes ") + f);

  // The echoed config re-parses to an equal config.
  check(pme::pipeline::read_config(g_dir / "cv" / "config_echo.json") == tiny_config(),
        "config echo round trip");

  check(run("classify --model " + (g_dir / "cv" / "model.json").string() +
                " --thresholds " + (g_dir / "cv" / "thresholds.json").string() +
                " --input " + (g_dir / "features.csv").string(),
            "classify") == 0,
        "classify succeeds");
  check(count_lines(g_dir / "classify.out") == 8, "classify prints one line per instance");

  check(run("classify --model " + (g_dir / "cv" / "model.json").string() +
                " --thresholds " + (g_dir / "cv" / "thresholds.json").string() +
                " --input " + (g_dir / "ds").string(),
            "classify_dir") == 0,
        "classify accepts a dataset directory");
  check(count_lines(g_dir / "classify_dir.out") == 8,
        "dataset-directory classification prints one line per instance");

  check(run("report --report " + (g_dir / "cv" / "report.json").string(), "report") == 0,
        "report succeeds");
  check(slurp(g_dir / "report.out").find("exact-match accuracy") != std::string::npos,
        "report prints the summary");

  // Same seed twice: byte-identical dataset manifests.
  check(run("synth --config " + (g_dir / "config.json").string() + " --out " +
                (g_dir / "ds2").string(),
            "synth2") == 0,
        "second synth succeeds");
  check(slurp(g_dir / "ds" / "manifest.json") == slurp(g_dir / "ds2" / "manifest.json"),
        "same-seed manifests are byte-identical");

  // Rerunning extract reproduces the same file bytes.
  check(run("extract --dataset " + (g_dir / "ds").string() + " --config " +
                (g_dir / "config.json").string() + " --out " +
                (g_dir / "features2.csv").string(),
            "extract2") == 0,
        "second extract succeeds");
  check(slurp(g_dir / "features.csv") == slurp(g_dir / "features2.csv"),
        "extract output is reproducible");

  // Empty band list: usage error, no output file.
  {
    std::ofstream out(g_dir / "nobands.json");
    out << "{\"bands\": [], \"synth\": {\"n_cylinders\": 8}}\n";
  }
  check(run("extract --dataset " + (g_dir / "ds").string() + " --config " +
                (g_dir / "nobands.json").string() + " --out " +
                (g_dir / "empty.csv").string(),
            "nobands") == 1,
        "empty band list exits 1");
  check(!fs::exists(g_dir / "empty.csv"), "no output file on config error");

  // Malformed features CSV: data error naming the line.
  {
    std::ofstream out(g_dir / "mangled.csv");
    out << "b0_p0_re,label\n0.5,000\noops\n";
  }
  check(run("crossval --features " + (g_dir / "mangled.csv").string() + " --config " +
                (g_dir / "config.json").string() + " --out " + (g_dir / "cv2").string(),
            "mangled") == 2,
        "malformed CSV exits 2");
  check(slurp(g_dir / "mangled.err").find(":3") != std::string::npos,
        "malformed CSV error names the line");

  if (g_failures == 0) {
    std::cout << "cli tests passed\n";
    fs::remove_all(g_dir);
    return 0;
  }
  std::cerr << g_failures << " cli checks failed; artifacts in " << g_dir << "\n";
  return 1;
}
