#include "pme/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "config_json.hpp"
#include "detail.hpp"
#include "pme/errors.hpp"
#include "pme/rng.hpp"

namespace pme::synthdata {

namespace {

enum : std::uint64_t {
  kStreamBaseline = 0xba5e,
  kStreamClasses = 0xc1a5,
  kStreamFault = 0xfa01,
  kStreamHole = 0x401e,
  kStreamMfg = 0x3f6c,
  kStreamBc = 0xbc01,
  kStreamNoise = 0x0153,
};

constexpr double kMinFreqGapHz = 1e-6;

// Manufacturing scatter between nominally identical cylinders: per-cylinder
// frequency and mode-shape deviations from the fleet nominal, drawn once per
// cylinder. Sized well below the fault severities so classes stay learnable.
constexpr double kCylinderFreqVariationPct = 1.0;
constexpr double kCylinderShapeVariation = 0.01;

// Fraction of modes a fault in one substructure affects.
constexpr double kFaultModeProbability = 0.5;

// Hole severity varies from cylinder to cylinder: the systematic fault
// signature is scaled by a per-cylinder factor in this range, so faulted
// cylinders span a continuum from barely detectable to pronounced.
constexpr double kHoleSeverityScaleLo = 0.25;
constexpr double kHoleSeverityScaleHi = 1.0;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng);
}

// Keeps the frequency sequence strictly increasing after perturbations.
void enforce_increasing(std::vector<double>& freqs) {
  for (std::size_t i = 1; i < freqs.size(); ++i)
    if (freqs[i] <= freqs[i - 1]) freqs[i] = freqs[i - 1] + kMinFreqGapHz;
}

}  // namespace

void PopulationConfig::validate() const {
  if (n_cylinders < 1) throw UsageError("n_cylinders must be positive");
  if (repeats_per_cylinder < 1) throw UsageError("repeats_per_cylinder must be positive");
  if (n_modes < 1) throw UsageError("n_modes must be positive");
  if (n_locations < 3)
    throw UsageError("n_locations must be at least 3 (one per substructure)");
  if (!(fault_severity_pct.first > 0.0 && fault_severity_pct.second < 50.0 &&
        fault_severity_pct.first <= fault_severity_pct.second))
    throw UsageError("fault_severity_pct must satisfy 0 < lo <= hi < 50");
  if (!(shape_perturbation > 0.0 && shape_perturbation < 0.5))
    throw UsageError("shape_perturbation must lie in (0, 0.5)");
  if (!(bc_jitter_pct > 0.0 && bc_jitter_pct < 50.0))
    throw UsageError("bc_jitter_pct must lie in (0, 50)");
  if (noise_snr_db && !std::isfinite(*noise_snr_db))
    throw UsageError("noise_snr_db must be finite (omit it to disable noise)");
  if (!(grid_spacing_hz > 0.0)) throw UsageError("grid_spacing_hz must be positive");
  if (sensor_location < 0 || sensor_location >= n_locations)
    throw UsageError("sensor_location out of range");
  if (!class_weights.empty()) {
    if (class_weights.size() != kNumFaultClasses)
      throw UsageError("class_weights needs exactly 8 entries");
    for (double w : class_weights)
      if (!(w > 0.0)) throw UsageError("class_weights must be positive");
  }
}

std::vector<double> make_grid(const PopulationConfig& config) {
  const auto n = static_cast<std::size_t>(
      std::floor((kGridHiHz - kGridLoHz) / config.grid_spacing_hz)) + 1;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i)
    grid[i] = kGridLoHz + static_cast<double>(i) * config.grid_spacing_hz;
  return grid;
}

std::array<std::pair<int, int>, 3> substructure_location_ranges(int n_locations) {
  if (n_locations < 3) throw UsageError("need at least 3 locations");
  const int base = n_locations / 3;
  const int first = n_locations - 2 * base;  // 7/6/6 for 19
  return {{{0, first}, {first, first + base}, {first + base, n_locations}}};
}

modal::ModalModel generate_baseline(const PopulationConfig& config, std::uint64_t seed) {
  config.validate();
  auto bands = modal::default_analysis_bands();
  std::sort(bands.begin(), bands.end(),
            [](const modal::Band& a, const modal::Band& b) { return a.lo_hz < b.lo_hz; });
  const int q = static_cast<int>(bands.size());

  // Distribute modes over the bands in order; extra modes double up in the
  // earliest bands. Draws stay inside the central 70% of each band so every
  // frequency is bracketed with margin.
  std::vector<int> counts(static_cast<std::size_t>(q), config.n_modes / q);
  for (int b = 0; b < config.n_modes % q; ++b) ++counts[static_cast<std::size_t>(b)];

  auto rng = make_rng(seed, kStreamBaseline);
  std::vector<double> freqs;
  freqs.reserve(static_cast<std::size_t>(config.n_modes));
  for (int b = 0; b < q; ++b) {
    const double width = bands[static_cast<std::size_t>(b)].hi_hz -
                         bands[static_cast<std::size_t>(b)].lo_hz;
    const double lo = bands[static_cast<std::size_t>(b)].lo_hz + 0.15 * width;
    const double slice = 0.7 * width / std::max(1, counts[static_cast<std::size_t>(b)]);
    for (int s = 0; s < counts[static_cast<std::size_t>(b)]; ++s)
      freqs.push_back(uniform(rng, lo + s * slice, lo + (s + 1) * slice));
  }
  enforce_increasing(freqs);

  modal::ModalModel model;
  model.natural_freqs_hz = std::move(freqs);
  model.damping_ratios.resize(static_cast<std::size_t>(config.n_modes));
  for (double& z : model.damping_ratios) z = uniform(rng, 0.002, 0.02);

  // Smooth pseudo-random shapes: a few low-order circumferential harmonics
  // with random amplitude and phase, unit-normalized per mode.
  const int n_loc = config.n_locations;
  model.mode_shapes.resize(config.n_modes, n_loc);
  for (int i = 0; i < config.n_modes; ++i) {
    std::array<double, 3> amp{}, phase{};
    for (int h = 0; h < 3; ++h) {
      amp[static_cast<std::size_t>(h)] = uniform(rng, -1.0, 1.0);
      phase[static_cast<std::size_t>(h)] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    }
    for (int l = 0; l < n_loc; ++l) {
      double v = 0.0;
      for (int h = 0; h < 3; ++h)
        v += amp[static_cast<std::size_t>(h)] *
             std::cos(std::numbers::pi * (h + 1) * (l + 0.5) / n_loc +
                      phase[static_cast<std::size_t>(h)]);
      model.mode_shapes(i, l) = v;
    }
    double norm = model.mode_shapes.row(i).norm();
    if (norm < 1e-9) {
      model.mode_shapes(i, 0) += 1.0;
      norm = model.mode_shapes.row(i).norm();
    }
    model.mode_shapes.row(i) /= norm;
  }
  model.validate();
  return model;
}

modal::ModalModel apply_faults(const modal::ModalModel& model, const FaultLabel& label,
                               const PopulationConfig& config, std::uint64_t seed,
                               double severity_scale) {
  if (!(severity_scale > 0.0) || severity_scale > 1.0)
    throw UsageError("severity_scale must lie in (0, 1]");
  modal::ModalModel out = model;
  const int n = model.n_modes();
  const auto ranges = substructure_location_ranges(model.n_locations());

  // One stream per substructure, so the perturbation of substructure s is
  // the same regardless of which other substructures are damaged.
  for (int s = 0; s < 3; ++s) {
    if (!label.bits[static_cast<std::size_t>(s)]) continue;
    auto rng = make_rng(seed, kStreamFault, static_cast<std::uint64_t>(s));

    std::vector<char> affected(static_cast<std::size_t>(n), 0);
    bool any = false;
    for (int i = 0; i < n; ++i) {
      affected[static_cast<std::size_t>(i)] = uniform(rng, 0.0, 1.0) < kFaultModeProbability;
      any = any || affected[static_cast<std::size_t>(i)];
    }
    if (!any)
      affected[static_cast<std::size_t>(
          std::min<int>(n - 1, static_cast<int>(uniform(rng, 0.0, 1.0) * n)))] = 1;

    for (int i = 0; i < n; ++i) {
      if (!affected[static_cast<std::size_t>(i)]) continue;
      const double severity = severity_scale *
                              uniform(rng, config.fault_severity_pct.first,
                                      config.fault_severity_pct.second);
      out.natural_freqs_hz[static_cast<std::size_t>(i)] *= 1.0 - severity / 100.0;
    }

    const auto [begin, end] = ranges[static_cast<std::size_t>(s)];
    for (int i = 0; i < n; ++i)
      for (int l = begin; l < end; ++l)
        out.mode_shapes(i, l) *=
            1.0 + severity_scale * uniform(rng, -config.shape_perturbation,
                                           config.shape_perturbation);
  }
  enforce_increasing(out.natural_freqs_hz);
  return out;
}

modal::ModalModel instance_model(const PopulationConfig& config,
                                 const modal::ModalModel& baseline,
                                 const FaultLabel& label, int cylinder, int repeat) {
  // Manufacturing scatter first: this cylinder's deviation from the fleet
  // nominal, fixed across repeats.
  modal::ModalModel model = baseline;
  {
    auto rng = make_rng(config.seed, kStreamMfg, static_cast<std::uint64_t>(cylinder));
    const double fv = kCylinderFreqVariationPct / 100.0;
    for (double& f : model.natural_freqs_hz) f *= 1.0 + uniform(rng, -fv, fv);
    enforce_increasing(model.natural_freqs_hz);
    for (int i = 0; i < model.n_modes(); ++i)
      for (int l = 0; l < model.n_locations(); ++l)
        model.mode_shapes(i, l) *=
            1.0 + uniform(rng, -kCylinderShapeVariation, kCylinderShapeVariation);
  }

  // The fault stream is shared across cylinders: a hole in substructure s
  // has one characteristic signature over the population, scaled per
  // cylinder by the hole severity factor. A per-cylinder stream would give
  // every cylinder its own random fault signature and no learnable class
  // structure; the scale factor keeps a continuum from barely detectable
  // to pronounced faults instead.
  {
    auto rng = make_rng(config.seed, kStreamHole, static_cast<std::uint64_t>(cylinder));
    const double scale = uniform(rng, kHoleSeverityScaleLo, kHoleSeverityScaleHi);
    model = apply_faults(model, label, config, derive_seed(config.seed, kStreamFault),
                         scale);
  }

  auto rng = make_rng(config.seed, kStreamBc, static_cast<std::uint64_t>(cylinder),
                      static_cast<std::uint64_t>(repeat));
  const double j = config.bc_jitter_pct / 100.0;
  for (double& f : model.natural_freqs_hz) f *= 1.0 + uniform(rng, -j, j);
  enforce_increasing(model.natural_freqs_hz);
  return model;
}

void add_frf_noise(signals::Frf& frf, double snr_db, std::mt19937_64& rng) {
  double power = 0.0;
  for (const auto& v : frf.values) power += std::norm(v);
  power /= static_cast<double>(frf.values.size());
  if (power == 0.0) return;
  const double sigma = std::sqrt(power * std::pow(10.0, -snr_db / 10.0) / 2.0);
  std::normal_distribution<double> gauss(0.0, sigma);
  for (auto& v : frf.values) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    v += std::complex<double>(re, im);
  }
}

std::vector<FaultLabel> assign_labels(const PopulationConfig& config) {
  const int n = config.n_cylinders;
  if (n < kNumFaultClasses)
    throw DataError("need at least 8 cylinders to cover all fault classes, got " +
                    std::to_string(n));
  std::vector<double> weights = config.class_weights;
  if (weights.empty()) weights.assign(kNumFaultClasses, 1.0);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);

  // Largest-remainder apportionment, then force every class to appear.
  std::vector<int> counts(kNumFaultClasses, 0);
  std::vector<std::pair<double, int>> remainders;
  int assigned = 0;
  for (int c = 0; c < kNumFaultClasses; ++c) {
    const double quota = n * weights[static_cast<std::size_t>(c)] / total;
    counts[static_cast<std::size_t>(c)] = static_cast<int>(std::floor(quota));
    assigned += counts[static_cast<std::size_t>(c)];
    remainders.emplace_back(-(quota - std::floor(quota)), c);
  }
  std::sort(remainders.begin(), remainders.end());
  for (int i = 0; i < n - assigned; ++i)
    ++counts[static_cast<std::size_t>(remainders[static_cast<std::size_t>(i % kNumFaultClasses)].second)];
  for (int c = 0; c < kNumFaultClasses; ++c) {
    while (counts[static_cast<std::size_t>(c)] == 0) {
      const auto big = std::max_element(counts.begin(), counts.end());
      --*big;
      ++counts[static_cast<std::size_t>(c)];
    }
  }

  std::vector<FaultLabel> labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (int c = 0; c < kNumFaultClasses; ++c)
    for (int i = 0; i < counts[static_cast<std::size_t>(c)]; ++i)
      labels.push_back(FaultLabel::from_class_index(c));
  auto rng = make_rng(config.seed, kStreamClasses);
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

std::vector<LabeledInstance> generate_population(const PopulationConfig& config) {
  config.validate();
  const modal::ModalModel baseline = generate_baseline(config, config.seed);
  const std::vector<FaultLabel> labels = assign_labels(config);
  const std::vector<double> grid = make_grid(config);

  std::vector<LabeledInstance> instances;
  instances.reserve(static_cast<std::size_t>(config.n_cylinders) *
                    static_cast<std::size_t>(config.repeats_per_cylinder));
  for (int c = 0; c < config.n_cylinders; ++c) {
    for (int r = 0; r < config.repeats_per_cylinder; ++r) {
      const modal::ModalModel model =
          instance_model(config, baseline, labels[static_cast<std::size_t>(c)], c, r);
      LabeledInstance instance;
      instance.label = labels[static_cast<std::size_t>(c)];
      instance.cylinder = c;
      instance.repeat = r;
      instance.frfs.reserve(static_cast<std::size_t>(config.n_locations));
      for (int k = 0; k < config.n_locations; ++k) {
        signals::Frf frf = modal::modal_frf(model, k, config.sensor_location, grid);
        if (config.noise_snr_db) {
          std::mt19937_64 rng(derive_seed(
              derive_seed(config.seed, kStreamNoise, static_cast<std::uint64_t>(c),
                          static_cast<std::uint64_t>(r)),
              static_cast<std::uint64_t>(k)));
          add_frf_noise(frf, *config.noise_snr_db, rng);
        }
        instance.frfs.push_back(std::move(frf));
      }
      instances.push_back(std::move(instance));
    }
  }
  return instances;
}

detail::json population_to_json(const PopulationConfig& config) {
  detail::json j;
  j["n_cylinders"] = config.n_cylinders;
  j["repeats_per_cylinder"] = config.repeats_per_cylinder;
  j["n_modes"] = config.n_modes;
  j["n_locations"] = config.n_locations;
  j["fault_severity_pct"] =
      detail::json::array({config.fault_severity_pct.first, config.fault_severity_pct.second});
  j["shape_perturbation"] = config.shape_perturbation;
  j["bc_jitter_pct"] = config.bc_jitter_pct;
  if (config.noise_snr_db)
    j["noise_snr_db"] = *config.noise_snr_db;
  else
    j["noise_snr_db"] = nullptr;
  j["grid_spacing_hz"] = config.grid_spacing_hz;
  j["seed"] = config.seed;
  j["class_weights"] = config.class_weights;
  j["sensor_location"] = config.sensor_location;
  return j;
}

PopulationConfig population_from_json(const detail::json& j) {
  PopulationConfig config;
  config.n_cylinders = j.value("n_cylinders", config.n_cylinders);
  config.repeats_per_cylinder = j.value("repeats_per_cylinder", config.repeats_per_cylinder);
  config.n_modes = j.value("n_modes", config.n_modes);
  config.n_locations = j.value("n_locations", config.n_locations);
  if (j.contains("fault_severity_pct")) {
    const auto& range = j.at("fault_severity_pct");
    config.fault_severity_pct = {range.at(0).get<double>(), range.at(1).get<double>()};
  }
  config.shape_perturbation = j.value("shape_perturbation", config.shape_perturbation);
  config.bc_jitter_pct = j.value("bc_jitter_pct", config.bc_jitter_pct);
  if (j.contains("noise_snr_db")) {
    if (j.at("noise_snr_db").is_null())
      config.noise_snr_db.reset();
    else
      config.noise_snr_db = j.at("noise_snr_db").get<double>();
  }
  config.grid_spacing_hz = j.value("grid_spacing_hz", config.grid_spacing_hz);
  config.seed = j.value("seed", config.seed);
  config.class_weights = j.value("class_weights", config.class_weights);
  config.sensor_location = j.value("sensor_location", config.sensor_location);
  config.validate();
  return config;
}

void write_dataset(const std::filesystem::path& dir,
                   const std::vector<LabeledInstance>& instances,
                   const PopulationConfig& config) {
  if (instances.empty()) throw DataError("no instances to write");
  std::filesystem::create_directories(dir);

  detail::json manifest;
  manifest["format_version"] = 1;
  manifest["config"] = population_to_json(config);
  detail::json table = detail::json::array();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& instance = instances[i];
    char sub[32];
    std::snprintf(sub, sizeof(sub), "inst%04zu", i);
    detail::json entry;
    entry["id"] = i;
    entry["cylinder"] = instance.cylinder;
    entry["repeat"] = instance.repeat;
    entry["label"] = instance.label.to_string();
    detail::json files = detail::json::array();
    for (std::size_t p = 0; p < instance.frfs.size(); ++p) {
      char name[32];
      std::snprintf(name, sizeof(name), "p%02zu.csv", p);
      const std::filesystem::path rel = std::filesystem::path(sub) / name;
      signals::write_frf_csv(dir / rel, instance.frfs[p]);
      detail::json file;
      file["excitation"] = instance.frfs[p].excitation;
      file["sensor"] = instance.frfs[p].sensor;
      file["path"] = rel.generic_string();
      files.push_back(std::move(file));
    }
    entry["frfs"] = std::move(files);
    table.push_back(std::move(entry));
  }
  manifest["instances"] = std::move(table);
  detail::save_json(dir / "manifest.json", manifest);
}

DatasetOnDisk read_dataset(const std::filesystem::path& dir) {
  const detail::json manifest = detail::load_json(dir / "manifest.json");
  DatasetOnDisk data;
  data.config = population_from_json(manifest.at("config"));
  for (const auto& entry : manifest.at("instances")) {
    LabeledInstance instance;
    instance.label = FaultLabel::from_string(entry.at("label").get<std::string>());
    instance.cylinder = entry.at("cylinder").get<int>();
    instance.repeat = entry.at("repeat").get<int>();
    for (const auto& file : entry.at("frfs")) {
      signals::Frf frf = signals::read_frf_csv(dir / file.at("path").get<std::string>());
      frf.excitation = file.at("excitation").get<int>();
      frf.sensor = file.at("sensor").get<int>();
      instance.frfs.push_back(std::move(frf));
    }
    if (instance.frfs.empty())
      throw DataError(dir.string() + ": instance without FRFs in manifest");
    data.instances.push_back(std::move(instance));
  }
  if (data.instances.empty()) throw DataError(dir.string() + ": empty dataset");
  return data;
}

}  // namespace pme::synthdata
