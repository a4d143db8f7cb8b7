#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "pme/faults.hpp"
#include "pme/modal.hpp"
#include "pme/signals.hpp"

namespace pme::synthdata {

// Synthetic population settings. Defaults mirror the reference experiment:
// 20 cylinders, 3 boundary-condition repeats, 17 modes at 19 locations,
// 1.22 Hz grid spacing.
struct PopulationConfig {
  int n_cylinders = 20;
  int repeats_per_cylinder = 3;
  int n_modes = 17;
  int n_locations = 19;
  // Per-substructure fault effect: selected natural frequencies drop by a
  // percentage drawn from this range.
  std::pair<double, double> fault_severity_pct = {1.0, 5.0};
  // Relative perturbation of mode-shape entries at the damaged locations.
  double shape_perturbation = 0.03;
  // Boundary-condition repeatability: relative frequency jitter per repeat.
  double bc_jitter_pct = 0.5;
  // FRF signal-to-noise ratio; disabled when unset.
  std::optional<double> noise_snr_db = 40.0;
  double grid_spacing_hz = 1.22;
  std::uint64_t seed = 0;
  // Relative class frequencies over the 8 fault classes; empty = uniform.
  std::vector<double> class_weights;
  int sensor_location = 0;

  void validate() const;
  bool operator==(const PopulationConfig&) const = default;
};

// The synthesis grid spans all reference analysis bands.
inline constexpr double kGridLoHz = 350.0;
inline constexpr double kGridHiHz = 4500.0;

std::vector<double> make_grid(const PopulationConfig& config);

struct LabeledInstance {
  std::vector<signals::Frf> frfs;  // one per excitation location
  FaultLabel label;
  int cylinder = 0;
  int repeat = 0;
};

// The three substructures partition the measurement ring into contiguous
// arcs (7/6/6 for 19 locations); returns [begin, end) per substructure.
std::array<std::pair<int, int>, 3> substructure_location_ranges(int n_locations);

// Undamaged reference model: natural frequencies placed inside the default
// analysis bands, damping drawn in [0.002, 0.02], smooth unit-norm mode
// shapes. Deterministic per seed.
modal::ModalModel generate_baseline(const PopulationConfig& config,
                                    std::uint64_t seed);

// Stiffness-reduction proxy for a hole in each faulted substructure: a
// random subset of natural frequencies drops by a severity draw and the
// mode-shape entries at the substructure's locations are perturbed. Each
// substructure uses its own derived random stream, so a multi-fault label
// applies a superset of the single-fault perturbations. Frequencies stay
// strictly increasing and never exceed the baseline. severity_scale in
// (0, 1] scales the whole signature (hole size).
modal::ModalModel apply_faults(const modal::ModalModel& model,
                               const FaultLabel& label,
                               const PopulationConfig& config,
                               std::uint64_t seed, double severity_scale = 1.0);

// The bc-jittered, faulted model behind one (cylinder, repeat) instance.
// Exposed so tests and tools can reproduce an instance's noise-free FRFs.
modal::ModalModel instance_model(const PopulationConfig& config,
                                 const modal::ModalModel& baseline,
                                 const FaultLabel& label, int cylinder,
                                 int repeat);

// Complex zero-mean Gaussian noise per bin, scaled to the requested SNR
// against the FRF's mean power.
void add_frf_noise(signals::Frf& frf, double snr_db, std::mt19937_64& rng);

// Class label for each cylinder: counts from the class weights (largest
// remainder), all 8 classes covered, order shuffled per seed.
std::vector<FaultLabel> assign_labels(const PopulationConfig& config);

// Full population: n_cylinders x repeats_per_cylinder labeled instances
// with FRFs at every excitation location against the configured sensor.
// Deterministic per seed; per-(cylinder, repeat, pair) random streams.
std::vector<LabeledInstance> generate_population(const PopulationConfig& config);

// --- dataset directory format ---
// <dir>/manifest.json        config echo + instance table
// <dir>/inst0000/p00.csv     FRF files, one per (instance, excitation)
struct DatasetOnDisk {
  PopulationConfig config;
  std::vector<LabeledInstance> instances;
};

void write_dataset(const std::filesystem::path& dir,
                   const std::vector<LabeledInstance>& instances,
                   const PopulationConfig& config);
DatasetOnDisk read_dataset(const std::filesystem::path& dir);

}  // namespace pme::synthdata
