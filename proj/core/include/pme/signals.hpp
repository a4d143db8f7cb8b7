#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace pme::signals {

enum class RecordKind { force, acceleration };

// One time-domain measurement: an impulse history (N) or an acceleration
// response (m/s^2) on a uniform sampling grid.
struct TimeRecord {
  std::vector<double> samples;
  double sample_rate = 0.0;  // Hz
  RecordKind kind = RecordKind::force;

  void validate() const;  // throws DataError on contract violations
};

enum class FrfKind { inertance, receptance };

// Frequency response function for one (excitation, sensor) location pair,
// sampled on a uniform frequency grid. `valid` marks bins usable for band
// integration; bins where the force spectrum nearly vanishes are flagged 0.
struct Frf {
  int excitation = 0;
  int sensor = 0;
  std::vector<double> grid_hz;
  std::vector<std::complex<double>> values;
  std::vector<std::uint8_t> valid;
  FrfKind kind = FrfKind::inertance;

  double spacing_hz() const;
  void validate() const;
};

struct Spectrum {
  std::vector<double> grid_hz;  // [0, sample_rate/2], spacing sample_rate/n
  std::vector<std::complex<double>> values;
};

// One-sided DFT of a real record (unnormalized forward transform).
Spectrum spectrum(const TimeRecord& record);

// Inverse of `spectrum`: reconstructs n_samples real samples from a
// one-sided spectrum of size floor(n_samples/2)+1.
std::vector<double> inverse_spectrum(const std::vector<std::complex<double>>& one_sided,
                                     std::size_t n_samples);

// Bins where |F| falls below this fraction of max|F| are flagged invalid
// instead of dividing by a vanishing force spectrum.
inline constexpr double kForceEpsRel = 1e-9;

// Inertance FRF = spectrum(acceleration response) / spectrum(force).
Frf compute_frf(const TimeRecord& force, const TimeRecord& response,
                int excitation = 0, int sensor = 0);

// Mean of several FRFs of the same pair/grid (multiple hammer hits).
// A bin is valid only if valid in every input.
Frf average_frfs(const std::vector<Frf>& frfs);

// --- file formats ---
// Time records: CSV `time_s,value` plus a sidecar JSON manifest
// (same path with extension replaced by .json) holding kind,
// sample_rate_hz and the location index.
struct RecordMeta {
  RecordKind kind = RecordKind::force;
  double sample_rate_hz = 0.0;
  int location = 0;
};

void write_time_record(const std::filesystem::path& csv_path,
                       const TimeRecord& record, int location);
TimeRecord read_time_record(const std::filesystem::path& csv_path,
                            RecordMeta* meta = nullptr);

// FRFs: CSV `freq_hz,re,im,valid`.
void write_frf_csv(const std::filesystem::path& path, const Frf& frf);
Frf read_frf_csv(const std::filesystem::path& path);

}  // namespace pme::signals
