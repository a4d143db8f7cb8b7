#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pme/faults.hpp"
#include "pme/modal.hpp"
#include "pme/signals.hpp"

namespace pme::features {

// Feature ordering is band-major, then location pair, then re/im:
//   index(q, p, c) = (q * n_pairs + p) * 2 + c,  c = 0 (re), 1 (im).
// Pairs are keyed by (excitation, sensor) in ascending order, never by
// arrival order, so permuting the input FRFs cannot change the layout.
struct FeatureLayout {
  int n_bands = 0;
  std::vector<std::pair<int, int>> pairs;  // sorted (excitation, sensor)

  int dimension() const { return n_bands * static_cast<int>(pairs.size()) * 2; }
  std::string column_name(int index) const;  // b{q}_p{p}_{re|im}
};

FeatureLayout derive_layout(const std::vector<signals::Frf>& frfs,
                            const std::vector<modal::Band>& bands);

// Pseudomodal-energy feature vector: for each (band, pair), the real then
// imaginary part of the band energy of that pair's FRF.
Eigen::VectorXd extract_features(const std::vector<signals::Frf>& frfs,
                                 const std::vector<modal::Band>& bands);
Eigen::VectorXd extract_features(const std::vector<signals::Frf>& frfs,
                                 const std::vector<modal::Band>& bands,
                                 const FeatureLayout& layout);

// Band sanity report against the usual selection guidelines: narrow enough
// to isolate one resonance, wide enough to smooth noise, clear of
// anti-resonances. Warnings only; never an error.
struct BandReport {
  int band_index = 0;
  std::vector<int> bracketed_modes;       // indices into natural_freqs_hz
  std::vector<double> width_pct;          // band width as % of each bracketed freq
  bool has_antiresonance = false;
  std::vector<std::string> warnings;
};

std::vector<BandReport> validate_bands(const std::vector<modal::Band>& bands,
                                       const std::vector<double>& natural_freqs_hz,
                                       const signals::Frf* frf = nullptr,
                                       double antiresonance_fraction = 0.2);

// Principal-component reduction fit on standardized columns. Columns with
// (near-)zero variance get scale 1 so they contribute nothing after
// centering instead of dividing by zero.
struct PcaModel {
  Eigen::VectorXd mean;                // D
  Eigen::VectorXd scale;               // D, positive
  Eigen::MatrixXd components;          // M x D, orthonormal rows
  Eigen::VectorXd explained_variance;  // M, non-increasing

  int input_dimension() const { return static_cast<int>(mean.size()); }
  int output_dimension() const { return static_cast<int>(components.rows()); }
};

PcaModel pca_fit(const Eigen::MatrixXd& X, int m);
Eigen::VectorXd pca_transform(const PcaModel& model, const Eigen::VectorXd& v);
Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& X);
Eigen::VectorXd pca_inverse_transform(const PcaModel& model, const Eigen::VectorXd& y);

void write_pca_model(const std::filesystem::path& path, const PcaModel& model);
PcaModel read_pca_model(const std::filesystem::path& path);

// Feature matrix CSV: one row per instance, columns named by the layout,
// plus a trailing `label` column of three 0/1 digits.
struct LabeledFeatures {
  Eigen::MatrixXd X;
  std::vector<FaultLabel> labels;
  std::vector<std::string> column_names;
};

void write_features_csv(const std::filesystem::path& path,
                        const LabeledFeatures& data);
LabeledFeatures read_features_csv(const std::filesystem::path& path);

}  // namespace pme::features
