#pragma once

#include <complex>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pme/modal.hpp"

namespace pme::test {

// Single-mode model with phi_k * phi_l = phi2 for every pair.
inline modal::ModalModel single_mode(double freq_hz, double zeta, double phi2 = 1.0,
                                     int n_locations = 2) {
  modal::ModalModel model;
  model.natural_freqs_hz = {freq_hz};
  model.damping_ratios = {zeta};
  model.mode_shapes.resize(1, n_locations);
  model.mode_shapes.setConstant(std::sqrt(std::abs(phi2)));
  if (phi2 < 0.0) model.mode_shapes(0, 0) = -model.mode_shapes(0, 0);
  return model;
}

inline std::vector<double> uniform_grid(double lo_hz, double hi_hz, double spacing_hz) {
  std::vector<double> grid;
  for (double f = lo_hz; f <= hi_hz + 1e-9 * spacing_hz; f += spacing_hz)
    grid.push_back(f);
  return grid;
}

// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("pme_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace pme::test
