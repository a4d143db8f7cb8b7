#include <benchmark/benchmark.h>

#include <random>

#include "pme/features.hpp"
#include "pme/modal.hpp"
#include "pme/neurofuzzy.hpp"
#include "pme/synthdata.hpp"

namespace {

pme::synthdata::PopulationConfig default_config() {
  pme::synthdata::PopulationConfig config;
  config.seed = 1;
  return config;
}

const pme::modal::ModalModel& baseline() {
  static const pme::modal::ModalModel model =
      pme::synthdata::generate_baseline(default_config(), 1);
  return model;
}

void BM_ModalFrf(benchmark::State& state) {
  const auto grid = pme::synthdata::make_grid(default_config());
  for (auto _ : state)
    benchmark::DoNotOptimize(pme::modal::modal_frf(baseline(), 3, 0, grid));
}
BENCHMARK(BM_ModalFrf)->Unit(benchmark::kMillisecond);

void BM_ImeQuadrature(benchmark::State& state) {
  const auto grid = pme::synthdata::make_grid(default_config());
  const auto frf = pme::modal::modal_frf(baseline(), 3, 0, grid);
  const auto bands = pme::modal::default_analysis_bands();
  for (auto _ : state)
    for (const auto& band : bands)
      benchmark::DoNotOptimize(pme::modal::ime_quadrature(frf, band));
}
BENCHMARK(BM_ImeQuadrature);

void BM_ImeExact(benchmark::State& state) {
  const pme::modal::Band band{393.0, 418.0};
  for (auto _ : state)
    benchmark::DoNotOptimize(pme::modal::ime_exact(baseline(), 3, 0, band, 1e-8));
}
BENCHMARK(BM_ImeExact);

void BM_PcaFit(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd X(167, 646);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = gauss(rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(pme::features::pca_fit(X, 10));
}
BENCHMARK(BM_PcaFit)->Unit(benchmark::kMillisecond);

void BM_TsPredict(benchmark::State& state) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd X(60, 10);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = gauss(rng);
  auto model = pme::neurofuzzy::init_antecedents(X, 4, 3, 5);
  for (auto _ : state)
    benchmark::DoNotOptimize(pme::neurofuzzy::predict(model, X));
}
BENCHMARK(BM_TsPredict);

void BM_TsTrainEpoch(benchmark::State& state) {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd X(60, 10), Y(60, 3);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = gauss(rng);
  for (Eigen::Index i = 0; i < Y.size(); ++i) Y.data()[i] = gauss(rng) > 0 ? 1.0 : 0.0;
  pme::neurofuzzy::TrainConfig config;
  config.max_epochs = 1;
  for (auto _ : state) {
    auto model = pme::neurofuzzy::init_antecedents(X, 4, 3, 5);
    pme::neurofuzzy::train(model, X, Y, config);
    benchmark::DoNotOptimize(model);
  }
}
BENCHMARK(BM_TsTrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
