#include "pme/modal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "detail.hpp"
#include "pme/errors.hpp"

namespace pme::modal {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
using cplx = std::complex<double>;

// Compensated complex accumulation (Kahan), for reproducible mode sums.
struct KahanSum {
  cplx sum{0.0, 0.0};
  cplx comp{0.0, 0.0};

  void add(cplx term) {
    const cplx y = term - comp;
    const cplx t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

void check_pair(const ModalModel& model, int excitation, int sensor) {
  if (excitation < 0 || excitation >= model.n_locations() || sensor < 0 ||
      sensor >= model.n_locations())
    throw DataError("location index out of range: (" + std::to_string(excitation) +
                    ", " + std::to_string(sensor) + ") with " +
                    std::to_string(model.n_locations()) + " locations");
}

// One-frequency integrand of the band-energy integral, in rad/s.
cplx integrand(const ModalModel& model, int excitation, int sensor, double w) {
  KahanSum acc;
  const int n = model.n_modes();
  for (int i = 0; i < n; ++i) {
    const double wi = kTwoPi * model.natural_freqs_hz[i];
    const double pp = model.mode_shapes(i, excitation) * model.mode_shapes(i, sensor);
    const cplx den(wi * wi - w * w, 2.0 * model.damping_ratios[i] * wi * w);
    acc.add(cplx(-w * w * pp, 0.0) / den);
  }
  return acc.sum;
}

struct AdaptiveState {
  std::function<cplx(double)> f;
  double tol_abs = 0.0;
  long evals = 0;
  long max_evals = 0;
  bool exhausted = false;
};

cplx simpson(double a, double b, cplx fa, cplx fm, cplx fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

cplx adapt(AdaptiveState& st, double a, double b, cplx fa, cplx fm, cplx fb,
           cplx whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const cplx flm = st.f(lm);
  const cplx frm = st.f(rm);
  st.evals += 2;
  const cplx left = simpson(a, m, fa, flm, fm);
  const cplx right = simpson(m, b, fm, frm, fb);
  const cplx delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol || depth <= 0 || st.evals > st.max_evals) {
    if (std::abs(delta) > 15.0 * tol) st.exhausted = true;
    return left + right + delta / 15.0;
  }
  return adapt(st, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adapt(st, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

cplx integrate_adaptive(const std::function<cplx(double)>& f, double a, double b,
                        double rel_tol) {
  if (a == b) return {0.0, 0.0};

  AdaptiveState st;
  st.f = f;
  st.max_evals = 4'000'000;

  const cplx fa = f(a);
  const cplx fb = f(b);
  const cplx fm = f(0.5 * (a + b));
  st.evals = 3;
  const cplx whole = simpson(a, b, fa, fm, fb);

  // First pass scales the tolerance by the coarse estimate, second pass by
  // the refined result in case the coarse estimate was far off.
  double scale = std::abs(whole);
  if (scale == 0.0) scale = 1.0;
  cplx result = adapt(st, a, b, fa, fm, fb, whole, rel_tol * scale, 60);
  const double refined = std::abs(result);
  if (refined > 0.0 && refined < scale) {
    st.exhausted = false;
    result = adapt(st, a, b, fa, fm, fb, whole, rel_tol * refined, 60);
  }
  if (st.exhausted)
    throw NumericError("adaptive quadrature did not converge to rel_tol=" +
                       detail::format_double(rel_tol) + " on [" +
                       detail::format_double(a / kTwoPi) + ", " +
                       detail::format_double(b / kTwoPi) + "] Hz");
  return result;
}

}  // namespace

void ModalModel::validate() const {
  const int n = n_modes();
  if (n < 1) throw DataError("modal model needs at least one mode");
  if (static_cast<int>(damping_ratios.size()) != n)
    throw DataError("damping_ratios size does not match mode count");
  if (mode_shapes.rows() != n)
    throw DataError("mode_shapes row count does not match mode count");
  if (mode_shapes.cols() < 1) throw DataError("modal model needs at least one location");
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(natural_freqs_hz[i]) || natural_freqs_hz[i] <= 0.0)
      throw DataError("natural frequencies must be positive and finite");
    if (i > 0 && natural_freqs_hz[i] <= natural_freqs_hz[i - 1])
      throw DataError("natural frequencies must be strictly increasing");
    if (!(damping_ratios[i] > 0.0 && damping_ratios[i] < 1.0))
      throw DataError("damping ratios must lie in (0, 1)");
  }
  if (!mode_shapes.allFinite()) throw DataError("mode shapes must be finite");
}

void Band::validate() const {
  if (!(lo_hz > 0.0) || !(hi_hz >= lo_hz))
    throw DataError("band requires 0 < lo_hz <= hi_hz, got [" +
                    detail::format_double(lo_hz) + ", " +
                    detail::format_double(hi_hz) + "]");
}

std::complex<double> modal_frf_value(const ModalModel& model, int excitation,
                                     int sensor, double freq_hz) {
  check_pair(model, excitation, sensor);
  return integrand(model, excitation, sensor, kTwoPi * freq_hz);
}

signals::Frf modal_frf(const ModalModel& model, int excitation, int sensor,
                       const std::vector<double>& grid_hz) {
  model.validate();
  check_pair(model, excitation, sensor);
  if (grid_hz.size() < 2) throw DataError("FRF grid needs at least 2 points");

  signals::Frf frf;
  frf.excitation = excitation;
  frf.sensor = sensor;
  frf.kind = signals::FrfKind::inertance;
  frf.grid_hz = grid_hz;
  frf.values.resize(grid_hz.size());
  frf.valid.assign(grid_hz.size(), 1);
  for (std::size_t j = 0; j < grid_hz.size(); ++j)
    frf.values[j] = integrand(model, excitation, sensor, kTwoPi * grid_hz[j]);
  frf.validate();
  return frf;
}

std::complex<double> ime_quadrature(const signals::Frf& frf, const Band& band) {
  band.validate();
  if (frf.grid_hz.size() != frf.values.size() || frf.grid_hz.size() != frf.valid.size())
    throw DataError("FRF grid/values/valid sizes differ");

  // Clamp to grid points inside the band; snap tolerance absorbs rounding
  // of band edges that were meant to coincide with grid points.
  const double snap = 1e-6 * frf.spacing_hz();
  if (band.lo_hz < frf.grid_hz.front() - snap || band.hi_hz > frf.grid_hz.back() + snap)
    throw DataError("band [" + detail::format_double(band.lo_hz) + ", " +
                    detail::format_double(band.hi_hz) + "] Hz lies outside the FRF grid [" +
                    detail::format_double(frf.grid_hz.front()) + ", " +
                    detail::format_double(frf.grid_hz.back()) + "]");
  const auto begin = std::lower_bound(frf.grid_hz.begin(), frf.grid_hz.end(),
                                      band.lo_hz - snap);
  const auto end = std::upper_bound(frf.grid_hz.begin(), frf.grid_hz.end(),
                                    band.hi_hz + snap);

  // Trapezoid between consecutive valid samples over angular frequency.
  std::complex<double> sum{0.0, 0.0};
  long segments = 0;
  bool have_prev = false;
  std::size_t prev = 0;
  for (auto it = begin; it != end; ++it) {
    const std::size_t idx = static_cast<std::size_t>(it - frf.grid_hz.begin());
    if (!frf.valid[idx]) continue;
    if (have_prev) {
      const double dw = kTwoPi * (frf.grid_hz[idx] - frf.grid_hz[prev]);
      sum += 0.5 * (frf.values[prev] + frf.values[idx]) * dw;
      ++segments;
    }
    prev = idx;
    have_prev = true;
  }
  if (segments == 0)
    throw DataError("band [" + detail::format_double(band.lo_hz) + ", " +
                    detail::format_double(band.hi_hz) +
                    "] Hz contains fewer than 2 valid samples");
  return sum;
}

std::complex<double> ime_closed_form(const ModalModel& model, int excitation,
                                     int sensor, const Band& band) {
  model.validate();
  check_pair(model, excitation, sensor);
  band.validate();

  const double a = kTwoPi * band.lo_hz;
  const double b = kTwoPi * band.hi_hz;
  const cplx j{0.0, 1.0};

  KahanSum acc;
  for (int i = 0; i < model.n_modes(); ++i) {
    const double wi = kTwoPi * model.natural_freqs_hz[i];
    const double zi = model.damping_ratios[i];
    const double pp = model.mode_shapes(i, excitation) * model.mode_shapes(i, sensor);
    const cplx za = (cplx(-zi * wi, 0.0) - j * a) / wi;
    const cplx zb = (cplx(-zi * wi, 0.0) - j * b) / wi;
    // The principal-branch arctangent is singular at +-j; physical damping
    // keeps the arguments at distance >= zeta from both points.
    for (const cplx& z : {za, zb})
      if (std::abs(z - j) < 1e-12 || std::abs(z + j) < 1e-12)
        throw NumericError("band bound coincides with an arctangent branch point "
                           "(degenerate mode " + std::to_string(i) + ")");
    acc.add(cplx(pp * (b - a), 0.0) - wi * pp * j * (std::atan(zb) - std::atan(za)));
  }
  return acc.sum;
}

std::complex<double> ime_exact(const ModalModel& model, int excitation, int sensor,
                               const Band& band, double rel_tol) {
  model.validate();
  check_pair(model, excitation, sensor);
  band.validate();
  if (!(rel_tol > 0.0) || rel_tol > 1e-2)
    throw UsageError("rel_tol must lie in (0, 1e-2]");

  const double a = kTwoPi * band.lo_hz;
  const double b = kTwoPi * band.hi_hz;
  auto f = [&](double w) { return integrand(model, excitation, sensor, w); };
  return integrate_adaptive(f, a, b, rel_tol);
}

std::vector<Band> default_analysis_bands() {
  return {{393, 418},   {418, 443},   {536, 570},   {1110, 1180}, {1183, 1254},
          {1355, 1440}, {1450, 1538}, {2146, 2280}, {2300, 2440}, {2250, 2401},
          {2500, 2656}, {3140, 3340}, {3350, 3565}, {3800, 4039}, {4200, 4458}};
}

std::vector<Band> bands_around(const std::vector<double>& natural_freqs_hz,
                               double width_pct) {
  if (!(width_pct > 0.0)) throw UsageError("band width_pct must be positive");
  std::vector<Band> bands;
  bands.reserve(natural_freqs_hz.size());
  for (double f : natural_freqs_hz) {
    const double half = 0.5 * f * width_pct / 100.0;
    bands.push_back({f - half, f + half});
  }
  return bands;
}

void write_modal_model(const std::filesystem::path& path, const ModalModel& model) {
  model.validate();
  detail::json j;
  j["natural_freqs_hz"] = model.natural_freqs_hz;
  j["damping_ratios"] = model.damping_ratios;
  detail::json rows = detail::json::array();
  for (int i = 0; i < model.n_modes(); ++i) {
    detail::json row = detail::json::array();
    for (int l = 0; l < model.n_locations(); ++l) row.push_back(model.mode_shapes(i, l));
    rows.push_back(std::move(row));
  }
  j["mode_shapes"] = std::move(rows);
  j["n_locations"] = model.n_locations();
  detail::save_json(path, j);
}

ModalModel read_modal_model(const std::filesystem::path& path) {
  const detail::json j = detail::load_json(path);
  ModalModel model;
  model.natural_freqs_hz = j.at("natural_freqs_hz").get<std::vector<double>>();
  model.damping_ratios = j.at("damping_ratios").get<std::vector<double>>();
  const auto& rows = j.at("mode_shapes");
  const int n_locations = j.at("n_locations").get<int>();
  model.mode_shapes.resize(static_cast<Eigen::Index>(rows.size()), n_locations);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto row = rows[i].get<std::vector<double>>();
    if (static_cast<int>(row.size()) != n_locations)
      throw DataError(path.string() + ": mode_shapes row " + std::to_string(i) +
                      " does not have n_locations entries");
    for (int l = 0; l < n_locations; ++l)
      model.mode_shapes(static_cast<Eigen::Index>(i), l) = row[l];
  }
  model.validate();
  return model;
}

}  // namespace pme::modal
