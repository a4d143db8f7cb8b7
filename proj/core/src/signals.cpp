#include "pme/signals.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "detail.hpp"
#include "pme/errors.hpp"

namespace pme::signals {

namespace {

// FFTW plan creation is not thread-safe; execution of distinct plans is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

const char* kind_name(RecordKind k) {
  return k == RecordKind::force ? "force" : "acceleration";
}

}  // namespace

void TimeRecord::validate() const {
  if (samples.empty()) throw DataError("time record has no samples");
  if (!(sample_rate > 0.0)) throw DataError("sample_rate must be positive");
  for (double s : samples)
    if (!std::isfinite(s)) throw DataError("time record contains non-finite samples");
}

double Frf::spacing_hz() const {
  if (grid_hz.size() < 2) throw DataError("FRF grid needs at least 2 points");
  return grid_hz[1] - grid_hz[0];
}

void Frf::validate() const {
  if (grid_hz.size() != values.size() || grid_hz.size() != valid.size())
    throw DataError("FRF grid/values/valid sizes differ");
  if (grid_hz.size() < 2) throw DataError("FRF needs at least 2 bins");
  const double spacing = grid_hz[1] - grid_hz[0];
  if (!(spacing > 0.0)) throw DataError("FRF grid must be strictly increasing");
  for (std::size_t i = 1; i < grid_hz.size(); ++i) {
    const double step = grid_hz[i] - grid_hz[i - 1];
    if (!(step > 0.0)) throw DataError("FRF grid must be strictly increasing");
    if (std::abs(step - spacing) > 1e-9 * std::abs(spacing))
      throw DataError("FRF grid spacing is not uniform");
  }
  for (const auto& v : values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw DataError("FRF contains non-finite values");
}

Spectrum spectrum(const TimeRecord& record) {
  record.validate();
  const std::size_t n = record.samples.size();
  const std::size_t n_bins = n / 2 + 1;

  std::vector<double> in(record.samples);
  std::vector<std::complex<double>> out(n_bins);

  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_plan plan = fftw_plan_dft_r2c_1d(
        static_cast<int>(n), in.data(),
        reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }

  Spectrum s;
  s.values = std::move(out);
  s.grid_hz.resize(n_bins);
  const double df = record.sample_rate / static_cast<double>(n);
  for (std::size_t k = 0; k < n_bins; ++k) s.grid_hz[k] = df * static_cast<double>(k);
  return s;
}

std::vector<double> inverse_spectrum(const std::vector<std::complex<double>>& one_sided,
                                     std::size_t n_samples) {
  if (n_samples == 0) throw DataError("n_samples must be positive");
  if (one_sided.size() != n_samples / 2 + 1)
    throw DataError("one-sided spectrum size does not match n_samples");

  std::vector<std::complex<double>> in(one_sided);  // c2r destroys its input
  std::vector<double> out(n_samples);
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_plan plan = fftw_plan_dft_c2r_1d(
        static_cast<int>(n_samples),
        reinterpret_cast<fftw_complex*>(in.data()), out.data(), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  for (double& v : out) v /= static_cast<double>(n_samples);
  return out;
}

Frf compute_frf(const TimeRecord& force, const TimeRecord& response,
                int excitation, int sensor) {
  if (force.kind != RecordKind::force)
    throw DataError(std::string("expected a force record, got ") + kind_name(force.kind));
  if (response.kind != RecordKind::acceleration)
    throw DataError(std::string("expected an acceleration record, got ") +
                    kind_name(response.kind));
  if (force.samples.size() != response.samples.size())
    throw DataError("force/response lengths differ");
  if (force.sample_rate != response.sample_rate)
    throw DataError("force/response sample rates differ");
  if (force.samples.size() < 2)
    throw DataError("records need at least 2 samples");

  const Spectrum f = spectrum(force);
  const Spectrum r = spectrum(response);

  double max_force = 0.0;
  for (const auto& v : f.values) max_force = std::max(max_force, std::abs(v));
  if (max_force == 0.0) throw DataError("force spectrum is identically zero");
  const double eps = kForceEpsRel * max_force;

  Frf frf;
  frf.excitation = excitation;
  frf.sensor = sensor;
  frf.kind = FrfKind::inertance;
  frf.grid_hz = f.grid_hz;
  frf.values.resize(f.values.size());
  frf.valid.resize(f.values.size());
  for (std::size_t k = 0; k < f.values.size(); ++k) {
    if (std::abs(f.values[k]) < eps) {
      frf.values[k] = {0.0, 0.0};
      frf.valid[k] = 0;
    } else {
      frf.values[k] = r.values[k] / f.values[k];
      frf.valid[k] = 1;
    }
  }
  return frf;
}

Frf average_frfs(const std::vector<Frf>& frfs) {
  if (frfs.empty()) throw DataError("no FRFs to average");
  Frf out = frfs.front();
  for (std::size_t i = 1; i < frfs.size(); ++i) {
    const Frf& f = frfs[i];
    if (f.grid_hz != out.grid_hz) throw DataError("FRF grids differ");
    if (f.excitation != out.excitation || f.sensor != out.sensor)
      throw DataError("FRF location pairs differ");
    for (std::size_t k = 0; k < out.values.size(); ++k) {
      out.values[k] += f.values[k];
      out.valid[k] = out.valid[k] && f.valid[k];
    }
  }
  const double inv = 1.0 / static_cast<double>(frfs.size());
  for (auto& v : out.values) v *= inv;
  return out;
}

void write_time_record(const std::filesystem::path& csv_path,
                       const TimeRecord& record, int location) {
  record.validate();
  if (csv_path.has_parent_path())
    std::filesystem::create_directories(csv_path.parent_path());
  std::ofstream out(csv_path);
  if (!out) throw DataError("cannot write " + csv_path.string());
  out << "time_s,value\n";
  const double dt = 1.0 / record.sample_rate;
  for (std::size_t i = 0; i < record.samples.size(); ++i)
    out << detail::format_double(static_cast<double>(i) * dt) << ','
        << detail::format_double(record.samples[i]) << '\n';

  detail::json meta;
  meta["kind"] = record.kind == RecordKind::force ? "force" : "acceleration";
  meta["sample_rate_hz"] = record.sample_rate;
  meta["location"] = location;
  std::filesystem::path meta_path = csv_path;
  meta_path.replace_extension(".json");
  detail::save_json(meta_path, meta);
}

TimeRecord read_time_record(const std::filesystem::path& csv_path, RecordMeta* meta) {
  std::filesystem::path meta_path = csv_path;
  meta_path.replace_extension(".json");
  const detail::json m = detail::load_json(meta_path);

  RecordMeta rm;
  const std::string kind = m.at("kind").get<std::string>();
  if (kind == "force")
    rm.kind = RecordKind::force;
  else if (kind == "acceleration")
    rm.kind = RecordKind::acceleration;
  else
    throw DataError(meta_path.string() + ": unknown record kind '" + kind + "'");
  rm.sample_rate_hz = m.at("sample_rate_hz").get<double>();
  rm.location = m.value("location", 0);

  std::ifstream in(csv_path);
  if (!in) throw DataError("cannot open " + csv_path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("time_s,value", 0) != 0)
    throw DataError(csv_path.string() + ":1: expected header 'time_s,value'");

  TimeRecord record;
  record.kind = rm.kind;
  record.sample_rate = rm.sample_rate_hz;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw DataError(csv_path.string() + ":" + std::to_string(line_no) +
                      ": expected 'time_s,value'");
    const std::string context = csv_path.string() + ":" + std::to_string(line_no);
    record.samples.push_back(detail::parse_double(line.substr(comma + 1), context));
  }
  record.validate();
  if (meta) *meta = rm;
  return record;
}

void write_frf_csv(const std::filesystem::path& path, const Frf& frf) {
  frf.validate();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "freq_hz,re,im,valid\n";
  for (std::size_t k = 0; k < frf.grid_hz.size(); ++k)
    out << detail::format_double(frf.grid_hz[k]) << ','
        << detail::format_double(frf.values[k].real()) << ','
        << detail::format_double(frf.values[k].imag()) << ','
        << int(frf.valid[k]) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

Frf read_frf_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("freq_hz,re,im,valid", 0) != 0)
    throw DataError(path.string() + ":1: expected header 'freq_hz,re,im,valid'");

  Frf frf;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string context = path.string() + ":" + std::to_string(line_no);
    std::array<std::string, 4> fields;
    std::size_t start = 0;
    for (int f = 0; f < 4; ++f) {
      const auto end = f < 3 ? line.find(',', start) : line.size();
      if (end == std::string::npos) throw DataError(context + ": expected 4 fields");
      fields[f] = line.substr(start, end - start);
      start = end + 1;
    }
    frf.grid_hz.push_back(detail::parse_double(fields[0], context));
    frf.values.emplace_back(detail::parse_double(fields[1], context),
                            detail::parse_double(fields[2], context));
    if (fields[3] == "1")
      frf.valid.push_back(1);
    else if (fields[3] == "0")
      frf.valid.push_back(0);
    else
      throw DataError(context + ": valid flag must be 0 or 1");
  }
  frf.validate();
  return frf;
}

}  // namespace pme::signals
