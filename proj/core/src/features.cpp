#include "pme/features.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "detail.hpp"
#include "pme/errors.hpp"

namespace pme::features {

namespace {

// Columns whose deviation is this small relative to their magnitude are
// treated as constant: scale 1, nothing to standardize.
constexpr double kZeroVarianceTol = 1e-12;

const signals::Frf& frf_for_pair(const std::vector<signals::Frf>& frfs,
                                 std::pair<int, int> pair) {
  for (const auto& f : frfs)
    if (f.excitation == pair.first && f.sensor == pair.second) return f;
  throw DataError("missing FRF for pair (" + std::to_string(pair.first) + ", " +
                  std::to_string(pair.second) + ")");
}

}  // namespace

std::string FeatureLayout::column_name(int index) const {
  const int n_pairs = static_cast<int>(pairs.size());
  const int c = index % 2;
  const int p = (index / 2) % n_pairs;
  const int q = index / (2 * n_pairs);
  return "b" + std::to_string(q) + "_p" + std::to_string(p) + (c == 0 ? "_re" : "_im");
}

FeatureLayout derive_layout(const std::vector<signals::Frf>& frfs,
                            const std::vector<modal::Band>& bands) {
  if (frfs.empty()) throw DataError("no FRFs given");
  if (bands.empty()) throw DataError("band list is empty");
  std::set<std::pair<int, int>> pairs;
  for (const auto& f : frfs) {
    if (!pairs.insert({f.excitation, f.sensor}).second)
      throw DataError("duplicate FRF for pair (" + std::to_string(f.excitation) +
                      ", " + std::to_string(f.sensor) + ")");
  }
  FeatureLayout layout;
  layout.n_bands = static_cast<int>(bands.size());
  layout.pairs.assign(pairs.begin(), pairs.end());
  return layout;
}

Eigen::VectorXd extract_features(const std::vector<signals::Frf>& frfs,
                                 const std::vector<modal::Band>& bands,
                                 const FeatureLayout& layout) {
  if (static_cast<int>(bands.size()) != layout.n_bands)
    throw DataError("band count does not match layout");
  const auto& grid = frfs.at(0).grid_hz;
  for (const auto& f : frfs)
    if (f.grid_hz != grid) throw DataError("FRFs do not share one frequency grid");

  Eigen::VectorXd v(layout.dimension());
  int idx = 0;
  for (int q = 0; q < layout.n_bands; ++q) {
    for (const auto& pair : layout.pairs) {
      const auto energy = modal::ime_quadrature(frf_for_pair(frfs, pair), bands[q]);
      v[idx++] = energy.real();
      v[idx++] = energy.imag();
    }
  }
  return v;
}

Eigen::VectorXd extract_features(const std::vector<signals::Frf>& frfs,
                                 const std::vector<modal::Band>& bands) {
  return extract_features(frfs, bands, derive_layout(frfs, bands));
}

std::vector<BandReport> validate_bands(const std::vector<modal::Band>& bands,
                                       const std::vector<double>& natural_freqs_hz,
                                       const signals::Frf* frf,
                                       double antiresonance_fraction) {
  if (bands.empty()) throw DataError("band list is empty");
  std::vector<BandReport> reports;
  reports.reserve(bands.size());
  for (std::size_t q = 0; q < bands.size(); ++q) {
    const auto& band = bands[q];
    band.validate();
    BandReport report;
    report.band_index = static_cast<int>(q);
    for (std::size_t i = 0; i < natural_freqs_hz.size(); ++i) {
      const double f = natural_freqs_hz[i];
      if (f >= band.lo_hz && f <= band.hi_hz) {
        report.bracketed_modes.push_back(static_cast<int>(i));
        report.width_pct.push_back(100.0 * (band.hi_hz - band.lo_hz) / f);
      }
    }
    if (report.bracketed_modes.empty())
      report.warnings.push_back("no resonance bracketed");
    else if (report.bracketed_modes.size() > 1)
      report.warnings.push_back("brackets " +
                                std::to_string(report.bracketed_modes.size()) +
                                " resonances");

    if (frf != nullptr) {
      // Anti-resonance: an interior local minimum of |H| well below the
      // band's median magnitude.
      std::vector<double> mags;
      std::vector<std::size_t> indices;
      for (std::size_t k = 0; k < frf->grid_hz.size(); ++k) {
        if (frf->grid_hz[k] < band.lo_hz || frf->grid_hz[k] > band.hi_hz) continue;
        if (!frf->valid[k]) continue;
        mags.push_back(std::abs(frf->values[k]));
        indices.push_back(k);
      }
      if (mags.size() >= 3) {
        std::vector<double> sorted = mags;
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
        const double median = sorted[sorted.size() / 2];
        for (std::size_t k = 1; k + 1 < mags.size(); ++k) {
          if (mags[k] < mags[k - 1] && mags[k] < mags[k + 1] &&
              mags[k] < antiresonance_fraction * median) {
            report.has_antiresonance = true;
            report.warnings.push_back(
                "anti-resonance near " +
                detail::format_double(frf->grid_hz[indices[k]]) + " Hz");
            break;
          }
        }
      }
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

PcaModel pca_fit(const Eigen::MatrixXd& X, int m) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n < 2) throw UsageError("pca_fit needs at least 2 samples");
  if (m < 1 || m > std::min(n, d))
    throw UsageError("pca components out of range: " + std::to_string(m) +
                     " with n=" + std::to_string(n) + ", D=" + std::to_string(d));
  if (!X.allFinite()) throw DataError("feature matrix contains non-finite entries");

  PcaModel model;
  model.mean = X.colwise().mean();
  Eigen::MatrixXd centered = X.rowwise() - model.mean.transpose();
  Eigen::VectorXd std_dev =
      (centered.array().square().colwise().sum() / double(n - 1)).sqrt();
  model.scale.resize(d);
  for (Eigen::Index jcol = 0; jcol < d; ++jcol) {
    const double floor = kZeroVarianceTol * std::max(1.0, std::abs(model.mean[jcol]));
    model.scale[jcol] = std_dev[jcol] > floor ? std_dev[jcol] : 1.0;
  }
  centered.array().rowwise() /= model.scale.transpose().array();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  model.components = svd.matrixV().leftCols(m).transpose();
  model.explained_variance =
      svd.singularValues().head(m).array().square() / double(n - 1);

  // Deterministic sign: the largest-magnitude entry of each component is
  // made positive.
  for (Eigen::Index r = 0; r < model.components.rows(); ++r) {
    Eigen::Index imax = 0;
    model.components.row(r).cwiseAbs().maxCoeff(&imax);
    if (model.components(r, imax) < 0.0) model.components.row(r) *= -1.0;
  }
  return model;
}

Eigen::VectorXd pca_transform(const PcaModel& model, const Eigen::VectorXd& v) {
  if (v.size() != model.mean.size())
    throw DataError("feature dimension mismatch: expected " +
                    std::to_string(model.mean.size()) + ", got " +
                    std::to_string(v.size()));
  return model.components *
         ((v - model.mean).array() / model.scale.array()).matrix();
}

Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.mean.size())
    throw DataError("feature dimension mismatch: expected " +
                    std::to_string(model.mean.size()) + ", got " +
                    std::to_string(X.cols()));
  Eigen::MatrixXd centered = X.rowwise() - model.mean.transpose();
  centered.array().rowwise() /= model.scale.transpose().array();
  return centered * model.components.transpose();
}

Eigen::VectorXd pca_inverse_transform(const PcaModel& model, const Eigen::VectorXd& y) {
  if (y.size() != model.components.rows())
    throw DataError("reduced dimension mismatch: expected " +
                    std::to_string(model.components.rows()) + ", got " +
                    std::to_string(y.size()));
  Eigen::VectorXd v = model.components.transpose() * y;
  return (v.array() * model.scale.array()).matrix() + model.mean;
}

detail::json pca_to_json(const PcaModel& model) {
  detail::json j;
  j["mean"] = std::vector<double>(model.mean.begin(), model.mean.end());
  j["scale"] = std::vector<double>(model.scale.begin(), model.scale.end());
  detail::json rows = detail::json::array();
  for (Eigen::Index r = 0; r < model.components.rows(); ++r) {
    detail::json row = detail::json::array();
    for (Eigen::Index c = 0; c < model.components.cols(); ++c)
      row.push_back(model.components(r, c));
    rows.push_back(std::move(row));
  }
  j["components"] = std::move(rows);
  j["explained_variance"] = std::vector<double>(model.explained_variance.begin(),
                                                model.explained_variance.end());
  return j;
}

PcaModel pca_from_json(const detail::json& j, const std::string& context) {
  PcaModel model;
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto scale = j.at("scale").get<std::vector<double>>();
  const auto ev = j.at("explained_variance").get<std::vector<double>>();
  model.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
  model.scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), scale.size());
  model.explained_variance = Eigen::Map<const Eigen::VectorXd>(ev.data(), ev.size());
  const auto& rows = j.at("components");
  if (rows.empty()) throw DataError(context + ": components are empty");
  model.components.resize(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto row = rows[r].get<std::vector<double>>();
    if (row.size() != static_cast<std::size_t>(model.components.cols()))
      throw DataError(context + ": ragged components matrix");
    for (std::size_t c = 0; c < row.size(); ++c)
      model.components(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  return model;
}

void write_pca_model(const std::filesystem::path& path, const PcaModel& model) {
  detail::save_json(path, pca_to_json(model));
}

PcaModel read_pca_model(const std::filesystem::path& path) {
  return pca_from_json(detail::load_json(path), path.string());
}

void write_features_csv(const std::filesystem::path& path, const LabeledFeatures& data) {
  if (data.X.rows() != static_cast<Eigen::Index>(data.labels.size()))
    throw DataError("feature rows and labels differ in count");
  if (static_cast<Eigen::Index>(data.column_names.size()) != data.X.cols())
    throw DataError("column names do not match feature dimension");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& name : data.column_names) out << name << ',';
  out << "label\n";
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    for (Eigen::Index c = 0; c < data.X.cols(); ++c)
      out << detail::format_double(data.X(i, c)) << ',';
    out << data.labels[static_cast<std::size_t>(i)].to_string() << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

LabeledFeatures read_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw DataError(path.string() + ":1: empty feature file");

  LabeledFeatures data;
  {
    std::size_t start = 0;
    while (start <= line.size()) {
      const auto comma = line.find(',', start);
      const auto end = comma == std::string::npos ? line.size() : comma;
      data.column_names.push_back(line.substr(start, end - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  if (data.column_names.empty() || data.column_names.back() != "label")
    throw DataError(path.string() + ":1: last column must be 'label'");
  data.column_names.pop_back();
  const std::size_t d = data.column_names.size();

  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string context = path.string() + ":" + std::to_string(line_no);
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (start <= line.size()) {
      const auto comma = line.find(',', start);
      const auto end = comma == std::string::npos ? line.size() : comma;
      fields.push_back(line.substr(start, end - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != d + 1)
      throw DataError(context + ": expected " + std::to_string(d + 1) +
                      " fields, got " + std::to_string(fields.size()));
    std::vector<double> row(d);
    for (std::size_t c = 0; c < d; ++c) row[c] = detail::parse_double(fields[c], context);
    rows.push_back(std::move(row));
    try {
      data.labels.push_back(FaultLabel::from_string(fields[d]));
    } catch (const DataError& e) {
      throw DataError(context + ": " + e.what());
    }
  }
  if (rows.empty()) throw DataError(path.string() + ": no instances");
  data.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < d; ++c)
      data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  return data;
}

}  // namespace pme::features
