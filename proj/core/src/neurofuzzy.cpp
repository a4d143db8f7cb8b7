#include "pme/neurofuzzy.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "detail.hpp"
#include "pme/errors.hpp"
#include "pme/rng.hpp"

namespace pme::neurofuzzy {

namespace {

constexpr double kWidthFloor = 1e-6;
constexpr int kMaxHalvings = 10;

// Stream ids for derived seeds.
enum : std::uint64_t { kStreamKmeans = 0x6b6d, kStreamFolds = 0xf01d, kStreamFit = 0xf17 };

void check_input(const TsModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.n_inputs)
    throw DataError("input dimension mismatch: expected " +
                    std::to_string(model.n_inputs) + ", got " +
                    std::to_string(x.size()));
}

Eigen::VectorXd firing_strengths(const TsModel& model, const Eigen::VectorXd& x) {
  Eigen::VectorXd beta(model.n_rules());
  for (int i = 0; i < model.n_rules(); ++i)
    beta[i] = firing_strength(model.rules[static_cast<std::size_t>(i)], x);
  return beta;
}

Eigen::VectorXd rule_output(const Rule& rule, const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  return rule.consequent.leftCols(n) * x + rule.consequent.col(n);
}

// Normalized strengths; a vanishing total degenerates to the indicator of
// the strongest rule so prediction and fitting use the same convention.
Eigen::VectorXd normalized_strengths(const Eigen::VectorXd& beta) {
  const double total = beta.sum();
  if (total < kFiringFloor) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(beta.size());
    Eigen::Index imax = 0;
    beta.maxCoeff(&imax);
    g[imax] = 1.0;
    return g;
  }
  return beta / total;
}

struct KmeansResult {
  Eigen::MatrixXd centers;          // K x n
  std::vector<int> assignment;      // per sample
};

KmeansResult kmeans(const Eigen::MatrixXd& X, int k, std::mt19937_64& rng) {
  const Eigen::Index n = X.rows();
  KmeansResult result;
  result.centers.resize(k, X.cols());
  result.assignment.assign(static_cast<std::size_t>(n), 0);

  // k-means++ seeding; the weighted pick is spelled out so the draw sequence
  // is platform-independent.
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<Eigen::Index> chosen;
  chosen.push_back(static_cast<Eigen::Index>(u01(rng) * static_cast<double>(n)) % n);
  Eigen::VectorXd dist2 = (X.rowwise() - X.row(chosen[0])).rowwise().squaredNorm();
  while (static_cast<int>(chosen.size()) < k) {
    const double total = dist2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double u = u01(rng) * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        u -= dist2[i];
        if (u <= 0.0) { pick = i; break; }
        pick = i;
      }
    } else {
      pick = static_cast<Eigen::Index>(u01(rng) * static_cast<double>(n)) % n;
    }
    chosen.push_back(pick);
    dist2 = dist2.cwiseMin(
        (X.rowwise() - X.row(pick)).rowwise().squaredNorm().eval());
  }
  for (int c = 0; c < k; ++c) result.centers.row(c) = X.row(chosen[static_cast<std::size_t>(c)]);

  // Lloyd iterations until the assignment is stable.
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (X.row(i) - result.centers.row(c)).squaredNorm();
        if (d < best_d) { best_d = d; best = c; }
      }
      if (result.assignment[static_cast<std::size_t>(i)] != best) {
        result.assignment[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, X.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(result.assignment[static_cast<std::size_t>(i)]) += X.row(i);
      counts[result.assignment[static_cast<std::size_t>(i)]] += 1.0;
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0.0) {
        result.centers.row(c) = sums.row(c) / counts[c];
      } else {
        // Re-seed an empty cluster at the sample farthest from its center.
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d =
              (X.row(i) -
               result.centers.row(result.assignment[static_cast<std::size_t>(i)]))
                  .squaredNorm();
          if (d > far_d) { far_d = d; far = i; }
        }
        result.centers.row(c) = X.row(far);
        result.assignment[static_cast<std::size_t>(far)] = c;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
  }
  return result;
}

}  // namespace

void TsModel::validate() const {
  if (n_inputs < 1 || n_outputs < 1)
    throw DataError("model needs positive input/output dimensions");
  if (rules.empty()) throw DataError("model needs at least one rule");
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const Rule& r = rules[i];
    const std::string where = "rule " + std::to_string(i);
    if (r.centers.size() != n_inputs || r.widths.size() != n_inputs)
      throw DataError(where + ": antecedent size does not match n_inputs");
    if (!r.centers.allFinite() || !r.widths.allFinite() || !r.consequent.allFinite())
      throw DataError(where + ": non-finite parameters");
    if ((r.widths.array() <= 0.0).any())
      throw DataError(where + ": widths must be positive");
    if (!(r.weight >= 0.0 && r.weight <= 1.0))
      throw DataError(where + ": weight must lie in [0, 1]");
    if (r.consequent.rows() != n_outputs || r.consequent.cols() != n_inputs + 1)
      throw DataError(where + ": consequent must be n_outputs x (n_inputs+1)");
  }
}

void TrainConfig::validate() const {
  if (max_epochs < 1) throw UsageError("max_epochs must be positive");
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
  if (!(tolerance > 0.0)) throw UsageError("tolerance must be positive");
}

Eigen::VectorXd membership(const Rule& rule, const Eigen::VectorXd& x) {
  if (x.size() != rule.centers.size())
    throw DataError("input dimension mismatch: expected " +
                    std::to_string(rule.centers.size()) + ", got " +
                    std::to_string(x.size()));
  const Eigen::ArrayXd z = (x - rule.centers).array() / rule.widths.array();
  return (-0.5 * z.square()).exp();
}

double firing_strength(const Rule& rule, const Eigen::VectorXd& x) {
  return rule.weight * membership(rule, x).prod();
}

Eigen::VectorXd predict(const TsModel& model, const Eigen::VectorXd& x) {
  check_input(model, x);
  const Eigen::VectorXd beta = firing_strengths(model, x);
  const double total = beta.sum();
  if (total < kFiringFloor) {
    Eigen::Index imax = 0;
    beta.maxCoeff(&imax);
    return rule_output(model.rules[static_cast<std::size_t>(imax)], x);
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(model.n_outputs);
  for (int i = 0; i < model.n_rules(); ++i)
    y += beta[i] * rule_output(model.rules[static_cast<std::size_t>(i)], x);
  return y / total;
}

Eigen::MatrixXd predict(const TsModel& model, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Y(X.rows(), model.n_outputs);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::VectorXd x = X.row(i).transpose();
    Y.row(i) = predict(model, x).transpose();
  }
  return Y;
}

double mse(const TsModel& model, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  if (X.rows() != Y.rows()) throw DataError("X and Y row counts differ");
  if (X.rows() == 0) throw DataError("empty training set");
  return (predict(model, X) - Y).squaredNorm() / static_cast<double>(X.rows());
}

TsModel init_antecedents(const Eigen::MatrixXd& X, int n_rules, int n_outputs,
                         std::uint64_t seed) {
  const Eigen::Index n = X.rows();
  const Eigen::Index dim = X.cols();
  if (n_rules < 1) throw UsageError("n_rules must be positive");
  if (n < n_rules)
    throw DataError("need at least " + std::to_string(n_rules) +
                    " samples to place " + std::to_string(n_rules) + " rules");
  if (!X.allFinite()) throw DataError("inputs contain non-finite entries");

  auto rng = make_rng(seed, kStreamKmeans);
  const KmeansResult km = kmeans(X, n_rules, rng);

  // Global per-dimension deviation floors the widths so crisp clusters do
  // not collapse the Gaussians.
  Eigen::VectorXd global_std(dim);
  if (n > 1) {
    const Eigen::RowVectorXd mean = X.colwise().mean();
    global_std = ((X.rowwise() - mean).array().square().colwise().sum() /
                  static_cast<double>(n - 1))
                     .sqrt();
  } else {
    global_std.setZero();
  }

  TsModel model;
  model.n_inputs = static_cast<int>(dim);
  model.n_outputs = n_outputs;
  model.rules.resize(static_cast<std::size_t>(n_rules));
  for (int c = 0; c < n_rules; ++c) {
    Rule& rule = model.rules[static_cast<std::size_t>(c)];
    rule.centers = km.centers.row(c).transpose();
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(dim);
    double count = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (km.assignment[static_cast<std::size_t>(i)] != c) continue;
      sq += (X.row(i).transpose() - rule.centers).array().square().matrix();
      count += 1.0;
    }
    rule.widths.resize(dim);
    for (Eigen::Index d = 0; d < dim; ++d) {
      const double cluster_std = count > 0.0 ? std::sqrt(sq[d] / count) : 0.0;
      rule.widths[d] = std::max({cluster_std, 0.1 * global_std[d], kWidthFloor});
    }
    rule.weight = 1.0;
    rule.consequent = Eigen::MatrixXd::Zero(n_outputs, dim + 1);
  }
  return model;
}

LsInfo fit_consequents(TsModel& model, const Eigen::MatrixXd& X,
                       const Eigen::MatrixXd& Y) {
  model.validate();
  if (X.rows() != Y.rows()) throw DataError("X and Y row counts differ");
  if (X.cols() != model.n_inputs || Y.cols() != model.n_outputs)
    throw DataError("X/Y dimensions do not match the model");
  const Eigen::Index n = X.rows();
  const int k = model.n_rules();
  const int cols_per_rule = model.n_inputs + 1;
  const Eigen::Index n_params = static_cast<Eigen::Index>(k) * cols_per_rule;

  Eigen::MatrixXd regressor(n, n_params);
  for (Eigen::Index s = 0; s < n; ++s) {
    const Eigen::VectorXd x = X.row(s).transpose();
    const Eigen::VectorXd g = normalized_strengths(firing_strengths(model, x));
    for (int i = 0; i < k; ++i) {
      regressor.block(s, static_cast<Eigen::Index>(i) * cols_per_rule, 1,
                      model.n_inputs) = g[i] * x.transpose();
      regressor(s, static_cast<Eigen::Index>(i) * cols_per_rule + model.n_inputs) = g[i];
    }
  }

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(regressor);
  const Eigen::MatrixXd theta = cod.solve(Y);  // n_params x m, minimum norm

  for (int i = 0; i < k; ++i) {
    Rule& rule = model.rules[static_cast<std::size_t>(i)];
    const Eigen::Index base = static_cast<Eigen::Index>(i) * cols_per_rule;
    for (int d = 0; d < model.n_outputs; ++d) {
      rule.consequent.row(d).head(model.n_inputs) =
          theta.col(d).segment(base, model.n_inputs).transpose();
      rule.consequent(d, model.n_inputs) = theta(base + model.n_inputs, d);
    }
  }

  LsInfo info;
  info.rank = cod.rank();
  info.rank_deficient = info.rank < n_params;
  return info;
}

AntecedentGradient antecedent_gradient(const TsModel& model,
                                       const Eigen::MatrixXd& X,
                                       const Eigen::MatrixXd& Y) {
  if (X.rows() != Y.rows()) throw DataError("X and Y row counts differ");
  const Eigen::Index n = X.rows();
  const int k = model.n_rules();

  AntecedentGradient grad;
  grad.d_centers = Eigen::MatrixXd::Zero(k, model.n_inputs);
  grad.d_widths = Eigen::MatrixXd::Zero(k, model.n_inputs);

  std::vector<Eigen::VectorXd> outputs(static_cast<std::size_t>(k));
  for (Eigen::Index s = 0; s < n; ++s) {
    const Eigen::VectorXd x = X.row(s).transpose();
    const Eigen::VectorXd beta = firing_strengths(model, x);
    const double total = beta.sum();
    // Inside the degenerate region the prediction is the strongest rule's
    // output, locally constant in the antecedents: zero gradient.
    if (total < kFiringFloor) continue;

    Eigen::VectorXd y_hat = Eigen::VectorXd::Zero(model.n_outputs);
    for (int i = 0; i < k; ++i) {
      outputs[static_cast<std::size_t>(i)] =
          rule_output(model.rules[static_cast<std::size_t>(i)], x);
      y_hat += beta[i] * outputs[static_cast<std::size_t>(i)];
    }
    y_hat /= total;
    const Eigen::VectorXd err = y_hat - Y.row(s).transpose();

    for (int i = 0; i < k; ++i) {
      const Rule& rule = model.rules[static_cast<std::size_t>(i)];
      const double g_beta =
          2.0 * err.dot(outputs[static_cast<std::size_t>(i)] - y_hat) /
          (total * static_cast<double>(n));
      const Eigen::ArrayXd diff = (x - rule.centers).array();
      const Eigen::ArrayXd w2 = rule.widths.array().square();
      grad.d_centers.row(i) += (g_beta * beta[i] * diff / w2).matrix().transpose();
      grad.d_widths.row(i) +=
          (g_beta * beta[i] * diff.square() / (w2 * rule.widths.array()))
              .matrix()
              .transpose();
    }
  }
  return grad;
}

TrainResult train(TsModel& model, const Eigen::MatrixXd& X,
                  const Eigen::MatrixXd& Y, const TrainConfig& config) {
  config.validate();
  model.validate();
  if (X.rows() != Y.rows()) throw DataError("X and Y row counts differ");
  if (X.rows() == 0) throw DataError("empty training set");
  if (X.cols() != model.n_inputs || Y.cols() != model.n_outputs)
    throw DataError("X/Y dimensions do not match the model");

  TrainResult result;
  double prev = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    fit_consequents(model, X, Y);
    const double loss = mse(model, X, Y);
    if (!std::isfinite(loss))
      throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
    result.loss_trace.push_back(loss);
    if (prev - loss < config.tolerance) break;
    prev = loss;
    if (epoch + 1 == config.max_epochs) break;

    const AntecedentGradient grad = antecedent_gradient(model, X, Y);
    std::vector<Rule> saved = model.rules;
    double lr = config.learning_rate;
    bool accepted = false;
    for (int attempt = 0; attempt <= kMaxHalvings; ++attempt) {
      for (int i = 0; i < model.n_rules(); ++i) {
        Rule& rule = model.rules[static_cast<std::size_t>(i)];
        rule.centers = saved[static_cast<std::size_t>(i)].centers -
                       lr * grad.d_centers.row(i).transpose();
        rule.widths = (saved[static_cast<std::size_t>(i)].widths -
                       lr * grad.d_widths.row(i).transpose())
                          .cwiseMax(kWidthFloor);
      }
      const double step_loss = mse(model, X, Y);
      if (std::isfinite(step_loss) && step_loss <= loss) {
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) model.rules = std::move(saved);
  }
  result.final_mse = result.loss_trace.back();
  result.epochs = static_cast<int>(result.loss_trace.size());
  return result;
}

RuleCountSelection select_rule_count(const Eigen::MatrixXd& X,
                                     const Eigen::MatrixXd& Y, int k_min,
                                     int k_max, int folds, std::uint64_t seed,
                                     const TrainConfig& config) {
  const Eigen::Index n = X.rows();
  if (k_min < 1 || k_max < k_min) throw UsageError("invalid rule-count range");
  if (folds < 2 || folds > n)
    throw DataError("fold count must lie in [2, n]; got " + std::to_string(folds) +
                    " with n=" + std::to_string(n));

  // Plain shuffled partition; sizes differ by at most one.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed, kStreamFolds);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<Eigen::Index>> fold_indices(static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < order.size(); ++i)
    fold_indices[i % static_cast<std::size_t>(folds)].push_back(order[i]);

  RuleCountSelection sel;
  sel.k_min = k_min;
  const double inf = std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    std::vector<double> errors;
    bool feasible = true;
    for (int f = 0; f < folds && feasible; ++f) {
      const auto& test = fold_indices[static_cast<std::size_t>(f)];
      const Eigen::Index n_train = n - static_cast<Eigen::Index>(test.size());
      if (n_train < k) { feasible = false; break; }
      Eigen::MatrixXd Xtr(n_train, X.cols()), Ytr(n_train, Y.cols());
      Eigen::MatrixXd Xte(static_cast<Eigen::Index>(test.size()), X.cols());
      Eigen::MatrixXd Yte(static_cast<Eigen::Index>(test.size()), Y.cols());
      std::vector<char> in_test(static_cast<std::size_t>(n), 0);
      for (Eigen::Index idx : test) in_test[static_cast<std::size_t>(idx)] = 1;
      Eigen::Index tr = 0, te = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (in_test[static_cast<std::size_t>(i)]) {
          Xte.row(te) = X.row(i);
          Yte.row(te++) = Y.row(i);
        } else {
          Xtr.row(tr) = X.row(i);
          Ytr.row(tr++) = Y.row(i);
        }
      }
      TsModel model = init_antecedents(
          Xtr, k, static_cast<int>(Y.cols()),
          derive_seed(seed, kStreamFit, static_cast<std::uint64_t>(k),
                      static_cast<std::uint64_t>(f)));
      train(model, Xtr, Ytr, config);
      errors.push_back(mse(model, Xte, Yte));
    }
    if (!feasible || errors.empty()) {
      sel.mean_error.push_back(inf);
      sel.std_error.push_back(inf);
      continue;
    }
    const double mean = std::accumulate(errors.begin(), errors.end(), 0.0) /
                        static_cast<double>(errors.size());
    double var = 0.0;
    for (double e : errors) var += (e - mean) * (e - mean);
    var = errors.size() > 1 ? var / static_cast<double>(errors.size() - 1) : 0.0;
    sel.mean_error.push_back(mean);
    sel.std_error.push_back(std::sqrt(var));
  }

  // Smallest K within one standard deviation of the minimal mean error.
  int best = -1;
  for (std::size_t i = 0; i < sel.mean_error.size(); ++i)
    if (best < 0 || sel.mean_error[i] < sel.mean_error[static_cast<std::size_t>(best)])
      best = static_cast<int>(i);
  if (best < 0 || !std::isfinite(sel.mean_error[static_cast<std::size_t>(best)]))
    throw DataError("no feasible rule count in the requested range");
  // The epsilon keeps float-noise differences between exact fits from
  // overriding the parsimony tie-break.
  const double threshold = sel.mean_error[static_cast<std::size_t>(best)] +
                           sel.std_error[static_cast<std::size_t>(best)] +
                           1e-12 * (1.0 + sel.mean_error[static_cast<std::size_t>(best)]);
  sel.chosen = k_min + best;
  for (std::size_t i = 0; i < sel.mean_error.size(); ++i) {
    if (sel.mean_error[i] <= threshold) {
      sel.chosen = k_min + static_cast<int>(i);
      break;
    }
  }
  return sel;
}

detail::json ts_to_json(const TsModel& model) {
  model.validate();
  detail::json j;
  j["version"] = 1;
  j["n_inputs"] = model.n_inputs;
  j["n_outputs"] = model.n_outputs;
  detail::json rules = detail::json::array();
  for (const Rule& rule : model.rules) {
    detail::json r;
    r["centers"] = std::vector<double>(rule.centers.begin(), rule.centers.end());
    r["widths"] = std::vector<double>(rule.widths.begin(), rule.widths.end());
    r["weight"] = rule.weight;
    detail::json rows = detail::json::array();
    for (Eigen::Index d = 0; d < rule.consequent.rows(); ++d) {
      detail::json row = detail::json::array();
      for (Eigen::Index c = 0; c < rule.consequent.cols(); ++c)
        row.push_back(rule.consequent(d, c));
      rows.push_back(std::move(row));
    }
    r["consequent"] = std::move(rows);
    rules.push_back(std::move(r));
  }
  j["rules"] = std::move(rules);
  return j;
}

TsModel ts_from_json(const detail::json& j, const std::string& context) {
  const int version = j.value("version", 0);
  if (version != 1)
    throw DataError(context + ": unsupported model version " +
                    std::to_string(version));
  TsModel model;
  model.n_inputs = j.at("n_inputs").get<int>();
  model.n_outputs = j.at("n_outputs").get<int>();
  for (const auto& r : j.at("rules")) {
    Rule rule;
    const auto centers = r.at("centers").get<std::vector<double>>();
    const auto widths = r.at("widths").get<std::vector<double>>();
    rule.centers = Eigen::Map<const Eigen::VectorXd>(centers.data(), centers.size());
    rule.widths = Eigen::Map<const Eigen::VectorXd>(widths.data(), widths.size());
    rule.weight = r.at("weight").get<double>();
    const auto& rows = r.at("consequent");
    rule.consequent.resize(static_cast<Eigen::Index>(rows.size()),
                           model.n_inputs + 1);
    for (std::size_t d = 0; d < rows.size(); ++d) {
      const auto row = rows[d].get<std::vector<double>>();
      if (row.size() != static_cast<std::size_t>(model.n_inputs + 1))
        throw DataError(context + ": ragged consequent matrix");
      for (std::size_t c = 0; c < row.size(); ++c)
        rule.consequent(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(c)) =
            row[c];
    }
    model.rules.push_back(std::move(rule));
  }
  model.validate();
  return model;
}

void write_ts_model(const std::filesystem::path& path, const TsModel& model) {
  detail::save_json(path, ts_to_json(model));
}

TsModel read_ts_model(const std::filesystem::path& path) {
  return ts_from_json(detail::load_json(path), path.string());
}

}  // namespace pme::neurofuzzy
