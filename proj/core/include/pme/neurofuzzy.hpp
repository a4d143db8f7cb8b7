#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace pme::neurofuzzy {

// One first-order rule: Gaussian antecedents per input dimension plus an
// affine consequent per output. consequent is m x (n+1); row d holds the
// slope vector followed by the offset, so rule output = consequent * [x; 1].
struct Rule {
  Eigen::VectorXd centers;     // n
  Eigen::VectorXd widths;      // n, > 0
  double weight = 1.0;         // [0, 1]
  Eigen::MatrixXd consequent;  // m x (n+1)
};

struct TsModel {
  int n_inputs = 0;
  int n_outputs = 0;
  std::vector<Rule> rules;

  int n_rules() const { return static_cast<int>(rules.size()); }
  void validate() const;
};

// Below this total firing strength the weighted average degenerates to 0/0;
// predict falls back to the single rule with the largest strength.
inline constexpr double kFiringFloor = 1e-12;

// Per-dimension Gaussian membership degrees exp(-(x-c)^2 / (2 sigma^2)).
Eigen::VectorXd membership(const Rule& rule, const Eigen::VectorXd& x);

// Rule fulfilment: weight times the product of the membership degrees.
double firing_strength(const Rule& rule, const Eigen::VectorXd& x);

// Firing-strength-weighted average of the rule consequent outputs.
Eigen::VectorXd predict(const TsModel& model, const Eigen::VectorXd& x);
Eigen::MatrixXd predict(const TsModel& model, const Eigen::MatrixXd& X);  // rows = samples

double mse(const TsModel& model, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

struct TrainConfig {
  int max_epochs = 200;
  double learning_rate = 0.05;
  double tolerance = 1e-8;  // stop when the MSE improvement drops below this
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Places K rules from a k-means clustering of X (deterministic per seed):
// centers at the cluster means, widths at the per-cluster standard deviation
// per dimension floored at 0.1x the global per-dimension deviation, weights 1,
// consequents zero.
TsModel init_antecedents(const Eigen::MatrixXd& X, int n_rules, int n_outputs,
                         std::uint64_t seed);

struct LsInfo {
  bool rank_deficient = false;
  Eigen::Index rank = 0;
};

// Global linear least squares over all consequent parameters with the
// antecedents held fixed: regressor row [g_1 x, g_1, ..., g_K x, g_K] with
// normalized firing strengths g. Rank-deficient systems get the
// minimum-norm solution and are flagged.
LsInfo fit_consequents(TsModel& model, const Eigen::MatrixXd& X,
                       const Eigen::MatrixXd& Y);

// Analytic gradient of the training MSE with respect to the antecedent
// centers and widths (K x n each). Exposed so it can be checked against
// finite differences.
struct AntecedentGradient {
  Eigen::MatrixXd d_centers;
  Eigen::MatrixXd d_widths;
};

AntecedentGradient antecedent_gradient(const TsModel& model,
                                       const Eigen::MatrixXd& X,
                                       const Eigen::MatrixXd& Y);

struct TrainResult {
  std::vector<double> loss_trace;  // MSE after each least-squares solve
  double final_mse = 0.0;
  int epochs = 0;
};

// Hybrid estimation loop: exact least squares for the consequents, then a
// gradient step on centers/widths (halving the step on loss increase, up to
// ten times per epoch). Stops at max_epochs or when the improvement falls
// below config.tolerance. Widths are clamped to stay >= 1e-6.
TrainResult train(TsModel& model, const Eigen::MatrixXd& X,
                  const Eigen::MatrixXd& Y, const TrainConfig& config);

struct RuleCountSelection {
  int chosen = 1;
  int k_min = 1;
  std::vector<double> mean_error;  // per K in [k_min, k_max]
  std::vector<double> std_error;
};

// K-fold cross-validated rule-count selection: picks the smallest K whose
// mean validation error is within one standard deviation of the minimum
// (low error, low variance, parsimony tie-break).
RuleCountSelection select_rule_count(const Eigen::MatrixXd& X,
                                     const Eigen::MatrixXd& Y, int k_min,
                                     int k_max, int folds, std::uint64_t seed,
                                     const TrainConfig& config);

// JSON serialization (versioned).
void write_ts_model(const std::filesystem::path& path, const TsModel& model);
TsModel read_ts_model(const std::filesystem::path& path);

}  // namespace pme::neurofuzzy
