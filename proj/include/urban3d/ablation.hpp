#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "urban3d/eval.hpp"
#include "urban3d/features.hpp"
#include "urban3d/linear.hpp"

namespace urban3d::eval {

enum class Tier { Intercept, D1, D2, D3 };
inline constexpr std::array<Tier, 4> kTiers = {Tier::Intercept, Tier::D1, Tier::D2, Tier::D3};
std::string to_string(Tier t);

/// Model columns per showcase, simplest first; row ties go to the earlier one.
std::vector<std::string> default_models(feat::Showcase showcase);

struct AblationConfig {
  std::vector<std::string> models;  // empty: default_models
  SplitConfig split;                // stratify is forced on for pv
  std::uint64_t seed = 1;
  unsigned threads = 1;
  int rf_trees = 500;
  int rf_min_leaf = 5;
  int sem_restarts = 3;
  std::size_t sem_knots = 0;
  double sem_tol = 1e-4;
  models::ElasticNetConfig enet;
};

void validate_config(const AblationConfig& cfg, feat::Showcase showcase);

struct AblationReport {
  feat::Showcase showcase = feat::Showcase::Rent;
  std::string metric;  // "RMSE" or "AUC"
  std::vector<std::string> models;
  /// values[tier][model]
  std::array<std::vector<double>, 4> values;
  std::array<std::size_t, 4> best{};
  std::size_t n_train = 0;
  std::size_t n_test = 0;

  bool lower_is_better() const { return metric == "RMSE"; }
  double at(Tier t, std::size_t model) const { return values[static_cast<std::size_t>(t)][model]; }
};

/// Fits every (tier, model) cell on one split and scores it on the held-out
/// rows. The intercept row is the outcome-mean predictor for every model.
/// Fit failures are rethrown as ModelError naming the cell.
AblationReport run_ablation(const feat::FeatureTable& table, const AblationConfig& cfg);

/// Per model, 3D against the best lower tier. Regression: relative RMSE
/// reduction. Classification: AUC gain over the lower tier's skill above
/// chance, empty when that tier is at or below 0.5.
std::vector<std::optional<double>> relative_improvement(const AblationReport& report);

/// The same formulas on a pair of metric values.
double rmse_improvement(double lower, double upper);
std::optional<double> auc_improvement(double lower, double upper);

std::string render_csv(const AblationReport& report);
std::string render_markdown(const AblationReport& report);

}  // namespace urban3d::eval
