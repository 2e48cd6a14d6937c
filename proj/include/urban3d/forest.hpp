#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace urban3d::models {

enum class ForestTask { Regression, Classification };

struct ForestConfig {
  int n_trees = 500;
  int mtry = 0;       // 0: ceil(sqrt(p)) classification, ceil(p/3) regression
  int min_leaf = 5;
  int max_depth = 0;  // 0: unlimited
  bool bootstrap = true;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // go left when x[feature] <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;  // leaf mean, or leaf vote in {0, 0.5, 1}
};

using Tree = std::vector<TreeNode>;

class RandomForest {
 public:
  RandomForest() = default;
  RandomForest(ForestTask task, int n_features, std::vector<Tree> trees)
      : task_(task), n_features_(n_features), trees_(std::move(trees)) {}

  ForestTask task() const { return task_; }
  int n_features() const { return n_features_; }
  const std::vector<Tree>& trees() const { return trees_; }

  /// Mean of tree outputs: the regression estimate, or the vote fraction.
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;

 private:
  ForestTask task_ = ForestTask::Regression;
  int n_features_ = 0;
  std::vector<Tree> trees_;
};

int resolve_mtry(const ForestConfig& cfg, ForestTask task, int p);
void validate_config(const ForestConfig& cfg, int p);

/// CART trees on bootstrap resamples with per-tree generators derived from
/// (seed, tree index). Classification outcomes must be 0/1.
RandomForest fit_random_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, ForestTask task,
                               const ForestConfig& cfg);

}  // namespace urban3d::models
