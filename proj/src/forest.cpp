#include "urban3d/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "urban3d/error.hpp"
#include "urban3d/parallel.hpp"
#include "urban3d/random.hpp"

namespace urban3d::models {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double RandomForest::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  double sum = 0.0;
  for (const Tree& tree : trees_) {
    std::int32_t k = 0;
    while (tree[static_cast<std::size_t>(k)].feature >= 0) {
      const TreeNode& node = tree[static_cast<std::size_t>(k)];
      k = row(node.feature) <= node.threshold ? node.left : node.right;
    }
    sum += tree[static_cast<std::size_t>(k)].value;
  }
  return sum / static_cast<double>(trees_.size());
}

VectorXd RandomForest::predict(const MatrixXd& x) const {
  if (x.cols() != n_features_) throw InputError("design width does not match forest");
  VectorXd out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out(i) = predict_row(x.row(i));
  return out;
}

int resolve_mtry(const ForestConfig& cfg, ForestTask task, int p) {
  if (cfg.mtry > 0) return cfg.mtry;
  const double d = static_cast<double>(p);
  const int m = task == ForestTask::Classification ? static_cast<int>(std::ceil(std::sqrt(d)))
                                                   : static_cast<int>(std::ceil(d / 3.0));
  return std::clamp(m, 1, std::max(p, 1));
}

void validate_config(const ForestConfig& cfg, int p) {
  if (cfg.n_trees < 1) throw InputError("forest: n_trees must be >= 1");
  if (cfg.min_leaf < 1) throw InputError("forest: min_leaf must be >= 1");
  if (cfg.max_depth < 0) throw InputError("forest: max_depth must be >= 0");
  if (cfg.mtry < 0 || (p > 0 && cfg.mtry > p)) throw InputError("forest: mtry must be in [1, p]");
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const MatrixXd& x, const VectorXd& y, ForestTask task, const ForestConfig& cfg,
              int mtry)
      : x_(x), y_(y), task_(task), cfg_(cfg), mtry_(mtry) {}

  Tree build(Rng& rng) const {
    const auto n = static_cast<std::size_t>(y_.size());
    std::vector<std::uint32_t> idx(n);
    if (cfg_.bootstrap) {
      for (auto& i : idx) i = static_cast<std::uint32_t>(rng.uniform_index(n));
    } else {
      std::iota(idx.begin(), idx.end(), 0u);
    }
    std::vector<int> features(static_cast<std::size_t>(x_.cols()));
    std::iota(features.begin(), features.end(), 0);
    std::vector<std::pair<double, double>> buf;
    buf.reserve(n);

    Tree tree;
    struct Task {
      std::size_t begin, end;
      int depth;
      std::int32_t node;
    };
    tree.emplace_back();
    std::vector<Task> stack{{0, n, 0, 0}};
    while (!stack.empty()) {
      const Task t = stack.back();
      stack.pop_back();
      const Split s = best_split(idx, t.begin, t.end, t.depth, features, buf, rng);
      if (s.feature < 0) {
        tree[static_cast<std::size_t>(t.node)].value = leaf_value(idx, t.begin, t.end);
        continue;
      }
      const auto mid = static_cast<std::size_t>(
          std::partition(idx.begin() + static_cast<std::ptrdiff_t>(t.begin),
                         idx.begin() + static_cast<std::ptrdiff_t>(t.end),
                         [&](std::uint32_t i) { return x_(i, s.feature) <= s.threshold; }) -
          idx.begin());
      const auto left = static_cast<std::int32_t>(tree.size());
      tree.emplace_back();
      tree.emplace_back();
      TreeNode& node = tree[static_cast<std::size_t>(t.node)];
      node.feature = s.feature;
      node.threshold = s.threshold;
      node.left = left;
      node.right = left + 1;
      stack.push_back({mid, t.end, t.depth + 1, left + 1});
      stack.push_back({t.begin, mid, t.depth + 1, left});
    }
    return tree;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
  };

  double leaf_value(const std::vector<std::uint32_t>& idx, std::size_t b, std::size_t e) const {
    double sum = 0.0;
    for (std::size_t k = b; k < e; ++k) sum += y_(idx[k]);
    const double mean = sum / static_cast<double>(e - b);
    if (task_ == ForestTask::Regression) return mean;
    if (mean > 0.5) return 1.0;
    return mean == 0.5 ? 0.5 : 0.0;
  }

  Split best_split(const std::vector<std::uint32_t>& idx, std::size_t b, std::size_t e, int depth,
                   std::vector<int>& features, std::vector<std::pair<double, double>>& buf,
                   Rng& rng) const {
    const std::size_t m = e - b;
    const auto min_leaf = static_cast<std::size_t>(cfg_.min_leaf);
    if (m < 2 * min_leaf) return {};
    if (cfg_.max_depth > 0 && depth >= cfg_.max_depth) return {};
    double total = 0.0;
    bool pure = true;
    const double y0 = y_(idx[b]);
    for (std::size_t k = b; k < e; ++k) {
      const double v = y_(idx[k]);
      total += v;
      pure = pure && v == y0;
    }
    if (pure) return {};

    // Both criteria reduce to maximizing sum over children of S^2/n (variance)
    // or (P^2 + N^2)/n (Gini), the parent term being constant.
    const double md = static_cast<double>(m);
    const double parent =
        task_ == ForestTask::Regression ? total * total / md : (total * total + (md - total) * (md - total)) / md;
    double best_gain = 1e-12 * std::max(1.0, std::abs(parent));
    Split best;

    const auto p = features.size();
    const auto draws = std::min<std::size_t>(static_cast<std::size_t>(mtry_), p);
    for (std::size_t d = 0; d < draws; ++d) {
      const auto j = d + rng.uniform_index(p - d);
      std::swap(features[d], features[j]);
      const int f = features[d];
      buf.clear();
      for (std::size_t k = b; k < e; ++k) buf.emplace_back(x_(idx[k], f), y_(idx[k]));
      std::sort(buf.begin(), buf.end(),
                [](const auto& u, const auto& v) { return u.first < v.first; });
      if (buf.front().first == buf.back().first) continue;
      double left = 0.0;
      for (std::size_t k = 0; k + 1 < m; ++k) {
        left += buf[k].second;
        const std::size_t nl = k + 1;
        if (nl < min_leaf) continue;
        if (m - nl < min_leaf) break;
        if (buf[k].first == buf[k + 1].first) continue;
        const double l = static_cast<double>(nl), r = md - l;
        const double right = total - left;
        double score;
        if (task_ == ForestTask::Regression) {
          score = left * left / l + right * right / r;
        } else {
          score = (left * left + (l - left) * (l - left)) / l +
                  (right * right + (r - right) * (r - right)) / r;
        }
        const double gain = score - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best.feature = f;
          const double lo = buf[k].first, hi = buf[k + 1].first;
          double mid = lo + 0.5 * (hi - lo);
          if (!(mid < hi)) mid = lo;
          best.threshold = mid;
        }
      }
    }
    return best;
  }

  const MatrixXd& x_;
  const VectorXd& y_;
  ForestTask task_;
  const ForestConfig& cfg_;
  int mtry_;
};

}  // namespace

RandomForest fit_random_forest(const MatrixXd& x, const VectorXd& y, ForestTask task,
                               const ForestConfig& cfg) {
  const auto p = static_cast<int>(x.cols());
  validate_config(cfg, p);
  if (x.rows() != y.size()) throw InputError("design rows do not match outcome length");
  if (!x.allFinite() || !y.allFinite()) throw InputError("non-finite values in data set");
  if (y.size() < cfg.min_leaf) {
    throw ModelError("forest: need at least min_leaf observations");
  }
  if (y.maxCoeff() == y.minCoeff()) throw ModelError("forest: outcome is constant");
  if (task == ForestTask::Classification) {
    for (Index i = 0; i < y.size(); ++i) {
      if (y(i) != 0.0 && y(i) != 1.0) throw InputError("forest: classification outcome must be 0/1");
    }
  }
  const int mtry = resolve_mtry(cfg, task, p);
  const TreeBuilder builder(x, y, task, cfg, mtry);
  std::vector<Tree> trees(static_cast<std::size_t>(cfg.n_trees));
  parallel_for(trees.size(), cfg.threads, [&](std::size_t t) {
    Rng rng(derive_seed(cfg.seed, t));
    trees[t] = builder.build(rng);
  });
  return RandomForest(task, p, std::move(trees));
}

}  // namespace urban3d::models
