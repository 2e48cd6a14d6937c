#include "urban3d/rose.hpp"

#include <cmath>

#include "urban3d/error.hpp"
#include "urban3d/random.hpp"

namespace urban3d::models {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd rose_bandwidth(const MatrixXd& rows) {
  const double n = static_cast<double>(rows.rows());
  const double p = static_cast<double>(rows.cols());
  const double factor = std::pow(4.0 / ((p + 2.0) * n), 1.0 / (p + 4.0));
  VectorXd h(rows.cols());
  for (Index j = 0; j < rows.cols(); ++j) {
    const double mean = rows.col(j).mean();
    const double var = n > 1 ? (rows.col(j).array() - mean).square().sum() / (n - 1.0) : 0.0;
    h(j) = factor * std::sqrt(var);
  }
  return h;
}

RoseSample rose_sample(const MatrixXd& x, const VectorXd& y, std::uint64_t seed,
                       const std::vector<bool>& categorical, double shrink) {
  if (x.rows() != y.size()) throw InputError("ROSE: design rows do not match outcome length");
  if (!categorical.empty() && categorical.size() != static_cast<std::size_t>(x.cols())) {
    throw InputError("ROSE: categorical mask width does not match design");
  }
  if (!(shrink >= 0.0)) throw InputError("ROSE: shrink must be >= 0");
  std::vector<Index> members[2];
  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) throw InputError("ROSE: outcome must be 0/1");
    members[y(i) == 1.0 ? 1 : 0].push_back(i);
  }
  for (int c = 0; c < 2; ++c) {
    if (members[c].size() < 2) {
      throw InputError("ROSE: class " + std::to_string(c) + " has fewer than 2 members");
    }
  }
  VectorXd h[2];
  for (int c = 0; c < 2; ++c) {
    h[c] = shrink * rose_bandwidth(x(members[c], Eigen::all));
    for (Index j = 0; j < x.cols(); ++j) {
      if (!categorical.empty() && categorical[static_cast<std::size_t>(j)]) h[c](j) = 0.0;
    }
  }

  const Index draws = 2 * y.size();
  RoseSample out;
  out.x.resize(draws, x.cols());
  out.y.resize(draws);
  Rng rng(derive_seed(seed, 0x905E));
  for (Index k = 0; k < draws; ++k) {
    const int c = rng.uniform() < 0.5 ? 1 : 0;
    const auto& m = members[c];
    const Index src = m[rng.uniform_index(m.size())];
    out.y(k) = c;
    for (Index j = 0; j < x.cols(); ++j) {
      const double noise = h[c](j) > 0.0 ? h[c](j) * rng.normal() : 0.0;
      out.x(k, j) = x(src, j) + noise;
    }
  }
  return out;
}

}  // namespace urban3d::models
