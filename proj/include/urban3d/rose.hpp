#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace urban3d::models {

struct RoseSample {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

/// Smoothed bootstrap for a 0/1 outcome. Each of 2n draws picks a class with
/// probability 1/2, then a member of that class uniformly, and adds Gaussian
/// noise with bandwidth shrink * (4/((p+2) n_c))^(1/(p+4)) * sd_c,j to each
/// column not flagged as categorical. shrink = 0 gives a plain resample.
RoseSample rose_sample(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t seed,
                       const std::vector<bool>& categorical = {}, double shrink = 1.0);

/// Per-class bandwidth vector (before `shrink`).
Eigen::VectorXd rose_bandwidth(const Eigen::MatrixXd& class_rows);

}  // namespace urban3d::models
