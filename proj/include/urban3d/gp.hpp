#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "urban3d/geometry.hpp"

namespace urban3d::models {

/// sigma2 * exp(-phi * |s - t|), full 3D distance.
double exp_cov(geo::Point3 s, geo::Point3 t, double sigma2, double phi);

Eigen::MatrixXd cov_matrix(std::span<const geo::Point3> a, std::span<const geo::Point3> b,
                           double sigma2, double phi);

/// Times sigma2, added to the knot covariance diagonal before factorization.
/// The condition check sees the covariance without it.
inline constexpr double kKnotJitter = 1e-11;
inline constexpr double kMaxKnotCondition = 1e12;

/// Low-rank predictive-process covariance K~ = C_nm C_mm^-1 C_mn, held as
/// the factor U = C_nm L^-T with L L^T = C_mm + jitter sigma2 I, so K~ = U U^T.
class PredictiveProcess {
 public:
  /// Throws ModelError when cond(C_mm) exceeds kMaxKnotCondition.
  PredictiveProcess(std::span<const geo::Point3> sites, std::span<const geo::Point3> knots,
                    double sigma2, double phi);

  const Eigen::MatrixXd& factor() const { return u_; }
  std::size_t rank() const { return knots_.size(); }
  double condition_number() const { return condition_; }

  /// Factor rows for other sites: K~(new, sites) = U_new U^T.
  Eigen::MatrixXd factor_for(std::span<const geo::Point3> sites) const;
  Eigen::VectorXd diagonal() const { return u_.rowwise().squaredNorm(); }
  Eigen::VectorXd multiply(const Eigen::VectorXd& v) const { return u_ * (u_.transpose() * v); }
  /// n x n matrix, for tests and small problems only.
  Eigen::MatrixXd dense() const { return u_ * u_.transpose(); }

 private:
  std::vector<geo::Point3> knots_;
  double sigma2_;
  double phi_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::MatrixXd u_;
  double condition_ = 0.0;
};

/// Solves with tau2 I + U U^T through the m x m capacitance matrix. Keeps a
/// reference to `u`, which must outlive the solver.
class WoodburySolver {
 public:
  WoodburySolver(const Eigen::MatrixXd& u, double tau2);

  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
  double log_det() const { return log_det_; }
  /// (tau2 I_m + U^T U)^-1 U^T b: posterior mean of the knot effects.
  Eigen::VectorXd knot_effects(const Eigen::VectorXd& b) const;

 private:
  const Eigen::MatrixXd& u_;
  double tau2_;
  Eigen::LLT<Eigen::MatrixXd> cap_;
  double log_det_ = 0.0;
};

/// Gaussian log density of r ~ N(0, K~ + tau2 I) via Woodbury.
double pp_log_likelihood(const Eigen::VectorXd& r, std::span<const geo::Point3> sites,
                         std::span<const geo::Point3> knots, double sigma2, double phi,
                         double tau2);
/// Same with the exact n x n covariance.
double dense_log_likelihood(const Eigen::VectorXd& r, std::span<const geo::Point3> sites,
                            double sigma2, double phi, double tau2);

std::size_t default_knot_count(std::size_t n);

/// k-means++ seeding then Lloyd iterations over the distinct sites. Returns
/// at most m distinct centers; all distinct sites when there are <= m.
std::vector<geo::Point3> choose_knots(std::span<const geo::Point3> sites, std::size_t m,
                                      std::uint64_t seed);

/// Diagonal of the bounding box of the sites.
double site_diameter(std::span<const geo::Point3> sites);

}  // namespace urban3d::models
