#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "urban3d/geometry.hpp"
#include "urban3d/linear.hpp"

namespace urban3d::models {

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
  double simplex_size = 0.0;
};

/// Derivative-free simplex minimizer. Converged when every vertex lies
/// within `tol` (max-norm) of the best one.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& start, double step, int max_evals, double tol);

struct SemConfig {
  Link link = Link::Identity;
  std::size_t n_knots = 0;  // 0: min(ceil(n/10), 64)
  int restarts = 3;
  int max_evals = 2000;
  double tol = 1e-4;  // simplex size in log-parameter space
  std::uint64_t seed = 1;
  bool planar = false;       // drop z from distances
  double diameter = 0.0;     // 0: bounding-box diagonal of the sites
  double logit_tau2 = 1e-6;  // nominal nugget for the logit link
  double ridge = 1e-4;       // on standardized fixed effects, logit link
};

void validate_config(const SemConfig& cfg);

/// Fitted spatial error model y = X beta + w(s) + e, w from a predictive
/// process over `knots`. Values are on the outcome's own scale.
struct SemParams {
  Link link = Link::Identity;
  std::vector<std::string> names;
  double intercept = 0.0;
  Eigen::VectorXd beta;
  double sigma2 = 1.0;
  double phi = 1.0;
  double tau2 = 1.0;
  bool planar = false;
  std::vector<geo::Point3> knots;
  /// Mode (logit) or posterior mean (Gaussian) of the whitened knot effects v,
  /// with w = U v.
  Eigen::VectorXd knot_effects;
  double log_likelihood = 0.0;
  int evaluations = 0;
};

/// Marginal-likelihood fit. Gaussian link: profiled GLS for beta inside
/// Nelder-Mead over (log sigma2, log phi, log tau2). Logit link: Laplace
/// approximation over the knot effects, optimizing (log sigma2, log phi).
/// Throws ModelError when no restart converges within max_evals.
SemParams fit_sem(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                  std::span<const geo::Point3> sites, const SemConfig& cfg,
                  std::vector<std::string> names = {});

/// Profiled Gaussian log-likelihood at fixed covariance parameters.
double sem_profile_log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  std::span<const geo::Point3> sites,
                                  std::span<const geo::Point3> knots, double sigma2, double phi,
                                  double tau2);

/// Fixed effects plus kriged spatial effect; probabilities for the logit link.
Eigen::VectorXd predict_sem(const SemParams& params, const Eigen::MatrixXd& x,
                            std::span<const geo::Point3> sites);
/// The latent mean before the link function.
Eigen::VectorXd predict_sem_latent(const SemParams& params, const Eigen::MatrixXd& x,
                                   std::span<const geo::Point3> sites);

}  // namespace urban3d::models
