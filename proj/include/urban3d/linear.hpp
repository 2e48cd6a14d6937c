#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace urban3d::models {

enum class Link { Identity, Logit };

inline double logistic(double eta) {
  return eta >= 0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
}

/// Column means and population standard deviations. Constant columns keep
/// sd = 1 so they standardize to zero.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

/// Fitted linear predictor eta = intercept + x * coefficients (raw scale).
/// Penalized fits also keep the standardized solution they were solved in.
struct LinearModel {
  Link link = Link::Identity;
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  std::vector<std::string> names;
  Standardizer standardizer;
  double std_intercept = 0.0;
  Eigen::VectorXd std_coefficients;

  Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& x) const;
  /// Identity link: the mean. Logit link: probabilities.
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Least squares via column-pivoted Householder QR. Throws ModelError listing
/// the collinear columns when the design (with intercept) is rank deficient.
LinearModel fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    std::vector<std::string> names = {});

/// Logistic regression by Newton-IRLS with a weak ridge on the standardized
/// coefficients, which keeps separated designs finite.
LinearModel fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         std::vector<std::string> names = {}, double ridge = 1e-4);

struct ElasticNetConfig {
  std::optional<double> lambda;  // unset: chosen by cross-validation
  double mix = 0.5;              // 1 = lasso, 0 = ridge
  double tol = 1e-7;
  int max_iter = 10000;
  int cv_folds = 5;
  int n_lambda = 100;
  double lambda_ratio = 1e-4;
  std::uint64_t seed = 1;
};

void validate_config(const ElasticNetConfig& cfg);

/// Smallest lambda at which every coefficient is zero.
double lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Link link, double mix);

/// Log-spaced grid from lambda_max down by `ratio`, decreasing.
std::vector<double> lambda_grid(double lmax, int n, double ratio);

/// Penalized fit at one lambda by coordinate descent on standardized columns.
/// `warm` (standardized intercept followed by coefficients) seeds the solver.
LinearModel fit_elastic_net_at(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Link link,
                               double lambda, const ElasticNetConfig& cfg,
                               const Eigen::VectorXd* warm = nullptr);

struct ElasticNetFit {
  LinearModel model;
  double lambda = 0.0;
  std::vector<double> grid;
  std::vector<double> cv_loss;  // empty when lambda was given
};

/// Fixed lambda if configured, otherwise cv_folds cross-validation over the
/// grid (squared error or binomial deviance) and a refit on all rows.
ElasticNetFit fit_elastic_net(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Link link,
                              const ElasticNetConfig& cfg, std::vector<std::string> names = {});

/// Largest violation of the optimality conditions of a penalized fit, on the
/// standardized scale in which it was solved.
double kkt_residual(const LinearModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    double lambda, double mix);

}  // namespace urban3d::models
