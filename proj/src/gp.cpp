#include "urban3d/gp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "urban3d/error.hpp"
#include "urban3d/numfmt.hpp"
#include "urban3d/random.hpp"

namespace urban3d::models {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double exp_cov(geo::Point3 s, geo::Point3 t, double sigma2, double phi) {
  return sigma2 * std::exp(-phi * geo::norm(s - t));
}

MatrixXd cov_matrix(std::span<const geo::Point3> a, std::span<const geo::Point3> b, double sigma2,
                    double phi) {
  MatrixXd c(static_cast<Index>(a.size()), static_cast<Index>(b.size()));
  for (std::size_t j = 0; j < b.size(); ++j) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      c(static_cast<Index>(i), static_cast<Index>(j)) = exp_cov(a[i], b[j], sigma2, phi);
    }
  }
  return c;
}

PredictiveProcess::PredictiveProcess(std::span<const geo::Point3> sites,
                                     std::span<const geo::Point3> knots, double sigma2, double phi)
    : knots_(knots.begin(), knots.end()), sigma2_(sigma2), phi_(phi) {
  if (!(sigma2 > 0.0) || !(phi > 0.0)) throw InputError("predictive process: sigma2, phi must be > 0");
  if (knots.size() < 2) throw InputError("predictive process: need at least 2 knots");
  MatrixXd cmm = cov_matrix(knots, knots, sigma2, phi);
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cmm, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
  condition_ = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (condition_ > kMaxKnotCondition) {
    throw ModelError("predictive process: knot covariance is near-singular (condition " +
                     format_double(condition_) + "); use fewer or jittered knots");
  }
  cmm.diagonal().array() += kKnotJitter * sigma2;
  chol_.compute(cmm);
  if (chol_.info() != Eigen::Success) throw ModelError("predictive process: knot Cholesky failed");
  u_ = factor_for(sites);
}

MatrixXd PredictiveProcess::factor_for(std::span<const geo::Point3> sites) const {
  MatrixXd cnm = cov_matrix(sites, knots_, sigma2_, phi_);
  chol_.matrixU().solveInPlace<Eigen::OnTheRight>(cnm);
  return cnm;
}

WoodburySolver::WoodburySolver(const MatrixXd& u, double tau2) : u_(u), tau2_(tau2) {
  if (!(tau2 > 0.0)) throw InputError("nugget variance must be > 0");
  MatrixXd cap = MatrixXd::Identity(u.cols(), u.cols()) * tau2;
  cap.selfadjointView<Eigen::Lower>().rankUpdate(u.transpose());
  cap.triangularView<Eigen::StrictlyUpper>() = cap.transpose();
  cap_.compute(cap);
  if (cap_.info() != Eigen::Success) throw ModelError("Woodbury capacitance matrix is not positive definite");
  const double n = static_cast<double>(u.rows()), m = static_cast<double>(u.cols());
  log_det_ = (n - m) * std::log(tau2) + 2.0 * cap_.matrixLLT().diagonal().array().log().sum();
}

MatrixXd WoodburySolver::solve(const MatrixXd& b) const {
  const MatrixXd t = cap_.solve(u_.transpose() * b);
  return (b - u_ * t) / tau2_;
}

VectorXd WoodburySolver::knot_effects(const VectorXd& b) const { return cap_.solve(u_.transpose() * b); }

double pp_log_likelihood(const VectorXd& r, std::span<const geo::Point3> sites,
                         std::span<const geo::Point3> knots, double sigma2, double phi,
                         double tau2) {
  const PredictiveProcess pp(sites, knots, sigma2, phi);
  const WoodburySolver solver(pp.factor(), tau2);
  const double n = static_cast<double>(r.size());
  const double quad = r.dot(solver.solve(r).col(0));
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + solver.log_det() + quad);
}

double dense_log_likelihood(const VectorXd& r, std::span<const geo::Point3> sites, double sigma2,
                            double phi, double tau2) {
  MatrixXd k = cov_matrix(sites, sites, sigma2, phi);
  k.diagonal().array() += tau2;
  const Eigen::LLT<MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) throw ModelError("dense covariance is not positive definite");
  const double n = static_cast<double>(r.size());
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double quad = r.dot(llt.solve(r));
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + log_det + quad);
}

std::size_t default_knot_count(std::size_t n) { return std::min<std::size_t>((n + 9) / 10, 64); }

namespace {

double dist2(geo::Point3 a, geo::Point3 b) { return dot(a - b, a - b); }

}  // namespace

std::vector<geo::Point3> choose_knots(std::span<const geo::Point3> sites, std::size_t m,
                                      std::uint64_t seed) {
  std::set<std::array<double, 3>> seen;
  std::vector<geo::Point3> unique;
  for (const auto& s : sites) {
    if (seen.insert({s.x, s.y, s.z}).second) unique.push_back(s);
  }
  if (unique.size() <= m) return unique;
  if (m == 0) throw InputError("knot count must be positive");

  Rng rng(derive_seed(seed, 0x4B40));
  const std::size_t n = unique.size();
  std::vector<geo::Point3> centers;
  centers.reserve(m);
  centers.push_back(unique[rng.uniform_index(n)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = dist2(unique[i], centers[0]);
  while (centers.size() < m) {
    double total = 0.0;
    for (double v : d2) total += v;
    if (total <= 0.0) break;
    double target = rng.uniform() * total;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      target -= d2[i];
      if (target < 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(unique[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], dist2(unique[i], centers.back()));
  }

  std::vector<std::size_t> label(n, 0);
  for (int iter = 0; iter < 50; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = dist2(unique[i], centers[0]);
      for (std::size_t c = 1; c < centers.size(); ++c) {
        const double d = dist2(unique[i], centers[c]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (iter == 0 || label[i] != best) changed = true;
      label[i] = best;
    }
    if (!changed) break;
    std::vector<geo::Vec3> sum(centers.size());
    std::vector<std::size_t> count(centers.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[label[i]] += unique[i];
      ++count[label[i]];
    }
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (count[c] > 0) centers[c] = sum[c] / static_cast<double>(count[c]);
    }
  }

  // Drop centers that coincide after convergence.
  std::vector<geo::Point3> out;
  for (const auto& c : centers) {
    const bool dup = std::any_of(out.begin(), out.end(), [&](const geo::Point3& o) {
      return dist2(o, c) < 1e-12;
    });
    if (!dup) out.push_back(c);
  }
  return out;
}

double site_diameter(std::span<const geo::Point3> sites) {
  geo::Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
               std::numeric_limits<double>::infinity()};
  geo::Vec3 hi = -lo;
  for (const auto& s : sites) {
    lo = {std::min(lo.x, s.x), std::min(lo.y, s.y), std::min(lo.z, s.z)};
    hi = {std::max(hi.x, s.x), std::max(hi.y, s.y), std::max(hi.z, s.z)};
  }
  return sites.empty() ? 0.0 : geo::norm(hi - lo);
}

}  // namespace urban3d::models
