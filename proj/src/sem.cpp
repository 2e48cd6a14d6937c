#include "urban3d/sem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "urban3d/error.hpp"
#include "urban3d/gp.hpp"
#include "urban3d/numfmt.hpp"
#include "urban3d/random.hpp"

namespace urban3d::models {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

NelderMeadResult nelder_mead(const std::function<double(const VectorXd&)>& f, const VectorXd& start,
                             double step, int max_evals, double tol) {
  const Index d = start.size();
  std::vector<VectorXd> pts(static_cast<std::size_t>(d + 1), start);
  std::vector<double> vals(static_cast<std::size_t>(d + 1));
  NelderMeadResult res;
  auto eval = [&](const VectorXd& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };
  for (Index k = 0; k < d; ++k) pts[static_cast<std::size_t>(k + 1)](k) += step;
  for (std::size_t k = 0; k < pts.size(); ++k) vals[k] = eval(pts[k]);

  std::vector<std::size_t> order(pts.size());
  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
    double size = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      size = std::max(size, (pts[k] - pts[best]).cwiseAbs().maxCoeff());
    }
    res.simplex_size = size;
    if (size < tol) {
      res.converged = true;
      break;
    }
    if (res.evaluations >= max_evals) break;

    VectorXd centroid = VectorXd::Zero(d);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (k != worst) centroid += pts[k];
    }
    centroid /= static_cast<double>(d);
    const VectorXd reflected = centroid + (centroid - pts[worst]);
    const double fr = eval(reflected);
    if (fr < vals[best]) {
      const VectorXd expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = eval(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        vals[worst] = fe;
      } else {
        pts[worst] = reflected;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const VectorXd contracted =
        outside ? VectorXd(centroid + 0.5 * (reflected - centroid))
                : VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(contracted);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (k == best) continue;
      pts[k] = pts[best] + 0.5 * (pts[k] - pts[best]);
      vals[k] = eval(pts[k]);
    }
  }
  const std::size_t best = order.front();
  res.x = pts[best];
  res.value = vals[best];
  return res;
}

void validate_config(const SemConfig& cfg) {
  if (cfg.restarts < 1) throw InputError("SEM: restarts must be >= 1");
  if (cfg.max_evals < 10) throw InputError("SEM: max_evals must be >= 10");
  if (!(cfg.tol > 0.0)) throw InputError("SEM: tol must be positive");
  if (cfg.diameter < 0.0) throw InputError("SEM: diameter must be >= 0");
  if (!(cfg.logit_tau2 > 0.0)) throw InputError("SEM: logit nugget must be positive");
}

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)
constexpr double kLogVarBound = 10.0;

std::vector<geo::Point3> prepare_sites(std::span<const geo::Point3> sites, bool planar) {
  std::vector<geo::Point3> out(sites.begin(), sites.end());
  if (planar) {
    for (auto& s : out) s.z = 0.0;
  }
  return out;
}

MatrixXd with_intercept(const MatrixXd& x) {
  MatrixXd a(x.rows(), x.cols() + 1);
  a.col(0).setOnes();
  a.rightCols(x.cols()) = x;
  return a;
}

// Box constraints enter as a quadratic penalty outside the box; the model
// itself is evaluated at the projected point.
struct Box {
  VectorXd lo, hi;

  double excess(const VectorXd& t) const {
    return (t - t.cwiseMax(lo).cwiseMin(hi)).squaredNorm();
  }
  VectorXd project(const VectorXd& t) const { return t.cwiseMax(lo).cwiseMin(hi); }
};

struct GlsResult {
  double log_lik = 0.0;
  VectorXd theta;
};

GlsResult profiled_gls(const MatrixXd& a, const VectorXd& y, const MatrixXd& u, double tau2) {
  const WoodburySolver solver(u, tau2);
  MatrixXd rhs(a.rows(), a.cols() + 1);
  rhs.leftCols(a.cols()) = a;
  rhs.col(a.cols()) = y;
  const MatrixXd s = solver.solve(rhs);
  const MatrixXd g = a.transpose() * s.leftCols(a.cols());
  const VectorXd b = a.transpose() * s.col(a.cols());
  const Eigen::LDLT<MatrixXd> ldlt(g);
  GlsResult res;
  res.theta = ldlt.solve(b);
  const double quad = y.dot(s.col(a.cols())) - res.theta.dot(b);
  const double n = static_cast<double>(y.size());
  res.log_lik = -0.5 * (n * kLog2Pi + solver.log_det() + quad);
  return res;
}

double softplus(double e) { return e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e)); }

// Laplace approximation for y ~ Bernoulli(logistic(A beta + U v)), v ~ N(0, I).
class LaplaceLogit {
 public:
  LaplaceLogit(const MatrixXd& a, const VectorXd& y, double ridge) : a_(a), y_(y), ridge_(ridge) {}

  struct Mode {
    VectorXd theta;  // (beta, v)
    double log_marginal = 0.0;
  };

  Mode fit(const MatrixXd& u, VectorXd theta) const {
    const Index p = a_.cols(), m = u.cols(), q = p + m;
    MatrixXd b(a_.rows(), q);
    b.leftCols(p) = a_;
    b.rightCols(m) = u;
    VectorXd prior = VectorXd::Ones(q);
    prior.head(p).setConstant(ridge_);
    prior(0) = 0.0;
    if (theta.size() != q) {
      theta = VectorXd::Zero(q);
      const double ybar = std::clamp(y_.mean(), 1e-6, 1.0 - 1e-6);
      theta(0) = std::log(ybar / (1.0 - ybar));
    }
    auto objective = [&](const VectorXd& th, VectorXd& eta) {
      eta = b * th;
      double f = 0.0;
      for (Index i = 0; i < eta.size(); ++i) f += y_(i) * eta(i) - softplus(eta(i));
      return f - 0.5 * (prior.array() * th.array().square()).sum();
    };
    VectorXd eta;
    double f = objective(theta, eta);
    VectorXd w(a_.rows());
    MatrixXd h(q, q);
    for (int iter = 0; iter < 100; ++iter) {
      VectorXd resid(eta.size());
      for (Index i = 0; i < eta.size(); ++i) {
        const double pr = logistic(eta(i));
        w(i) = std::sqrt(pr * (1.0 - pr));
        resid(i) = y_(i) - pr;
      }
      const VectorXd g = b.transpose() * resid - prior.cwiseProduct(theta);
      hessian(b, w, prior, h);
      VectorXd step = h.llt().solve(g);
      VectorXd next = theta + step;
      VectorXd next_eta;
      double fn = objective(next, next_eta);
      for (int halve = 0; halve < 40 && !(fn >= f); ++halve) {
        step *= 0.5;
        next = theta + step;
        fn = objective(next, next_eta);
      }
      theta = next;
      eta = next_eta;
      f = fn;
      if (step.cwiseAbs().maxCoeff() < 1e-8) break;
    }
    for (Index i = 0; i < eta.size(); ++i) {
      const double pr = logistic(eta(i));
      w(i) = std::sqrt(pr * (1.0 - pr));
    }
    // log det(I + U'DU) from the v block of the curvature
    const MatrixXd uw = u.array().colwise() * w.array();
    MatrixXd c = MatrixXd::Identity(m, m);
    c.selfadjointView<Eigen::Lower>().rankUpdate(uw.transpose());
    const Eigen::LLT<MatrixXd> llt(c.selfadjointView<Eigen::Lower>());
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double ridge_term = 0.5 * (prior.head(p).array() * theta.head(p).array().square()).sum();
    return {theta, f + ridge_term - 0.5 * log_det};
  }

 private:
  static void hessian(const MatrixXd& b, const VectorXd& w, const VectorXd& prior, MatrixXd& h) {
    const MatrixXd bw = b.array().colwise() * w.array();
    h.setZero();
    h.selfadjointView<Eigen::Lower>().rankUpdate(bw.transpose());
    h.triangularView<Eigen::StrictlyUpper>() = h.transpose();
    h.diagonal() += prior;
    h.diagonal().array() += 1e-10;
  }

  const MatrixXd& a_;
  const VectorXd& y_;
  double ridge_;
};

std::string restart_trace(const std::vector<NelderMeadResult>& runs) {
  std::string out;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    out += "\n  restart " + std::to_string(k) + ": evals " + std::to_string(runs[k].evaluations) +
           ", simplex size " + format_double(runs[k].simplex_size) + ", objective " +
           format_double(runs[k].value);
  }
  return out;
}

}  // namespace

double sem_profile_log_likelihood(const MatrixXd& x, const VectorXd& y,
                                  std::span<const geo::Point3> sites,
                                  std::span<const geo::Point3> knots, double sigma2, double phi,
                                  double tau2) {
  const PredictiveProcess pp(sites, knots, sigma2, phi);
  return profiled_gls(with_intercept(x), y, pp.factor(), tau2).log_lik;
}

SemParams fit_sem(const MatrixXd& x, const VectorXd& y, std::span<const geo::Point3> sites_in,
                  const SemConfig& cfg, std::vector<std::string> names) {
  validate_config(cfg);
  const auto n = static_cast<std::size_t>(y.size());
  if (x.rows() != y.size() || sites_in.size() != n) {
    throw InputError("SEM: design, outcome and sites must have equal length");
  }
  if (n < 30) throw ModelError("SEM: needs at least 30 observations");
  if (!x.allFinite() || !y.allFinite()) throw InputError("SEM: non-finite values in data set");
  const auto sites = prepare_sites(sites_in, cfg.planar);
  const double diameter = cfg.diameter > 0.0 ? cfg.diameter : site_diameter(sites);
  if (!(diameter > 0.0)) throw ModelError("SEM: all sites coincide");
  const std::size_t m = cfg.n_knots > 0 ? cfg.n_knots : default_knot_count(n);
  if (m > n) throw InputError("SEM: more knots than observations");
  const auto knots = choose_knots(sites, m, cfg.seed);
  if (knots.size() < 2) throw ModelError("SEM: fewer than 2 distinct knots");

  const Standardizer xs = Standardizer::fit(x);
  const MatrixXd a = with_intercept(xs.apply(x));
  const double log_phi_lo = std::log(1.0 / diameter), log_phi_hi = std::log(100.0 / diameter);

  SemParams out;
  out.link = cfg.link;
  out.names = std::move(names);
  out.planar = cfg.planar;
  out.knots = knots;
  std::vector<NelderMeadResult> runs;

  if (cfg.link == Link::Identity) {
    const double ybar = y.mean();
    const double ysd = std::sqrt((y.array() - ybar).square().mean());
    if (!(ysd > 0.0)) throw ModelError("SEM: outcome is constant");
    const VectorXd ys = (y.array() - ybar) / ysd;
    Box box{VectorXd(3), VectorXd(3)};
    box.lo << -kLogVarBound, log_phi_lo, -kLogVarBound;
    box.hi << kLogVarBound, log_phi_hi, kLogVarBound;
    auto objective = [&](const VectorXd& t) {
      const VectorXd c = box.project(t);
      try {
        const PredictiveProcess pp(sites, knots, std::exp(c(0)), std::exp(c(1)));
        return -profiled_gls(a, ys, pp.factor(), std::exp(c(2))).log_lik + 1e3 * box.excess(t);
      } catch (const ModelError&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    VectorXd start(3);
    start << std::log(0.5), 0.5 * (log_phi_lo + log_phi_hi), std::log(0.5);
    for (int k = 0; k < cfg.restarts; ++k) {
      Rng rng(derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(k)));
      VectorXd s0 = start;
      for (Index j = 0; j < 3; ++j) s0(j) += 0.5 * rng.normal();
      runs.push_back(nelder_mead(objective, box.project(s0), 1.0, cfg.max_evals, cfg.tol));
    }
    const NelderMeadResult* best = nullptr;
    for (const auto& r : runs) {
      if (r.converged && std::isfinite(r.value) && (!best || r.value < best->value)) best = &r;
    }
    if (!best) throw ModelError("SEM: optimizer did not converge" + restart_trace(runs));
    const VectorXd c = box.project(best->x);
    const double s2 = std::exp(c(0)), phi = std::exp(c(1)), t2 = std::exp(c(2));
    const PredictiveProcess pp(sites, knots, s2, phi);
    const GlsResult gls = profiled_gls(a, ys, pp.factor(), t2);

    const VectorXd beta_s = gls.theta.tail(x.cols());
    out.beta = ysd * beta_s.cwiseQuotient(xs.sd);
    out.intercept = ybar + ysd * gls.theta(0) - out.beta.dot(xs.mean);
    out.sigma2 = s2 * ysd * ysd;
    out.phi = phi;
    out.tau2 = t2 * ysd * ysd;
    out.log_likelihood = gls.log_lik - static_cast<double>(n) * std::log(ysd);
    for (const auto& r : runs) out.evaluations += r.evaluations;

    const PredictiveProcess raw(sites, knots, out.sigma2, out.phi);
    VectorXd resid = y - x * out.beta;
    resid.array() -= out.intercept;
    out.knot_effects = WoodburySolver(raw.factor(), out.tau2).knot_effects(resid);
    return out;
  }

  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) throw InputError("SEM: logit link requires a 0/1 outcome");
  }
  if (y.maxCoeff() == y.minCoeff()) throw ModelError("SEM: outcome has a single class");
  const LaplaceLogit laplace(a, y, cfg.ridge);
  Box box{VectorXd(2), VectorXd(2)};
  box.lo << -kLogVarBound, log_phi_lo;
  box.hi << kLogVarBound, log_phi_hi;
  VectorXd warm;
  auto objective = [&](const VectorXd& t) {
    const VectorXd c = box.project(t);
    try {
      const PredictiveProcess pp(sites, knots, std::exp(c(0)), std::exp(c(1)));
      const auto mode = laplace.fit(pp.factor(), warm);
      warm = mode.theta;
      return -mode.log_marginal + 1e3 * box.excess(t);
    } catch (const ModelError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  VectorXd start(2);
  start << 0.0, 0.5 * (log_phi_lo + log_phi_hi);
  for (int k = 0; k < cfg.restarts; ++k) {
    Rng rng(derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(k)));
    VectorXd s0 = start;
    for (Index j = 0; j < 2; ++j) s0(j) += 0.5 * rng.normal();
    warm.resize(0);
    runs.push_back(nelder_mead(objective, box.project(s0), 1.0, cfg.max_evals, cfg.tol));
  }
  const NelderMeadResult* best = nullptr;
  for (const auto& r : runs) {
    if (r.converged && std::isfinite(r.value) && (!best || r.value < best->value)) best = &r;
  }
  if (!best) throw ModelError("SEM: optimizer did not converge" + restart_trace(runs));
  const VectorXd c = box.project(best->x);
  out.sigma2 = std::exp(c(0));
  out.phi = std::exp(c(1));
  out.tau2 = cfg.logit_tau2;
  const PredictiveProcess pp(sites, knots, out.sigma2, out.phi);
  const auto mode = laplace.fit(pp.factor(), VectorXd());
  const Index p = a.cols();
  const VectorXd beta_s = mode.theta.segment(1, p - 1);
  out.beta = beta_s.cwiseQuotient(xs.sd);
  out.intercept = mode.theta(0) - out.beta.dot(xs.mean);
  out.knot_effects = mode.theta.tail(static_cast<Index>(knots.size()));
  out.log_likelihood = mode.log_marginal;
  for (const auto& r : runs) out.evaluations += r.evaluations;
  return out;
}

VectorXd predict_sem_latent(const SemParams& params, const MatrixXd& x,
                            std::span<const geo::Point3> sites_in) {
  if (x.rows() != static_cast<Index>(sites_in.size())) {
    throw InputError("SEM predict: design rows and sites differ in length");
  }
  if (x.cols() != params.beta.size()) throw InputError("SEM predict: design width does not match model");
  const auto sites = prepare_sites(sites_in, params.planar);
  VectorXd mu = x * params.beta;
  mu.array() += params.intercept;
  if (!sites.empty()) {
    const PredictiveProcess pp(sites, params.knots, params.sigma2, params.phi);
    mu += pp.factor() * params.knot_effects;
  }
  return mu;
}

VectorXd predict_sem(const SemParams& params, const MatrixXd& x, std::span<const geo::Point3> sites) {
  VectorXd mu = predict_sem_latent(params, x, sites);
  if (params.link == Link::Logit) mu = mu.unaryExpr([](double e) { return logistic(e); });
  return mu;
}

}  // namespace urban3d::models
