#include "urban3d/linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "urban3d/error.hpp"
#include "urban3d/numfmt.hpp"
#include "urban3d/random.hpp"

namespace urban3d::models {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Standardizer Standardizer::fit(const MatrixXd& x) {
  Standardizer s;
  const double n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean().transpose();
  s.sd.resize(x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean(j)).square().sum() / n;
    const double sd = std::sqrt(var);
    s.sd(j) = sd > 1e-12 * std::max(1.0, std::abs(s.mean(j))) ? sd : 1.0;
  }
  return s;
}

MatrixXd Standardizer::apply(const MatrixXd& x) const {
  return (x.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
}

VectorXd LinearModel::linear_predictor(const MatrixXd& x) const {
  if (x.cols() != coefficients.size()) throw InputError("design width does not match model");
  VectorXd eta = x * coefficients;
  eta.array() += intercept;
  return eta;
}

VectorXd LinearModel::predict(const MatrixXd& x) const {
  VectorXd eta = linear_predictor(x);
  if (link == Link::Logit) eta = eta.unaryExpr([](double e) { return logistic(e); });
  return eta;
}

namespace {

MatrixXd with_intercept(const MatrixXd& x) {
  MatrixXd a(x.rows(), x.cols() + 1);
  a.col(0).setOnes();
  a.rightCols(x.cols()) = x;
  return a;
}

std::string column_name(const std::vector<std::string>& names, Index j) {
  if (j == 0) return "(intercept)";
  const auto k = static_cast<std::size_t>(j - 1);
  return k < names.size() ? names[k] : "x" + std::to_string(k);
}

// Converts a standardized solution theta = (intercept, beta) to raw scale.
void set_from_standardized(LinearModel& m, const VectorXd& theta) {
  const auto p = theta.size() - 1;
  m.std_intercept = theta(0);
  m.std_coefficients = theta.tail(p);
  m.coefficients = m.std_coefficients.cwiseQuotient(m.standardizer.sd);
  m.intercept = theta(0) - m.coefficients.dot(m.standardizer.mean);
}

double soft_threshold(double z, double g) {
  if (z > g) return z - g;
  if (z < -g) return z + g;
  return 0.0;
}

struct CdResult {
  int sweeps = 0;
  double last_delta = 0.0;
};

// Coordinate descent on 0.5 theta'H theta - c'theta + l1*|beta|_1 + l2/2*|beta|^2
// where theta(0) is an unpenalized intercept.
CdResult cd_solve(const MatrixXd& h, const VectorXd& c, double l1, double l2, VectorXd& theta,
                  double tol, int max_sweeps) {
  VectorXd g = c - h * theta;
  CdResult res;
  const Index p = theta.size();
  while (res.sweeps < max_sweeps) {
    ++res.sweeps;
    double max_delta = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double hjj = h(j, j);
      if (hjj <= 1e-14) {
        theta(j) = 0.0;
        continue;
      }
      const double old = theta(j);
      const double z = g(j) + hjj * old;
      const double next = j == 0 ? z / hjj : soft_threshold(z, l1) / (hjj + l2);
      const double delta = next - old;
      if (delta != 0.0) {
        theta(j) = next;
        g.noalias() -= h.col(j) * delta;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    res.last_delta = max_delta;
    if (max_delta < tol) return res;
  }
  return res;
}

double mean_deviance(const VectorXd& y, const VectorXd& eta) {
  double d = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    // log(1 + exp(eta)) - y*eta, computed stably
    const double e = eta(i);
    const double softplus = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    d += softplus - y(i) * e;
  }
  return 2.0 * d / static_cast<double>(y.size());
}

void check_binary(const VectorXd& y) {
  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) throw InputError("logit link requires a 0/1 outcome");
  }
}

void check_shapes(const MatrixXd& x, const VectorXd& y) {
  if (x.rows() != y.size()) throw InputError("design rows do not match outcome length");
  if (y.size() == 0) throw InputError("empty data set");
  if (!x.allFinite() || !y.allFinite()) throw InputError("non-finite values in data set");
}

// Standardized design with its intercept column, reused across a lambda path.
class PathSolver {
 public:
  PathSolver(const MatrixXd& x, const VectorXd& y, Link link, const ElasticNetConfig& cfg)
      : y_(y), link_(link), cfg_(cfg) {
    check_shapes(x, y);
    if (link == Link::Logit) check_binary(y);
    std_ = Standardizer::fit(x);
    a_ = with_intercept(std_.apply(x));
    n_ = static_cast<double>(y.size());
    if (link == Link::Identity) {
      h_ = a_.transpose() * a_ / n_;
      c_ = a_.transpose() * y_ / n_;
    }
    if (a_.cols() > 1) {
      const VectorXd r = y_.array() - y_.mean();
      null_gradient_ = (a_.rightCols(a_.cols() - 1).transpose() * r).cwiseAbs().maxCoeff() / n_;
    }
  }

  const Standardizer& standardizer() const { return std_; }

  VectorXd solve(double lambda, const VectorXd* warm) const {
    const double l1 = lambda * cfg_.mix;
    const double l2 = lambda * (1.0 - cfg_.mix);
    // The null model already satisfies the optimality conditions here.
    if (l1 > 0.0 && l1 >= null_gradient_ * (1.0 - 1e-12)) return initial();
    VectorXd theta = warm ? *warm : initial();
    if (link_ == Link::Identity) {
      const auto res = cd_solve(h_, c_, l1, l2, theta, cfg_.tol, cfg_.max_iter);
      if (res.last_delta >= cfg_.tol) non_converged(lambda, res.last_delta);
      return theta;
    }
    int sweeps = 0;
    double objective = penalized_objective(theta, l1, l2);
    for (int outer = 0; outer < 100; ++outer) {
      const VectorXd eta = a_ * theta;
      VectorXd w(eta.size()), z(eta.size());
      for (Index i = 0; i < eta.size(); ++i) {
        const double p = logistic(eta(i));
        w(i) = std::max(p * (1.0 - p), 1e-5);
        z(i) = eta(i) + (y_(i) - p) / w(i);
      }
      const MatrixXd aw = a_.array().colwise() * w.array();
      const MatrixXd h = aw.transpose() * a_ / n_;
      const VectorXd c = aw.transpose() * z / n_;
      VectorXd next = theta;
      const auto res = cd_solve(h, c, l1, l2, next, cfg_.tol * 0.1, cfg_.max_iter - sweeps);
      sweeps += res.sweeps;
      if (sweeps >= cfg_.max_iter) non_converged(lambda, res.last_delta);
      double next_obj = penalized_objective(next, l1, l2);
      for (int halve = 0; halve < 30 && next_obj > objective + 1e-14; ++halve) {
        next = 0.5 * (next + theta);
        next_obj = penalized_objective(next, l1, l2);
      }
      const double delta = (next - theta).cwiseAbs().maxCoeff();
      theta = next;
      objective = next_obj;
      if (delta < cfg_.tol) return theta;
    }
    non_converged(lambda, std::numeric_limits<double>::quiet_NaN());
    return theta;
  }

  LinearModel model(const VectorXd& theta, std::vector<std::string> names) const {
    LinearModel m;
    m.link = link_;
    m.names = std::move(names);
    m.standardizer = std_;
    set_from_standardized(m, theta);
    return m;
  }

 private:
  VectorXd initial() const {
    VectorXd theta = VectorXd::Zero(a_.cols());
    const double ybar = y_.mean();
    if (link_ == Link::Identity) {
      theta(0) = ybar;
    } else {
      const double p = std::clamp(ybar, 1e-6, 1.0 - 1e-6);
      theta(0) = std::log(p / (1.0 - p));
    }
    return theta;
  }

  double penalized_objective(const VectorXd& theta, double l1, double l2) const {
    const auto beta = theta.tail(theta.size() - 1);
    return 0.5 * mean_deviance(y_, a_ * theta) + l1 * beta.cwiseAbs().sum() +
           0.5 * l2 * beta.squaredNorm();
  }

  [[noreturn]] static void non_converged(double lambda, double delta) {
    throw ModelError("elastic net did not converge at lambda " + format_double(lambda) +
                     " (last coefficient change " + format_double(delta) + ")");
  }

  VectorXd y_;
  Link link_;
  ElasticNetConfig cfg_;
  Standardizer std_;
  MatrixXd a_;
  MatrixXd h_;
  VectorXd c_;
  double n_ = 0.0;
  double null_gradient_ = 0.0;
};

}  // namespace

LinearModel fit_ols(const MatrixXd& x, const VectorXd& y, std::vector<std::string> names) {
  check_shapes(x, y);
  if (y.size() <= x.cols()) {
    throw ModelError("OLS needs more observations (" + std::to_string(y.size()) +
                     ") than features (" + std::to_string(x.cols()) + ")");
  }
  const MatrixXd a = with_intercept(x);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < a.cols()) {
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (Index k = qr.rank(); k < a.cols(); ++k) {
      cols += (cols.empty() ? "" : ", ") + column_name(names, perm(k));
    }
    throw ModelError("OLS design is rank deficient; collinear column(s): " + cols);
  }
  const VectorXd theta = qr.solve(y);
  LinearModel m;
  m.link = Link::Identity;
  m.names = std::move(names);
  m.standardizer.mean = VectorXd::Zero(x.cols());
  m.standardizer.sd = VectorXd::Ones(x.cols());
  set_from_standardized(m, theta);
  return m;
}

LinearModel fit_logistic(const MatrixXd& x, const VectorXd& y, std::vector<std::string> names,
                         double ridge) {
  check_shapes(x, y);
  check_binary(y);
  LinearModel m;
  m.link = Link::Logit;
  m.names = std::move(names);
  m.standardizer = Standardizer::fit(x);
  const MatrixXd a = with_intercept(m.standardizer.apply(x));
  const double n = static_cast<double>(y.size());
  VectorXd pen = VectorXd::Constant(a.cols(), ridge);
  pen(0) = 0.0;
  auto objective = [&](const VectorXd& th) {
    return 0.5 * mean_deviance(y, a * th) + 0.5 * (pen.array() * th.array().square()).sum();
  };
  VectorXd theta = VectorXd::Zero(a.cols());
  const double ybar = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
  theta(0) = std::log(ybar / (1.0 - ybar));
  double obj = objective(theta);
  for (int iter = 0; iter < 200; ++iter) {
    const VectorXd eta = a * theta;
    VectorXd w(eta.size()), r(eta.size());
    for (Index i = 0; i < eta.size(); ++i) {
      const double p = logistic(eta(i));
      w(i) = p * (1.0 - p);
      r(i) = y(i) - p;
    }
    MatrixXd h = (a.array().colwise() * w.array()).matrix().transpose() * a / n;
    h.diagonal() += pen;
    h.diagonal().array() += 1e-12;
    const VectorXd grad = a.transpose() * r / n - pen.cwiseProduct(theta);
    VectorXd step = h.ldlt().solve(grad);
    VectorXd next = theta + step;
    double next_obj = objective(next);
    for (int halve = 0; halve < 40 && next_obj > obj; ++halve) {
      step *= 0.5;
      next = theta + step;
      next_obj = objective(next);
    }
    theta = next;
    obj = next_obj;
    if (step.cwiseAbs().maxCoeff() < 1e-10) break;
  }
  set_from_standardized(m, theta);
  return m;
}

void validate_config(const ElasticNetConfig& cfg) {
  if (cfg.lambda && !(*cfg.lambda >= 0.0)) throw InputError("elastic net: lambda must be >= 0");
  if (!(cfg.mix >= 0.0 && cfg.mix <= 1.0)) throw InputError("elastic net: mix must be in [0, 1]");
  if (!(cfg.tol > 0.0)) throw InputError("elastic net: tol must be positive");
  if (cfg.max_iter < 1) throw InputError("elastic net: max_iter must be >= 1");
  if (cfg.cv_folds < 2) throw InputError("elastic net: cv_folds must be >= 2");
  if (cfg.n_lambda < 2) throw InputError("elastic net: grid needs >= 2 points");
  if (!(cfg.lambda_ratio > 0.0 && cfg.lambda_ratio < 1.0)) {
    throw InputError("elastic net: lambda_ratio must be in (0, 1)");
  }
}

double lambda_max(const MatrixXd& x, const VectorXd& y, Link link, double mix) {
  check_shapes(x, y);
  if (x.cols() == 0) return 0.0;
  (void)link;  // the null-model gradient x'(y - mean y)/n is the same for both links
  const MatrixXd xs = Standardizer::fit(x).apply(x);
  const VectorXd r = y.array() - y.mean();
  const double g = (xs.transpose() * r).cwiseAbs().maxCoeff() / static_cast<double>(y.size());
  return g / std::max(mix, 1e-3);
}

std::vector<double> lambda_grid(double lmax, int n, double ratio) {
  std::vector<double> grid(static_cast<std::size_t>(n));
  const double top = lmax > 0.0 ? lmax : 1e-12;
  for (int k = 0; k < n; ++k) {
    grid[static_cast<std::size_t>(k)] = top * std::pow(ratio, static_cast<double>(k) / (n - 1));
  }
  return grid;
}

LinearModel fit_elastic_net_at(const MatrixXd& x, const VectorXd& y, Link link, double lambda,
                               const ElasticNetConfig& cfg, const VectorXd* warm) {
  validate_config(cfg);
  if (!(lambda >= 0.0)) throw InputError("elastic net: lambda must be >= 0");
  const PathSolver solver(x, y, link, cfg);
  return solver.model(solver.solve(lambda, warm), {});
}

ElasticNetFit fit_elastic_net(const MatrixXd& x, const VectorXd& y, Link link,
                              const ElasticNetConfig& cfg, std::vector<std::string> names) {
  validate_config(cfg);
  check_shapes(x, y);
  ElasticNetFit fit;
  const PathSolver full(x, y, link, cfg);
  if (cfg.lambda) {
    fit.lambda = *cfg.lambda;
    fit.model = full.model(full.solve(fit.lambda, nullptr), std::move(names));
    return fit;
  }
  fit.grid = lambda_grid(lambda_max(x, y, link, cfg.mix), cfg.n_lambda, cfg.lambda_ratio);
  const auto n = static_cast<std::size_t>(y.size());
  const auto folds = static_cast<std::size_t>(cfg.cv_folds);
  if (n < 2 * folds) throw ModelError("elastic net: too few observations for cross-validation");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(cfg.seed, 0xE1A5));
  rng.shuffle(order.begin(), order.end());
  std::vector<std::size_t> fold_of(n);
  for (std::size_t k = 0; k < n; ++k) fold_of[order[k]] = k % folds;

  fit.cv_loss.assign(fit.grid.size(), 0.0);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<Index> tr, te;
    for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? te : tr).push_back(static_cast<Index>(i));
    const MatrixXd xtr = x(tr, Eigen::all), xte = x(te, Eigen::all);
    const VectorXd ytr = y(tr), yte = y(te);
    if (link == Link::Logit && (ytr.maxCoeff() == ytr.minCoeff())) {
      throw ModelError("elastic net: a training fold has a single class");
    }
    const PathSolver solver(xtr, ytr, link, cfg);
    VectorXd theta;
    for (std::size_t k = 0; k < fit.grid.size(); ++k) {
      theta = solver.solve(fit.grid[k], k == 0 ? nullptr : &theta);
      const LinearModel m = solver.model(theta, {});
      const VectorXd eta = m.linear_predictor(xte);
      const double loss = link == Link::Identity ? (yte - eta).squaredNorm() / yte.size()
                                                 : mean_deviance(yte, eta);
      fit.cv_loss[k] += loss * static_cast<double>(te.size()) / static_cast<double>(n);
    }
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < fit.grid.size(); ++k) {
    if (fit.cv_loss[k] < fit.cv_loss[best]) best = k;
  }
  fit.lambda = fit.grid[best];
  VectorXd theta;
  for (std::size_t k = 0; k <= best; ++k) theta = full.solve(fit.grid[k], k == 0 ? nullptr : &theta);
  fit.model = full.model(theta, std::move(names));
  return fit;
}

double kkt_residual(const LinearModel& model, const MatrixXd& x, const VectorXd& y, double lambda,
                    double mix) {
  const MatrixXd xs = model.standardizer.apply(x);
  VectorXd eta = xs * model.std_coefficients;
  eta.array() += model.std_intercept;
  VectorXd r = y - eta;
  if (model.link == Link::Logit) r = y - eta.unaryExpr([](double e) { return logistic(e); });
  const double n = static_cast<double>(y.size());
  const VectorXd g = xs.transpose() * r / n;
  double worst = std::abs(r.mean());
  for (Index j = 0; j < g.size(); ++j) {
    const double b = model.std_coefficients(j);
    double v;
    if (b != 0.0) {
      v = std::abs(g(j) - lambda * (1.0 - mix) * b - lambda * mix * (b > 0 ? 1.0 : -1.0));
    } else {
      v = std::max(0.0, std::abs(g(j)) - lambda * mix);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace urban3d::models
