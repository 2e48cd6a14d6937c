#include <cmath>

#include "doctest.h"
#include "sem_sim.hpp"
#include "urban3d/error.hpp"
#include "urban3d/sem.hpp"

using namespace urban3d;
using namespace urban3d::models;

TEST_SUITE("sem") {
  TEST_CASE("nelder-mead finds a quadratic minimum") {
    const auto f = [](const Eigen::VectorXd& v) {
      return (v(0) - 1.0) * (v(0) - 1.0) + 4.0 * (v(1) + 2.0) * (v(1) + 2.0);
    };
    const auto r = nelder_mead(f, Eigen::Vector2d(0, 0), 0.5, 2000, 1e-8);
    CHECK(r.converged);
    CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.x(1) == doctest::Approx(-2.0).epsilon(1e-6));
    const auto capped = nelder_mead(f, Eigen::Vector2d(0, 0), 0.5, 10, 1e-12);
    CHECK_FALSE(capped.converged);
  }

  TEST_CASE("parameters are recovered from simulated data") {
    int within = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto d = fixtures::simulate_sem(seed, 400, 1.0, 0.02, 0.1);
      SemConfig cfg;
      cfg.n_knots = 40;
      cfg.seed = seed;
      const SemParams p = fit_sem(d.x, d.y, d.sites, cfg);
      within += p.phi >= 0.01 && p.phi <= 0.04 && p.sigma2 >= 0.5 && p.sigma2 <= 2.0;
      CHECK(p.beta(0) == doctest::Approx(1.0).epsilon(0.1));
      CHECK(p.beta(1) == doctest::Approx(-0.5).epsilon(0.1));
    }
    CHECK(within >= 2);
  }

  TEST_CASE("pure nugget data has a small spatial share") {
    const auto d = fixtures::simulate_sem(11, 300, 1e-8, 0.02, 1.0);
    SemConfig cfg;
    cfg.n_knots = 30;
    const SemParams p = fit_sem(d.x, d.y, d.sites, cfg);
    CHECK(p.sigma2 / (p.sigma2 + p.tau2) < 0.2);
  }

  TEST_CASE("profile likelihood with knots at every site is the dense likelihood") {
    const auto d = fixtures::simulate_sem(4, 200, 1.0, 0.02, 0.1);
    const double pp = sem_profile_log_likelihood(d.x, d.y, d.sites, d.sites, 1.0, 0.02, 0.1);
    // Profiled beta by dense GLS, then the dense density of the residual.
    Eigen::MatrixXd a(200, 3);
    a.col(0).setOnes();
    a.rightCols(2) = d.x;
    Eigen::MatrixXd k = cov_matrix(d.sites, d.sites, 1.0, 0.02);
    k.diagonal().array() += 0.1;
    const auto llt = k.llt();
    const Eigen::MatrixXd ka = llt.solve(a);
    const Eigen::VectorXd beta = (a.transpose() * ka).ldlt().solve(ka.transpose() * d.y);
    const double dense = dense_log_likelihood(d.y - a * beta, d.sites, 1.0, 0.02, 0.1);
    CHECK(std::abs(pp - dense) < 1e-6);
  }

  TEST_CASE("prediction far from the data reverts to the fixed effects") {
    const auto d = fixtures::simulate_sem(5, 200, 1.0, 0.02, 0.1);
    SemConfig cfg;
    cfg.n_knots = 20;
    const SemParams p = fit_sem(d.x, d.y, d.sites, cfg);
    // phi * distance > 20 for every knot.
    const double far = 25.0 / p.phi + 1000.0;
    std::vector<geo::Point3> sites = {{far, far, 0.0}, {-far, 0.0, 0.0}};
    Eigen::MatrixXd x(2, 2);
    x << 0.3, -1.0, 2.0, 0.5;
    const Eigen::VectorXd got = predict_sem(p, x, sites);
    const Eigen::VectorXd fixed = (x * p.beta).array() + p.intercept;
    CHECK((got - fixed).cwiseAbs().maxCoeff() < 1e-6);
  }

  TEST_CASE("with a tiny nugget and knots at sites the training residual is reproduced") {
    const auto d = fixtures::simulate_sem(6, 80, 1.0, 0.02, 0.1);
    SemParams p;
    p.intercept = 2.0;
    p.beta = Eigen::Vector2d(1.0, -0.5);
    p.sigma2 = 1.0;
    p.phi = 0.02;
    p.tau2 = 1e-9;
    p.knots = d.sites;
    const PredictiveProcess pp(d.sites, d.sites, p.sigma2, p.phi);
    const Eigen::VectorXd resid = d.y - ((d.x * p.beta).array() + p.intercept).matrix();
    p.knot_effects = WoodburySolver(pp.factor(), p.tau2).knot_effects(resid);
    const Eigen::VectorXd got = predict_sem(p, d.x, d.sites);
    CHECK((got - d.y).cwiseAbs().maxCoeff() < 1e-4);
  }

  TEST_CASE("logit link produces probabilities") {
    auto d = fixtures::simulate_sem(7, 400, 1.0, 0.02, 0.1);
    Rng rng(8);
    for (int i = 0; i < d.y.size(); ++i) d.y(i) = rng.bernoulli(logistic(d.y(i) - 2.5)) ? 1.0 : 0.0;
    SemConfig cfg;
    cfg.link = Link::Logit;
    cfg.n_knots = 20;
    cfg.restarts = 1;
    const SemParams p = fit_sem(d.x, d.y, d.sites, cfg);
    const Eigen::VectorXd prob = predict_sem(p, d.x, d.sites);
    CHECK(prob.minCoeff() > 0.0);
    CHECK(prob.maxCoeff() < 1.0);
    CHECK(p.beta(0) > 0.0);
    CHECK(p.beta(1) < 0.0);
  }

  TEST_CASE("invalid input") {
    const auto d = fixtures::simulate_sem(9, 20, 1.0, 0.02, 0.1);
    CHECK_THROWS_AS(fit_sem(d.x, d.y, d.sites, {}), ModelError);
    SemConfig bad;
    bad.restarts = 0;
    CHECK_THROWS_AS(validate_config(bad), InputError);
    const auto e = fixtures::simulate_sem(10, 60, 1.0, 0.02, 0.1);
    SemConfig tight;
    tight.max_evals = 10;
    tight.n_knots = 10;
    CHECK_THROWS_AS(fit_sem(e.x, e.y, e.sites, tight), ModelError);
  }
}
