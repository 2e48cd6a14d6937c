#include "doctest.h"
#include "urban3d/error.hpp"
#include "urban3d/forest.hpp"
#include "urban3d/random.hpp"

using namespace urban3d;
using namespace urban3d::models;

TEST_SUITE("forest") {
  TEST_CASE("xor is learned by axis-aligned splits") {
    Rng rng(1);
    const int n = 400;
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = rng.uniform(-1, 1);
      x(i, 1) = rng.uniform(-1, 1);
      y(i) = (x(i, 0) > 0) != (x(i, 1) > 0) ? 1.0 : 0.0;
    }
    ForestConfig cfg;
    cfg.n_trees = 100;
    cfg.min_leaf = 1;
    const RandomForest f = fit_random_forest(x, y, ForestTask::Classification, cfg);
    const Eigen::VectorXd p = f.predict(x);
    int correct = 0;
    for (int i = 0; i < n; ++i) correct += (p(i) > 0.5) == (y(i) == 1.0);
    CHECK(correct >= 0.95 * n);
  }

  TEST_CASE("a single tree with one leaf predicts the mean") {
    Rng rng(2);
    Eigen::MatrixXd x(50, 3);
    Eigen::VectorXd y(50);
    for (int i = 0; i < 50; ++i) {
      for (int j = 0; j < 3; ++j) x(i, j) = rng.normal();
      y(i) = rng.normal(10, 2);
    }
    ForestConfig cfg;
    cfg.n_trees = 1;
    cfg.min_leaf = 50;
    cfg.bootstrap = false;
    const RandomForest f = fit_random_forest(x, y, ForestTask::Regression, cfg);
    const Eigen::VectorXd p = f.predict(x);
    for (int i = 0; i < 50; ++i) CHECK(p(i) == doctest::Approx(y.mean()));
  }

  TEST_CASE("seeded forests are identical across thread counts") {
    Rng rng(3);
    Eigen::MatrixXd x(200, 4);
    Eigen::VectorXd y(200);
    for (int i = 0; i < 200; ++i) {
      for (int j = 0; j < 4; ++j) x(i, j) = rng.normal();
      y(i) = x(i, 0) * x(i, 1) + rng.normal(0, 0.1);
    }
    ForestConfig cfg;
    cfg.n_trees = 40;
    cfg.seed = 9;
    const RandomForest a = fit_random_forest(x, y, ForestTask::Regression, cfg);
    cfg.threads = 4;
    const RandomForest b = fit_random_forest(x, y, ForestTask::Regression, cfg);
    CHECK(a.predict(x) == b.predict(x));
    REQUIRE(a.trees().size() == b.trees().size());
    for (std::size_t t = 0; t < a.trees().size(); ++t) {
      REQUIRE(a.trees()[t].size() == b.trees()[t].size());
      for (std::size_t k = 0; k < a.trees()[t].size(); ++k) {
        CHECK(a.trees()[t][k].threshold == b.trees()[t][k].threshold);
        CHECK(a.trees()[t][k].feature == b.trees()[t][k].feature);
      }
    }
    cfg.seed = 10;
    CHECK(fit_random_forest(x, y, ForestTask::Regression, cfg).predict(x) != a.predict(x));
  }

  TEST_CASE("invalid inputs") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(20, 2);
    const Eigen::VectorXd constant = Eigen::VectorXd::Constant(20, 3.0);
    CHECK_THROWS_AS(fit_random_forest(x, constant, ForestTask::Regression, {}), ModelError);
    Eigen::VectorXd labels = Eigen::VectorXd::Zero(20);
    labels(3) = 2.0;
    CHECK_THROWS_AS(fit_random_forest(x, labels, ForestTask::Classification, {}), InputError);
    ForestConfig cfg;
    cfg.mtry = 5;
    CHECK_THROWS_AS(validate_config(cfg, 2), InputError);
    CHECK(resolve_mtry({}, ForestTask::Classification, 11) == 4);
    CHECK(resolve_mtry({}, ForestTask::Regression, 11) == 4);
  }
}
