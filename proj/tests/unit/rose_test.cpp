#include <cmath>
#include <set>

#include "doctest.h"
#include "urban3d/error.hpp"
#include "urban3d/random.hpp"
#include "urban3d/rose.hpp"

using namespace urban3d;
using namespace urban3d::models;

namespace {

void imbalanced(std::uint64_t seed, int n, int positives, Eigen::MatrixXd& x, Eigen::VectorXd& y) {
  Rng rng(seed);
  x.resize(n, 3);
  y.resize(n);
  for (int i = 0; i < n; ++i) {
    y(i) = i < positives ? 1.0 : 0.0;
    x(i, 0) = rng.normal(y(i) * 3.0, 1.0);
    x(i, 1) = rng.normal(5.0, 2.0);
    x(i, 2) = static_cast<double>(rng.uniform_index(4));
  }
}

}  // namespace

TEST_SUITE("rose") {
  TEST_CASE("balanced output of twice the input size") {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    imbalanced(1, 5000, 100, x, y);
    const RoseSample s = rose_sample(x, y, 7, {false, false, true});
    CHECK(s.x.rows() == 10000);
    CHECK(std::abs(s.y.mean() - 0.5) <= 0.02);
    // Categorical column keeps its original codes.
    for (int i = 0; i < s.x.rows(); ++i) {
      CHECK(s.x(i, 2) == std::round(s.x(i, 2)));
    }
  }

  TEST_CASE("class means are preserved") {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    imbalanced(2, 4000, 200, x, y);
    const RoseSample s = rose_sample(x, y, 3);
    for (double cls : {0.0, 1.0}) {
      double n_src = 0, n_out = 0;
      Eigen::RowVectorXd m_src = Eigen::RowVectorXd::Zero(3), m_out = Eigen::RowVectorXd::Zero(3);
      Eigen::RowVectorXd ss = Eigen::RowVectorXd::Zero(3);
      for (int i = 0; i < x.rows(); ++i)
        if (y(i) == cls) m_src += x.row(i), ++n_src;
      m_src /= n_src;
      for (int i = 0; i < x.rows(); ++i)
        if (y(i) == cls) ss += (x.row(i) - m_src).array().square().matrix();
      for (int i = 0; i < s.x.rows(); ++i)
        if (s.y(i) == cls) m_out += s.x.row(i), ++n_out;
      m_out /= n_out;
      for (int j = 0; j < 3; ++j) {
        const double sd = std::sqrt(ss(j) / n_src);
        CHECK(std::abs(m_out(j) - m_src(j)) <= 3.0 * sd / std::sqrt(n_src));
      }
    }
  }

  TEST_CASE("zero bandwidth resamples original rows") {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    imbalanced(3, 300, 10, x, y);
    std::set<std::vector<double>> rows;
    for (int i = 0; i < x.rows(); ++i) rows.insert({x(i, 0), x(i, 1), x(i, 2), y(i)});
    const RoseSample s = rose_sample(x, y, 5, {}, 0.0);
    for (int i = 0; i < s.x.rows(); ++i) {
      CHECK(rows.count({s.x(i, 0), s.x(i, 1), s.x(i, 2), s.y(i)}) == 1);
    }
  }

  TEST_CASE("bandwidth formula and errors") {
    Eigen::MatrixXd rows(4, 2);
    rows << 0, 1, 2, 1, 4, 1, 6, 1;
    const Eigen::VectorXd h = rose_bandwidth(rows);
    const double sd0 = std::sqrt(20.0 / 3.0);  // sample sd of 0, 2, 4, 6
    CHECK(h(0) == doctest::Approx(std::pow(4.0 / (4.0 * 4.0), 1.0 / 6.0) * sd0));
    CHECK(h(1) == 0.0);

    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    imbalanced(4, 100, 1, x, y);
    CHECK_THROWS_AS(rose_sample(x, y, 1), InputError);
  }
}
