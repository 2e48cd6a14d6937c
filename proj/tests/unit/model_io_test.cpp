#include <sstream>

#include "doctest.h"
#include "sem_sim.hpp"
#include "urban3d/error.hpp"
#include "urban3d/model_io.hpp"

using namespace urban3d;
using namespace urban3d::models;

namespace {

template <class M>
M round_trip(const M& m, std::string* text = nullptr) {
  std::ostringstream os;
  save_model(os, m, "seed=3 trees=5");
  std::istringstream is(os.str());
  std::string config;
  AnyModel any = load_model(is, "memory", &config);
  CHECK(config == "seed=3 trees=5");
  std::ostringstream again;
  const M back = std::get<M>(any);
  save_model(again, back, config);
  CHECK(again.str() == os.str());
  if (text) *text = os.str();
  return back;
}

}  // namespace

TEST_SUITE("model_io") {
  const auto d = fixtures::simulate_sem(1, 120, 1.0, 0.02, 0.1);

  TEST_CASE("linear model") {
    const LinearModel m = fit_ols(d.x, d.y, {"a", "b"});
    const LinearModel back = round_trip(m);
    CHECK(back.predict(d.x) == m.predict(d.x));
    CHECK(back.names == m.names);
  }

  TEST_CASE("random forest") {
    ForestConfig cfg;
    cfg.n_trees = 5;
    const RandomForest m = fit_random_forest(d.x, d.y, ForestTask::Regression, cfg);
    const RandomForest back = round_trip(m);
    CHECK(back.predict(d.x) == m.predict(d.x));
  }

  TEST_CASE("sem") {
    SemConfig cfg;
    cfg.n_knots = 12;
    cfg.restarts = 1;
    const SemParams m = fit_sem(d.x, d.y, d.sites, cfg, {"a", "b"});
    const SemParams back = round_trip(m);
    CHECK(predict_sem(back, d.x, d.sites) == predict_sem(m, d.x, d.sites));
  }

  TEST_CASE("malformed files name the line") {
    const LinearModel m = fit_ols(d.x, d.y, {"a", "b"});
    std::string text;
    round_trip(m, &text);
    const auto expect_line = [](const std::string& body, const std::string& needle) {
      std::istringstream is(body);
      try {
        load_model(is, "bad.model");
        FAIL("expected InputError");
      } catch (const InputError& e) {
        CHECK(std::string(e.what()).find(needle) != std::string::npos);
      }
    };
    expect_line("", "bad.model");
    expect_line("urban3d-model 9\n", "bad.model:1:");
    std::string truncated = text.substr(0, text.rfind("end"));
    expect_line(truncated, "bad.model");
    std::string corrupted = text;
    corrupted.replace(corrupted.find("kind linear"), 11, "kind gizmo!");
    expect_line(corrupted, "bad.model:2:");
  }
}
