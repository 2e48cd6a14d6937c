#include <cmath>

#include "doctest.h"
#include "urban3d/ablation.hpp"
#include "urban3d/cityforge.hpp"
#include "urban3d/error.hpp"
#include "urban3d/random.hpp"

using namespace urban3d;
using namespace urban3d::eval;

namespace {

feat::FeatureTable rent_data(std::uint64_t seed, std::size_t buildings) {
  forge::CityConfig cfg;
  cfg.seed = seed;
  cfg.n_buildings = buildings;
  CityModel city = forge::gen_city(cfg);
  forge::label_rents(city, forge::default_rent_labels(seed));
  return feat::rent_table(city);
}

}  // namespace

TEST_SUITE("ablation") {
  TEST_CASE("relative improvement arithmetic") {
    CHECK(rmse_improvement(300.0, 270.0) == doctest::Approx(0.10));
    CHECK(*auc_improvement(0.70, 0.80) == doctest::Approx(0.50));
    CHECK_FALSE(auc_improvement(0.5, 0.8).has_value());
    // Table values of the PV SEM column: 2D 0.7091, 3D 0.8902.
    CHECK(*auc_improvement(0.7091, 0.8902) == doctest::Approx(0.8661).epsilon(1e-3));
  }

  TEST_CASE("rent ablation on a synthetic city") {
    const feat::FeatureTable table = rent_data(2, 120);
    AblationConfig cfg;
    cfg.seed = 2;
    cfg.rf_trees = 60;
    cfg.sem_restarts = 1;
    const AblationReport r = run_ablation(table, cfg);
    CHECK(r.metric == "RMSE");
    CHECK(r.models == default_models(feat::Showcase::Rent));
    CHECK(r.n_train + r.n_test == table.rows());

    // The intercept row is the train-mean predictor for every model.
    // The split follows the ablation seed.
    const Split s = split(table.outcome(), SplitConfig{0.2, cfg.seed, false});
    double mean = 0.0;
    for (auto i : s.train) mean += table.outcome()[i];
    mean /= static_cast<double>(s.train.size());
    std::vector<double> yt, pt;
    for (auto i : s.test) {
      yt.push_back(table.outcome()[i]);
      pt.push_back(mean);
    }
    for (std::size_t m = 0; m < r.models.size(); ++m) {
      CHECK(r.at(Tier::Intercept, m) == doctest::Approx(rmse(yt, pt)).epsilon(1e-12));
      CHECK(r.at(Tier::D3, m) < r.at(Tier::D1, m));
    }
    const auto imp = relative_improvement(r);
    REQUIRE(imp.size() == r.models.size());
    for (const auto& v : imp) CHECK(v.has_value());

    const std::string md = render_markdown(r);
    CHECK(md.find("| Intercept") != std::string::npos);
    CHECK(md.find("| 3D") != std::string::npos);
    CHECK(md.find("\xE2\x80\xA0") != std::string::npos);  // dagger
    const std::string csv = render_csv(r);
    CHECK(csv.rfind("tier,OLS,OLSNet,RF,SEM,best\n", 0) == 0);
    CHECK(csv.find("\nimprovement_3d,") != std::string::npos);

    cfg.threads = 4;
    CHECK(render_csv(run_ablation(table, cfg)) == csv);
  }

  TEST_CASE("classification ablation scores the intercept row at one half") {
    feat::FeatureTable pv(feat::Showcase::Pv, feat::registry(feat::Showcase::Pv));
    Rng rng(3);
    std::vector<double> row(12, 0.0);
    for (int i = 0; i < 400; ++i) {
      const double x = rng.normal();
      row[pv.index("pv_potential")] = 800 + 100 * x;
      row[pv.index("latitude")] = 52.5 + 0.01 * rng.uniform();
      row[pv.index("longitude")] = 13.4 + 0.01 * rng.uniform();
      row[pv.index("roof_surface")] = rng.uniform(20, 120);
      row[pv.index("roof_inclination")] = rng.uniform(0, 45);
      row[pv.index("roof_orientation")] = rng.uniform(0, 360);
      row[pv.index("building_function")] = static_cast<double>(rng.uniform_index(6));
      row[pv.index("pv_system")] = rng.bernoulli(models::logistic(-2.0 + 2.0 * x)) ? 1.0 : 0.0;
      pv.add_row("s" + std::to_string(i), row);
    }
    AblationConfig cfg;
    cfg.models = {"Logit", "RF"};
    cfg.rf_trees = 50;
    const AblationReport r = run_ablation(pv, cfg);
    CHECK(r.metric == "AUC");
    CHECK(r.at(Tier::Intercept, 0) == 0.5);
    CHECK(r.at(Tier::Intercept, 1) == 0.5);
    CHECK(r.at(Tier::D3, 0) > 0.7);
    CHECK(r.lower_is_better() == false);

    cfg.models = {"Logit", "Nope"};
    CHECK_THROWS_AS(run_ablation(pv, cfg), InputError);
  }
}
