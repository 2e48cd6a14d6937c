#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "urban3d/cityforge.hpp"
#include "urban3d/error.hpp"
#include "urban3d/features.hpp"

using namespace urban3d;
using namespace urban3d::feat;

namespace {

std::vector<std::string> names_of(const std::vector<ColumnSpec>& specs) {
  std::vector<std::string> out;
  for (const auto& s : specs) out.push_back(s.name);
  return out;
}

std::vector<solar::SurfaceIrradiance> fake_irradiance(const CityModel& city) {
  std::vector<solar::SurfaceIrradiance> out;
  for (const auto& b : city.buildings) {
    for (const auto& r : b.roofs) {
      out.push_back({r.surface_id, 900.0, 700.0 + geo::to_underlying(r.surface_id) % 50, 0.1});
    }
  }
  return out;
}

CityModel small_city(std::uint64_t seed, std::size_t n) {
  forge::CityConfig cfg;
  cfg.seed = seed;
  cfg.n_buildings = n;
  return forge::gen_city(cfg);
}

}  // namespace

TEST_SUITE("features") {
  TEST_CASE("registries have the showcase columns") {
    const auto rent = registry(Showcase::Rent, {"D01"});
    CHECK(rent.size() == 8);
    CHECK(rent.back().name == "apartment_rent");
    CHECK(rent.back().outcome);
    const auto pv = registry(Showcase::Pv);
    CHECK(pv.size() == 12);
    CHECK(pv.back().name == "pv_system");

    CHECK(select_tier(Showcase::Rent, Dim::D1) == std::vector<std::string>{"number_of_rooms"});
    const auto all_pv = select_tier(Showcase::Pv, Dim::D3);
    CHECK(all_pv.size() == 11);
    auto expected = names_of(pv);
    expected.pop_back();
    CHECK(all_pv == expected);
    // Tiers are nested.
    for (auto s : {Showcase::Rent, Showcase::Pv}) {
      const auto d1 = select_tier(s, Dim::D1), d2 = select_tier(s, Dim::D2);
      for (const auto& c : d1) CHECK(std::find(d2.begin(), d2.end(), c) != d2.end());
    }
  }

  TEST_CASE("building features of a unit cube on raised terrain") {
    CityModel city;
    city.terrain = Terrain{-50.0, -50.0, 50.0, 3, 3, std::vector<double>(9, 10.0)};
    city.buildings.push_back(fixtures::box_building(1, 0, 0, 1, 1, 10, 11, 1));
    city.districts.push_back(fixtures::square_district("D01", -50, -50, 50, 50));
    const auto f = extract_building_features(city);
    REQUIRE(f.size() == 1);
    CHECK(f[0].elevation == doctest::Approx(10.0));
    CHECK(f[0].building_volume == doctest::Approx(1.0));
    CHECK(f[0].district == 0);
  }

  TEST_CASE("the centroid decides the district") {
    CityModel city;
    city.buildings.push_back(fixtures::box_building(1, -2, 0, 10, 4, 0, 5, 1));
    city.districts.push_back(fixtures::square_district("A", 0, -50, 50, 50));
    city.districts.push_back(fixtures::square_district("B", -50, -50, 0, 50));
    CHECK(extract_building_features(city)[0].district == 0);

    city.buildings.push_back(fixtures::box_building(7, 200, 0, 210, 4, 0, 5, 7));
    try {
      extract_building_features(city);
      FAIL("expected an error");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("7") != std::string::npos);
    }
  }

  TEST_CASE("flat-roofed generated buildings have prism volumes") {
    forge::CityConfig cfg;
    cfg.seed = 21;
    cfg.n_buildings = 50;
    cfg.roof_mix = {1.0, 0.0, 0.0};
    const CityModel city = forge::gen_city(cfg);
    const auto f = extract_building_features(city);
    REQUIRE(f.size() == 50);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto& b = city.buildings[i];
      const double height = b.roofs[0].vertices[0].z - b.walls[0].vertices[0].z;
      CHECK(f[i].building_volume == doctest::Approx(b.footprint_area() * height).epsilon(1e-9));
    }
  }

  TEST_CASE("roof type classifier") {
    CHECK(classify_roof_type(std::vector<geo::TiltAzimuth>{{0, 0}}) == RoofType::Flat);
    CHECK(classify_roof_type(std::vector<geo::TiltAzimuth>{{30, 90}, {31, 270}}) == RoofType::AFrame);
    CHECK(classify_roof_type(std::vector<geo::TiltAzimuth>{{35, 175}, {35, 5}}) == RoofType::AFrame);
    CHECK(classify_roof_type(std::vector<geo::TiltAzimuth>{{35, 90}, {35, 180}}) == RoofType::Other);
    CHECK(classify_roof_type(std::vector<geo::TiltAzimuth>{{30, 0}, {30, 90}, {30, 180}, {30, 270}}) ==
          RoofType::Other);
    CityModel city;
    city.buildings.push_back(fixtures::box_building(1, 0, 0, 5, 5, 0, 3, 1));
    CHECK(classify_roof_type(city.buildings[0]) == RoofType::Flat);
  }

  TEST_CASE("monotone transforms") {
    CHECK(monotone_orientation(180) == 0.0);
    CHECK(monotone_orientation(90) == 90.0);
    CHECK(monotone_orientation(270) == 90.0);
    CHECK(monotone_inclination(30) == 0.0);
    CHECK(monotone_inclination(45) == 15.0);
  }

  TEST_CASE("density classes") {
    // Three ten-building clusters at 200 m, 60 m and 5 m spacing.
    std::vector<geo::Vec2> c;
    for (int i = 0; i < 10; ++i) c.push_back({-10000.0 + i * 200.0, 0.0});
    for (int i = 0; i < 10; ++i) c.push_back({i * 60.0, 0.0});
    for (int i = 0; i < 10; ++i) c.push_back({10000.0 + i * 5.0, 0.0});
    const auto d = density_class(c, 250.0);
    for (int i = 0; i < 10; ++i) {
      CHECK(d.classes[i] == DensityClass::Low);
      CHECK(d.classes[10 + i] == DensityClass::Medium);
      CHECK(d.classes[20 + i] == DensityClass::High);
    }
    c.push_back({50000.0, 50000.0});
    CHECK(density_class(c, 250.0).classes.back() == DensityClass::Low);

    // Interior points of a uniform grid all have the same density.
    std::vector<geo::Vec2> grid;
    for (int i = 0; i < 30; ++i)
      for (int j = 0; j < 30; ++j) grid.push_back({i * 20.0, j * 20.0});
    const auto g = density_class(grid, 100.0);
    const double interior = g.per_km2[15 * 30 + 15];
    for (int i = 6; i < 24; ++i)
      for (int j = 6; j < 24; ++j) CHECK(g.per_km2[i * 30 + j] == interior);
  }

  TEST_CASE("rent and pv tables") {
    CityModel city = small_city(3, 40);
    forge::label_rents(city, forge::default_rent_labels(3));
    const FeatureTable rent = rent_table(city);
    rent.validate();
    std::size_t dwellings = 0;
    for (const auto& b : city.buildings) dwellings += b.dwellings.size();
    CHECK(rent.rows() == dwellings);
    CHECK(rent.cols() == 8);

    const auto irr = fake_irradiance(city);
    std::map<std::uint32_t, bool> adopted;
    for (const auto& r : irr) adopted[geo::to_underlying(r.surface_id)] = false;
    adopted.begin()->second = true;
    const FeatureTable pv = pv_table(city, irr, adopted);
    pv.validate();
    CHECK(pv.rows() == irr.size());
    CHECK(pv.cols() == 12);
    CHECK(pv.outcome()[0] == 1.0);

    auto missing = irr;
    missing.pop_back();
    CHECK_THROWS_AS(extract_roof_features(city, missing), InputError);

    const FeatureTable mono = monotone_transform(pv);
    for (std::size_t i = 0; i < pv.rows(); ++i) {
      CHECK(mono.column("roof_orientation")[i] ==
            monotone_orientation(pv.column("roof_orientation")[i]));
    }
  }

  TEST_CASE("design matrix expands categoricals") {
    FeatureTable t(Showcase::Pv, registry(Showcase::Pv));
    std::vector<double> row(12, 0.0);
    for (int i = 0; i < 6; ++i) {
      row[t.index("building_function")] = i;
      row[t.index("roof_surface")] = 10.0 * i;
      t.add_row("r" + std::to_string(i), row);
    }
    const std::vector<std::string> cols{"roof_surface", "building_function"};
    const Design full = design_matrix(t, cols, false);
    const Design dropped = design_matrix(t, cols, true);
    CHECK(full.x.cols() == 1 + 6);
    CHECK(dropped.x.cols() == 1 + 5);
    CHECK(dropped.names[1] == "building_function=outbuilding");
    CHECK(full.x(3, 1 + 3) == 1.0);
    CHECK(full.x.row(3).sum() == 30.0 + 1.0);
  }

  TEST_CASE("csv and schema round trip") {
    CityModel city = small_city(5, 20);
    forge::label_rents(city, forge::default_rent_labels(5));
    const FeatureTable t = rent_table(city);
    std::ostringstream csv, schema;
    write_csv(csv, t);
    write_schema(schema, t);
    std::istringstream schema_in(schema.str());
    auto [showcase, specs] = read_schema(schema_in, "schema");
    CHECK(showcase == Showcase::Rent);
    std::istringstream csv_in(csv.str());
    const FeatureTable back = read_csv(csv_in, "csv", showcase, specs);
    std::ostringstream again;
    write_csv(again, back);
    CHECK(again.str() == csv.str());

    std::istringstream bad("id,elevation\nx,1\n");
    CHECK_THROWS_AS(read_csv(bad, "bad.csv", showcase, specs), InputError);
  }
}
