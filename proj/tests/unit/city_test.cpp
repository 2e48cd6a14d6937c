#include "doctest.h"
#include "fixtures.hpp"
#include "urban3d/city.hpp"
#include "urban3d/error.hpp"

using namespace urban3d;

TEST_SUITE("city") {
  TEST_CASE("local frame round trip") {
    const GeoOrigin origin{52.5, 13.4};
    const geo::Vec2 p{1234.5, -678.9};
    const geo::Vec2 back = to_local(origin, to_geodetic(origin, p));
    CHECK(back.x == doctest::Approx(p.x).epsilon(1e-9));
    CHECK(back.y == doctest::Approx(p.y).epsilon(1e-9));
    const LatLon o = to_geodetic(origin, {0, 0});
    CHECK(o.lat_deg == 52.5);
    CHECK(o.lon_deg == 13.4);
    // One kilometre north is roughly 0.009 degrees of latitude.
    CHECK(to_geodetic(origin, {0, 1000}).lat_deg - 52.5 == doctest::Approx(0.008993).epsilon(1e-3));
  }

  TEST_CASE("terrain interpolation") {
    Terrain t{0.0, 0.0, 10.0, 2, 2, {0.0, 10.0, 20.0, 30.0}};
    validate_terrain(t);
    CHECK(t.height_at(0, 0) == 0.0);
    CHECK(t.height_at(10, 10) == 30.0);
    CHECK(t.height_at(5, 5) == doctest::Approx(15.0));
    CHECK(t.height_at(-100, 0) == 0.0);
    CHECK(t.mesh().size() == 2);

    Terrain bad = t;
    bad.heights.pop_back();
    CHECK_THROWS_AS(validate_terrain(bad), InputError);
  }

  TEST_CASE("building footprint and city validation") {
    CityModel city;
    city.buildings.push_back(fixtures::box_building(1, 0, 0, 10, 8, 0, 6, 1));
    city.buildings.push_back(fixtures::box_building(2, 20, 0, 30, 8, 0, 6, 7));
    city.districts.push_back(fixtures::square_district("D01", -50, -50, 15, 50));
    city.districts.push_back(fixtures::square_district("D02", 15, -50, 50, 50));
    validate_city(city);

    const auto& b = city.buildings[0];
    CHECK(b.footprint().size() == 4);
    CHECK(b.footprint_area() == doctest::Approx(80.0));
    CHECK(b.footprint_centroid().x == doctest::Approx(5.0));
    CHECK(b.footprint_centroid().y == doctest::Approx(4.0));
    CHECK(city.district_of({5, 4}) == 0u);
    CHECK(city.district_of({25, 4}) == 1u);
    CHECK_FALSE(city.district_of({500, 4}).has_value());

    REQUIRE(city.find_roof(geo::SurfaceId{7}) != nullptr);
    CHECK(city.find_roof(geo::SurfaceId{2}) == nullptr);
    CHECK(city.scene_mesh().size() == 24);

    CityModel dup = city;
    dup.buildings[1] = fixtures::box_building(2, 20, 0, 30, 8, 0, 6, 3);
    CHECK_THROWS_AS(validate_city(dup), InputError);

    CityModel open = city;
    open.buildings[0].walls.pop_back();
    CHECK_THROWS_AS(validate_city(open), InputError);
  }
}
