#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "urban3d/city.hpp"
#include "urban3d/geometry.hpp"

namespace fixtures {

using urban3d::geo::Point3;
using urban3d::geo::Polygon3;
using urban3d::geo::SurfaceId;

inline Polygon3 poly(std::vector<Point3> v, std::uint32_t id = 1) {
  return Polygon3{std::move(v), SurfaceId{id}};
}

// Axis-aligned flat-roofed box; surface ids start at first_id (roof first).
inline urban3d::Building box_building(std::uint32_t building_id, double x0, double y0, double x1,
                                      double y1, double z0, double z1, std::uint32_t first_id) {
  urban3d::Building b;
  b.id = building_id;
  b.function = "housing";
  b.dwellings.push_back({80.0, 3, std::nullopt});
  std::uint32_t id = first_id;
  b.roofs.push_back(poly({{x0, y0, z1}, {x1, y0, z1}, {x1, y1, z1}, {x0, y1, z1}}, id++));
  b.walls.push_back(poly({{x0, y0, z0}, {x0, y1, z0}, {x1, y1, z0}, {x1, y0, z0}}, id++));
  b.walls.push_back(poly({{x0, y0, z0}, {x1, y0, z0}, {x1, y0, z1}, {x0, y0, z1}}, id++));
  b.walls.push_back(poly({{x1, y0, z0}, {x1, y1, z0}, {x1, y1, z1}, {x1, y0, z1}}, id++));
  b.walls.push_back(poly({{x1, y1, z0}, {x0, y1, z0}, {x0, y1, z1}, {x1, y1, z1}}, id++));
  b.walls.push_back(poly({{x0, y1, z0}, {x0, y0, z0}, {x0, y0, z1}, {x0, y1, z1}}, id++));
  return b;
}

inline urban3d::District square_district(std::string name, double x0, double y0, double x1,
                                         double y1) {
  return {std::move(name), "A", "residential", {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
}

}  // namespace fixtures
