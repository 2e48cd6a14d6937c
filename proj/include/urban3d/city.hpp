#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "urban3d/geometry.hpp"

namespace urban3d {

/// Geodetic anchor of the local ENU frame.
struct GeoOrigin {
  double lat_deg = 52.52;
  double lon_deg = 13.405;
};

struct LatLon {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
};

/// Local tangent-plane conversion (equirectangular about the origin).
LatLon to_geodetic(const GeoOrigin& origin, geo::Vec2 local);
geo::Vec2 to_local(const GeoOrigin& origin, LatLon ll);

/// Regular-grid heightfield; heights are row-major with ny rows of nx values,
/// row 0 at y = y0.
struct Terrain {
  double x0 = 0.0;
  double y0 = 0.0;
  double spacing = 1.0;
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<double> heights;

  bool empty() const { return nx < 2 || ny < 2; }
  double height(std::size_t ix, std::size_t iy) const { return heights[iy * nx + ix]; }
  /// Bilinear interpolation, clamped to the grid.
  double height_at(double x, double y) const;
  /// Two counter-clockwise triangles per cell, owned by kTerrainSurface.
  geo::TriangleMesh mesh() const;
};

void validate_terrain(const Terrain& terrain);

struct Dwelling {
  double size_m2 = 0.0;
  int rooms = 1;
  std::optional<double> rent;  // monthly, outcome label
};

struct Building {
  std::uint32_t id = 0;
  std::string function;
  std::vector<Dwelling> dwellings;
  std::vector<geo::Polygon3> roofs;
  std::vector<geo::Polygon3> walls;  // facades and floor

  geo::TriangleMesh mesh() const;
  /// Footprint polygon in the xy plane, counter-clockwise (from the floor).
  std::vector<geo::Vec2> footprint() const;
  geo::Vec2 footprint_centroid() const;
  double footprint_area() const;
};

struct District {
  std::string name;
  std::string municipality;
  std::string neighborhood;
  std::vector<geo::Vec2> polygon;
};

/// Terrain, buildings and districts in a local metric frame.
struct CityModel {
  GeoOrigin origin;
  Terrain terrain;
  std::vector<Building> buildings;
  std::vector<District> districts;

  /// Index of the district whose polygon contains `p`.
  std::optional<std::size_t> district_of(geo::Vec2 p) const;
  /// Merged mesh of terrain and every building surface.
  geo::TriangleMesh scene_mesh() const;
  const geo::Polygon3* find_roof(geo::SurfaceId id) const;
};

/// Checks polygon invariants, unique surface ids, and watertight buildings.
void validate_city(const CityModel& city);

}  // namespace urban3d
