#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "urban3d/city.hpp"
#include "urban3d/solar.hpp"

namespace urban3d::solar {

enum class CellState : std::uint8_t { Void, Shaded, Lit };

/// Rectangular xy window rasterized by the shadow map.
struct RasterExtent {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
};

/// Cell (ix, iy) covers [x0 + ix*res, x0 + (ix+1)*res) x [y0 + iy*res, ...);
/// row iy = 0 is the southern edge.
struct ShadowRaster {
  double x0 = 0.0;
  double y0 = 0.0;
  double res = 1.0;
  std::size_t nx = 0;
  std::size_t ny = 0;
  Timestamp time;
  SunPosition sun;
  std::vector<CellState> cells;

  CellState at(std::size_t ix, std::size_t iy) const { return cells[iy * nx + ix]; }
  geo::Vec2 cell_center(std::size_t ix, std::size_t iy) const {
    return {x0 + (static_cast<double>(ix) + 0.5) * res, y0 + (static_cast<double>(iy) + 0.5) * res};
  }
  std::size_t count(CellState s) const;
};

/// Terrain grid if present, else the building bounding box grown by 20 m,
/// else a 100 m square about the origin.
RasterExtent default_extent(const CityModel& city);

/// Where a vertical probe through (x, y) first meets the scene. Cells with
/// no surface fall on the implicit ground plane z = 0 when the city has no
/// terrain, and are void otherwise.
struct CellSurface {
  geo::Point3 point;
  geo::Vec3 normal;  // facing the sky
};
std::optional<CellSurface> probe_surface(const ShadingScene& scene, bool has_terrain, double x,
                                         double y);

/// Per-cell beam-shading verdict at the sun position of `time`. Throws
/// InputError when the sun is below the horizon.
ShadowRaster shadow_map(const CityModel& city, Timestamp time, double lat_deg, double lon_deg,
                        double grid_res_m);
ShadowRaster shadow_map(const CityModel& city, const ShadingScene& scene, Timestamp time,
                        double lat_deg, double lon_deg, double grid_res_m,
                        const RasterExtent& extent);

/// Binary PGM (P5), north up: lit 255, shaded 96, void 0.
void write_pgm(std::ostream& os, const ShadowRaster& raster);
/// One polygon per lit or shaded cell plus legend and timestamp.
void write_svg(std::ostream& os, const ShadowRaster& raster);

}  // namespace urban3d::solar
