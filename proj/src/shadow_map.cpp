#include "urban3d/shadow_map.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "urban3d/error.hpp"
#include "urban3d/numfmt.hpp"

namespace urban3d::solar {

std::size_t ShadowRaster::count(CellState s) const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), s));
}

RasterExtent default_extent(const CityModel& city) {
  const auto& t = city.terrain;
  if (!t.empty()) {
    return {t.x0, t.y0, t.x0 + t.spacing * static_cast<double>(t.nx - 1),
            t.y0 + t.spacing * static_cast<double>(t.ny - 1)};
  }
  if (city.buildings.empty()) return {-50.0, -50.0, 50.0, 50.0};
  geo::Aabb box;
  for (const auto& b : city.buildings) {
    for (const auto& w : b.walls) {
      for (const auto& v : w.vertices) box.extend(v);
    }
  }
  constexpr double kMargin = 20.0;
  return {box.lo.x - kMargin, box.lo.y - kMargin, box.hi.x + kMargin, box.hi.y + kMargin};
}

std::optional<CellSurface> probe_surface(const ShadingScene& scene, bool has_terrain, double x,
                                         double y) {
  if (!scene.empty()) {
    const auto& b = scene.bounds();
    geo::Ray down;
    down.origin = {x, y, b.hi.z + 1.0};
    down.direction = {0.0, 0.0, -1.0};
    down.t_min = 0.0;
    down.t_max = b.hi.z - b.lo.z + 2.0;
    if (const auto hit = scene.bvh().first_hit(down, geo::kNoSurface)) {
      geo::Vec3 n = hit->geometric_normal;
      if (n.z < 0.0) n = -n;
      return CellSurface{down.origin + down.direction * hit->t, n};
    }
  }
  if (has_terrain) return std::nullopt;
  return CellSurface{{x, y, 0.0}, {0.0, 0.0, 1.0}};
}

ShadowRaster shadow_map(const CityModel& city, Timestamp time, double lat_deg, double lon_deg,
                        double grid_res_m) {
  const ShadingScene scene(city.scene_mesh());
  return shadow_map(city, scene, time, lat_deg, lon_deg, grid_res_m, default_extent(city));
}

ShadowRaster shadow_map(const CityModel& city, const ShadingScene& scene, Timestamp time,
                        double lat_deg, double lon_deg, double grid_res_m,
                        const RasterExtent& extent) {
  if (!(grid_res_m > 0.0) || !std::isfinite(grid_res_m)) {
    throw InputError("shadow map: resolution must be positive");
  }
  if (!(extent.x1 > extent.x0 && extent.y1 > extent.y0)) throw InputError("shadow map: empty extent");
  const SunPosition sun = sun_position(lat_deg, lon_deg, time);
  if (sun.elevation_deg <= 0.0) {
    throw InputError("shadow map: sun is below the horizon at " + format_rfc3339(time) +
                     " (elevation " + format_double(sun.elevation_deg) + " deg)");
  }
  ShadowRaster r;
  r.x0 = extent.x0;
  r.y0 = extent.y0;
  r.res = grid_res_m;
  r.nx = static_cast<std::size_t>(std::ceil((extent.x1 - extent.x0) / grid_res_m - 1e-9));
  r.ny = static_cast<std::size_t>(std::ceil((extent.y1 - extent.y0) / grid_res_m - 1e-9));
  if (r.nx * r.ny > 50'000'000) throw InputError("shadow map: raster too large");
  r.time = time;
  r.sun = sun;
  r.cells.assign(r.nx * r.ny, CellState::Void);
  const bool has_terrain = !city.terrain.empty();
  for (std::size_t iy = 0; iy < r.ny; ++iy) {
    for (std::size_t ix = 0; ix < r.nx; ++ix) {
      const auto c = r.cell_center(ix, iy);
      const auto surf = probe_surface(scene, has_terrain, c.x, c.y);
      if (!surf) continue;
      const bool shaded = is_beam_shaded(scene, surf->point, surf->normal, sun, geo::kNoSurface);
      r.cells[iy * r.nx + ix] = shaded ? CellState::Shaded : CellState::Lit;
    }
  }
  return r;
}

namespace {

std::uint8_t gray(CellState s) {
  switch (s) {
    case CellState::Lit:
      return 255;
    case CellState::Shaded:
      return 96;
    case CellState::Void:
      break;
  }
  return 0;
}

}  // namespace

void write_pgm(std::ostream& os, const ShadowRaster& r) {
  os << "P5\n" << r.nx << ' ' << r.ny << "\n255\n";
  std::vector<char> row(r.nx);
  for (std::size_t k = 0; k < r.ny; ++k) {
    const std::size_t iy = r.ny - 1 - k;
    for (std::size_t ix = 0; ix < r.nx; ++ix) row[ix] = static_cast<char>(gray(r.at(ix, iy)));
    os.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

void write_svg(std::ostream& os, const ShadowRaster& r) {
  const double w = static_cast<double>(r.nx) * r.res;
  const double h = static_cast<double>(r.ny) * r.res;
  const double legend_h = std::max(12.0, 0.08 * h);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << format_double(w) << ' '
     << format_double(h + legend_h) << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << format_double(w) << "\" height=\"" << format_double(h)
     << "\" fill=\"#000000\"/>\n";
  for (std::size_t iy = 0; iy < r.ny; ++iy) {
    for (std::size_t ix = 0; ix < r.nx; ++ix) {
      const CellState s = r.at(ix, iy);
      if (s == CellState::Void) continue;
      const double x = static_cast<double>(ix) * r.res;
      const double y = h - static_cast<double>(iy + 1) * r.res;
      const std::string x0 = format_double(x), x1 = format_double(x + r.res);
      const std::string y0 = format_double(y), y1 = format_double(y + r.res);
      os << "<polygon class=\"" << (s == CellState::Lit ? "lit" : "shaded") << "\" points=\"" << x0
         << ',' << y0 << ' ' << x1 << ',' << y0 << ' ' << x1 << ',' << y1 << ' ' << x0 << ',' << y1
         << "\" fill=\"" << (s == CellState::Lit ? "#ffffff" : "#606060") << "\"/>\n";
    }
  }
  const double fs = legend_h * 0.4;
  const double ly = h + legend_h * 0.55;
  os << "<g id=\"legend\" font-size=\"" << format_double(fs) << "\">\n";
  os << "<rect x=\"0\" y=\"" << format_double(ly - fs) << "\" width=\"" << format_double(fs)
     << "\" height=\"" << format_double(fs) << "\" fill=\"#ffffff\" stroke=\"#000000\"/>\n";
  os << "<text x=\"" << format_double(1.5 * fs) << "\" y=\"" << format_double(ly) << "\">lit</text>\n";
  os << "<rect x=\"" << format_double(4 * fs) << "\" y=\"" << format_double(ly - fs) << "\" width=\""
     << format_double(fs) << "\" height=\"" << format_double(fs) << "\" fill=\"#606060\"/>\n";
  os << "<text x=\"" << format_double(5.5 * fs) << "\" y=\"" << format_double(ly)
     << "\">shaded</text>\n";
  os << "<text id=\"timestamp\" x=\"" << format_double(11 * fs) << "\" y=\"" << format_double(ly)
     << "\">" << format_rfc3339(r.time) << " sun az " << format_double(std::round(r.sun.azimuth_deg * 10) / 10)
     << " el " << format_double(std::round(r.sun.elevation_deg * 10) / 10) << "</text>\n";
  os << "</g>\n</svg>\n";
}

}  // namespace urban3d::solar
