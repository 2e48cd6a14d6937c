#include "urban3d/city.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "urban3d/error.hpp"

namespace urban3d {

namespace {
constexpr double kEarthRadius = 6371008.8;  // mean radius, m
constexpr double kDeg = std::numbers::pi / 180.0;
}  // namespace

LatLon to_geodetic(const GeoOrigin& origin, geo::Vec2 local) {
  const double lat = origin.lat_deg + local.y / kEarthRadius / kDeg;
  const double lon =
      origin.lon_deg + local.x / (kEarthRadius * std::cos(origin.lat_deg * kDeg)) / kDeg;
  return {lat, lon};
}

geo::Vec2 to_local(const GeoOrigin& origin, LatLon ll) {
  return {(ll.lon_deg - origin.lon_deg) * kDeg * kEarthRadius * std::cos(origin.lat_deg * kDeg),
          (ll.lat_deg - origin.lat_deg) * kDeg * kEarthRadius};
}

double Terrain::height_at(double x, double y) const {
  if (empty()) return 0.0;
  const double fx = std::clamp((x - x0) / spacing, 0.0, static_cast<double>(nx - 1));
  const double fy = std::clamp((y - y0) / spacing, 0.0, static_cast<double>(ny - 1));
  const auto ix = std::min<std::size_t>(static_cast<std::size_t>(fx), nx - 2);
  const auto iy = std::min<std::size_t>(static_cast<std::size_t>(fy), ny - 2);
  const double tx = fx - static_cast<double>(ix), ty = fy - static_cast<double>(iy);
  const double h00 = height(ix, iy), h10 = height(ix + 1, iy);
  const double h01 = height(ix, iy + 1), h11 = height(ix + 1, iy + 1);
  return (1 - ty) * ((1 - tx) * h00 + tx * h10) + ty * ((1 - tx) * h01 + tx * h11);
}

geo::TriangleMesh Terrain::mesh() const {
  std::vector<geo::Point3> vertices;
  std::vector<geo::TriangleIndices> tris;
  if (empty()) return {};
  vertices.reserve(nx * ny);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      vertices.push_back({x0 + spacing * static_cast<double>(ix),
                          y0 + spacing * static_cast<double>(iy), height(ix, iy)});
    }
  }
  tris.reserve(2 * (nx - 1) * (ny - 1));
  for (std::size_t iy = 0; iy + 1 < ny; ++iy) {
    for (std::size_t ix = 0; ix + 1 < nx; ++ix) {
      const auto a = static_cast<std::uint32_t>(iy * nx + ix);
      const auto b = a + 1;
      const auto c = static_cast<std::uint32_t>(a + nx);
      const auto d = c + 1;
      tris.push_back({a, b, d});
      tris.push_back({a, d, c});
    }
  }
  std::vector<geo::SurfaceId> owners(tris.size(), geo::kTerrainSurface);
  return geo::TriangleMesh(std::move(vertices), std::move(tris), std::move(owners));
}

void validate_terrain(const Terrain& t) {
  if (t.heights.size() != t.nx * t.ny) throw InputError("terrain: heights size != nx*ny");
  if (!(t.spacing > 0.0) || !std::isfinite(t.spacing)) throw InputError("terrain: spacing must be > 0");
  for (double h : t.heights) {
    if (!std::isfinite(h)) throw InputError("terrain: non-finite height");
  }
}

geo::TriangleMesh Building::mesh() const {
  geo::MeshBuilder builder;
  for (const auto& p : walls) builder.add_polygon(p);
  for (const auto& p : roofs) builder.add_polygon(p);
  return std::move(builder).build();
}

std::vector<geo::Vec2> Building::footprint() const {
  for (const auto& w : walls) {
    if (geo::polygon_normal(w).z < -0.99) {
      std::vector<geo::Vec2> out;
      out.reserve(w.vertices.size());
      for (auto it = w.vertices.rbegin(); it != w.vertices.rend(); ++it) out.push_back({it->x, it->y});
      return out;
    }
  }
  throw InputError("building " + std::to_string(id) + " has no floor polygon");
}

double Building::footprint_area() const {
  const auto fp = footprint();
  double a = 0.0;
  for (std::size_t i = 0, j = fp.size() - 1; i < fp.size(); j = i++) {
    a += fp[j].x * fp[i].y - fp[i].x * fp[j].y;
  }
  return 0.5 * std::abs(a);
}

geo::Vec2 Building::footprint_centroid() const {
  const auto fp = footprint();
  const geo::Vec2 ref = fp.front();
  double a = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0, j = fp.size() - 1; i < fp.size(); j = i++) {
    const double xj = fp[j].x - ref.x, yj = fp[j].y - ref.y;
    const double xi = fp[i].x - ref.x, yi = fp[i].y - ref.y;
    const double c = xj * yi - xi * yj;
    a += c;
    cx += (xj + xi) * c;
    cy += (yj + yi) * c;
  }
  return {ref.x + cx / (3.0 * a), ref.y + cy / (3.0 * a)};
}

std::optional<std::size_t> CityModel::district_of(geo::Vec2 p) const {
  for (std::size_t i = 0; i < districts.size(); ++i) {
    if (geo::point_in_polygon_2d(p, districts[i].polygon)) return i;
  }
  return std::nullopt;
}

geo::TriangleMesh CityModel::scene_mesh() const {
  geo::MeshBuilder builder;
  if (!terrain.empty()) builder.append(terrain.mesh());
  for (const auto& b : buildings) {
    for (const auto& p : b.walls) builder.add_polygon(p);
    for (const auto& p : b.roofs) builder.add_polygon(p);
  }
  return std::move(builder).build();
}

const geo::Polygon3* CityModel::find_roof(geo::SurfaceId id) const {
  for (const auto& b : buildings) {
    for (const auto& r : b.roofs) {
      if (r.surface_id == id) return &r;
    }
  }
  return nullptr;
}

void validate_city(const CityModel& city) {
  validate_terrain(city.terrain);
  std::set<std::uint32_t> surface_ids;
  std::set<std::uint32_t> building_ids;
  for (const auto& b : city.buildings) {
    const std::string tag = "building " + std::to_string(b.id);
    if (!building_ids.insert(b.id).second) throw InputError(tag + ": duplicate building id");
    if (b.roofs.empty()) throw InputError(tag + ": no roof surfaces");
    auto check = [&](const geo::Polygon3& p) {
      try {
        geo::validate_polygon(p);
      } catch (const InputError& e) {
        throw InputError(tag + ": " + e.what());
      }
      const auto id = geo::to_underlying(p.surface_id);
      if (id == geo::to_underlying(geo::kTerrainSurface) || id == geo::to_underlying(geo::kNoSurface)) {
        throw InputError(tag + ": reserved surface id " + std::to_string(id));
      }
      if (!surface_ids.insert(id).second) {
        throw InputError(tag + ": duplicate surface id " + std::to_string(id));
      }
    };
    for (const auto& p : b.walls) check(p);
    for (const auto& p : b.roofs) {
      check(p);
      if (geo::polygon_normal(p).z < -1e-12) {
        throw InputError(tag + ": roof surface " + std::to_string(geo::to_underlying(p.surface_id)) +
                         " faces downward");
      }
    }
    if (!geo::is_watertight(b.mesh())) throw InputError(tag + ": mesh is not watertight");
  }
}

}  // namespace urban3d
