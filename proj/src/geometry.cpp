#include "urban3d/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "urban3d/error.hpp"
#include "urban3d/numfmt.hpp"

namespace urban3d::geo {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kDegToRad = std::numbers::pi / 180.0;

// Projection dropping the dominant normal axis. The returned sign is positive
// when the projected polygon winds counter-clockwise.
struct Projection {
  int u_axis = 0;
  int v_axis = 1;
  double sign = 1.0;

  Vec2 operator()(Point3 p) const { return {p[u_axis], p[v_axis]}; }
};

Projection dominant_projection(Vec3 normal) {
  const double ax = std::abs(normal.x), ay = std::abs(normal.y), az = std::abs(normal.z);
  if (az >= ax && az >= ay) return {0, 1, normal.z >= 0 ? 1.0 : -1.0};
  if (ax >= ay) return {1, 2, normal.x >= 0 ? 1.0 : -1.0};
  return {2, 0, normal.y >= 0 ? 1.0 : -1.0};
}

double orient2d(Vec2 a, Vec2 b, Vec2 c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const double d1 = orient2d(q1, q2, p1);
  const double d2 = orient2d(q1, q2, p2);
  const double d3 = orient2d(p1, p2, q1);
  const double d4 = orient2d(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  auto on_segment = [](Vec2 a, Vec2 b, Vec2 c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= c.y &&
           c.y <= std::max(a.y, b.y);
  };
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

bool point_in_triangle_2d(Vec2 p, Vec2 a, Vec2 b, Vec2 c) {
  // Inclusive of the boundary; triangle assumed counter-clockwise.
  return orient2d(a, b, p) >= 0 && orient2d(b, c, p) >= 0 && orient2d(c, a, p) >= 0;
}

double triangle_area(Point3 a, Point3 b, Point3 c) { return 0.5 * norm(cross(b - a, c - a)); }

}  // namespace

Vec3 newell_vector(std::span<const Point3> vertices) {
  Vec3 n;
  const std::size_t count = vertices.size();
  if (count == 0) return n;
  // Relative to the first vertex for translation robustness.
  const Point3 ref = vertices[0];
  for (std::size_t i = 0; i < count; ++i) {
    const Point3 a = vertices[i] - ref;
    const Point3 b = vertices[(i + 1) % count] - ref;
    n.x += (a.y - b.y) * (a.z + b.z);
    n.y += (a.z - b.z) * (a.x + b.x);
    n.z += (a.x - b.x) * (a.y + b.y);
  }
  return n;
}

double polygon_area(const Polygon3& poly) { return 0.5 * norm(newell_vector(poly.vertices)); }

Vec3 polygon_normal(const Polygon3& poly) {
  const Vec3 n = newell_vector(poly.vertices);
  const double len = norm(n);
  if (!(0.5 * len >= kDegenerateArea)) {
    throw InputError("degenerate polygon (surface " + std::to_string(to_underlying(poly.surface_id)) +
                     "): area below 1e-6 m^2");
  }
  return n / len;
}

Point3 polygon_centroid(const Polygon3& poly) {
  const auto& v = poly.vertices;
  const Vec3 n = polygon_normal(poly);
  Vec3 acc;
  double total = 0.0;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    const double a = 0.5 * dot(cross(v[i] - v[0], v[i + 1] - v[0]), n);
    acc += ((v[0] + v[i] + v[i + 1]) / 3.0 - v[0]) * a;
    total += a;
  }
  return v[0] + acc / total;
}

void validate_polygon(const Polygon3& poly) {
  const auto& v = poly.vertices;
  const std::string tag = "polygon (surface " + std::to_string(to_underlying(poly.surface_id)) + ")";
  if (v.size() < 3) throw InputError(tag + ": fewer than 3 vertices");
  for (const auto& p : v) {
    if (!is_finite(p)) throw InputError(tag + ": non-finite coordinate");
  }
  const Vec3 n = polygon_normal(poly);
  Vec3 mean;
  for (const auto& p : v) mean += p;
  mean = mean / static_cast<double>(v.size());
  for (const auto& p : v) {
    if (std::abs(dot(p - mean, n)) > kCoplanarTolerance) {
      throw InputError(tag + ": vertices not coplanar within 1 cm");
    }
  }
  const Projection proj = dominant_projection(n);
  const std::size_t count = v.size();
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = i + 1; j < count; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == count - 1);
      if (adjacent) continue;
      if (segments_intersect(proj(v[i]), proj(v[(i + 1) % count]), proj(v[j]),
                             proj(v[(j + 1) % count]))) {
        throw InputError(tag + ": self-intersecting boundary");
      }
    }
  }
}

TiltAzimuth tilt_azimuth_of_normal(Vec3 n) {
  if (n.z < -1e-12) throw InputError("downward-facing surface is not a roof");
  TiltAzimuth out;
  const double horizontal = std::hypot(n.x, n.y);
  out.tilt_deg = std::atan2(horizontal, std::max(n.z, 0.0)) * kRadToDeg;
  if (out.tilt_deg < kFlatTiltDeg) {
    out.azimuth_deg = 0.0;
    return out;
  }
  double az = std::atan2(n.x, n.y) * kRadToDeg;
  if (az < 0.0) az += 360.0;
  if (az >= 360.0) az -= 360.0;
  out.azimuth_deg = az;
  return out;
}

TiltAzimuth polygon_tilt_azimuth(const Polygon3& poly) {
  return tilt_azimuth_of_normal(polygon_normal(poly));
}

Vec3 normal_from_tilt_azimuth(double tilt_deg, double azimuth_deg) {
  const double t = tilt_deg * kDegToRad;
  const double a = azimuth_deg * kDegToRad;
  return {std::sin(t) * std::sin(a), std::sin(t) * std::cos(a), std::cos(t)};
}

std::vector<TriangleIndices> triangulate(const Polygon3& poly) {
  const Vec3 n = polygon_normal(poly);
  const auto& v = poly.vertices;
  const Projection proj = dominant_projection(n);
  std::vector<Vec2> pts(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    Vec2 p = proj(v[i]);
    if (proj.sign < 0) p.y = -p.y;  // mirror so the working polygon is CCW
    pts[i] = p;
  }

  std::vector<std::uint32_t> ring(v.size());
  for (std::uint32_t i = 0; i < ring.size(); ++i) ring[i] = i;

  std::vector<TriangleIndices> out;
  out.reserve(v.size() - 2);
  while (ring.size() > 3) {
    const std::size_t m = ring.size();
    bool clipped = false;
    for (std::size_t k = 0; k < m; ++k) {
      const auto ip = ring[(k + m - 1) % m], ic = ring[k], in = ring[(k + 1) % m];
      const Vec2 a = pts[ip], b = pts[ic], c = pts[in];
      if (orient2d(a, b, c) <= 0) continue;  // reflex or collinear
      bool contains = false;
      for (std::size_t q = 0; q < m && !contains; ++q) {
        const auto iq = ring[q];
        if (iq == ip || iq == ic || iq == in) continue;
        const Vec2 p = pts[iq];
        if (p == a || p == b || p == c) continue;
        contains = point_in_triangle_2d(p, a, b, c);
      }
      if (contains) continue;
      out.push_back({ip, ic, in});
      ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(k));
      clipped = true;
      break;
    }
    if (!clipped) {
      // Numerically stuck: drop the flattest vertex so the loop terminates.
      std::size_t best = 0;
      double best_area = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < m; ++k) {
        const double area = std::abs(orient2d(pts[ring[(k + m - 1) % m]], pts[ring[k]],
                                              pts[ring[(k + 1) % m]]));
        if (area < best_area) {
          best_area = area;
          best = k;
        }
      }
      out.push_back({ring[(best + m - 1) % m], ring[best], ring[(best + 1) % m]});
      ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(best));
    }
  }
  out.push_back({ring[0], ring[1], ring[2]});
  return out;
}

TriangleMesh::TriangleMesh(std::vector<Point3> vertices, std::vector<TriangleIndices> triangles,
                           std::vector<SurfaceId> owners)
    : vertices_(std::move(vertices)) {
  if (owners.size() != triangles.size()) {
    throw InputError("mesh: owner count does not match triangle count");
  }
  for (const auto& p : vertices_) {
    if (!is_finite(p)) throw InputError("mesh: non-finite vertex");
  }
  triangles_.reserve(triangles.size());
  owners_.reserve(owners.size());
  for (std::size_t i = 0; i < triangles.size(); ++i) {
    const auto& t = triangles[i];
    for (auto idx : t) {
      if (idx >= vertices_.size()) {
        throw InputError("mesh: triangle " + std::to_string(i) + " index out of range");
      }
    }
    if (triangle_area(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]) <= 1e-12) continue;
    triangles_.push_back(t);
    owners_.push_back(owners[i]);
  }
}

std::uint32_t MeshBuilder::vertex_index(Point3 p) {
  const std::array<long long, 3> key{std::llround(p.x * 1e6), std::llround(p.y * 1e6),
                                     std::llround(p.z * 1e6)};
  auto [it, inserted] = index_.try_emplace(key, static_cast<std::uint32_t>(vertices_.size()));
  if (inserted) vertices_.push_back(p);
  return it->second;
}

void MeshBuilder::add_polygon(const Polygon3& poly) {
  const auto tris = triangulate(poly);
  std::vector<std::uint32_t> ids(poly.vertices.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = vertex_index(poly.vertices[i]);
  for (const auto& t : tris) {
    triangles_.push_back({ids[t[0]], ids[t[1]], ids[t[2]]});
    owners_.push_back(poly.surface_id);
  }
}

void MeshBuilder::add_triangle(Point3 a, Point3 b, Point3 c, SurfaceId owner) {
  triangles_.push_back({vertex_index(a), vertex_index(b), vertex_index(c)});
  owners_.push_back(owner);
}

void MeshBuilder::append(const TriangleMesh& mesh) {
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const auto t = mesh.triangle(i);
    add_triangle(t[0], t[1], t[2], mesh.owners()[i]);
  }
}

TriangleMesh MeshBuilder::build() && {
  return TriangleMesh(std::move(vertices_), std::move(triangles_), std::move(owners_));
}

TriangleMesh mesh_from_polygons(std::span<const Polygon3> polygons) {
  MeshBuilder builder;
  for (const auto& p : polygons) builder.add_polygon(p);
  return std::move(builder).build();
}

std::vector<Edge> open_edges(const TriangleMesh& mesh) {
  // (lo, hi, +1 when stored lo->hi)
  std::vector<std::array<std::uint32_t, 3>> directed;
  directed.reserve(mesh.size() * 3);
  for (const auto& t : mesh.triangles()) {
    for (int k = 0; k < 3; ++k) {
      const auto a = t[k], b = t[(k + 1) % 3];
      directed.push_back({std::min(a, b), std::max(a, b), a < b ? 1u : 0u});
    }
  }
  std::sort(directed.begin(), directed.end());
  std::vector<Edge> open;
  for (std::size_t i = 0; i < directed.size();) {
    std::size_t j = i;
    int forward = 0, backward = 0;
    while (j < directed.size() && directed[j][0] == directed[i][0] &&
           directed[j][1] == directed[i][1]) {
      (directed[j][2] ? forward : backward)++;
      ++j;
    }
    if (forward != 1 || backward != 1) open.push_back({directed[i][0], directed[i][1]});
    i = j;
  }
  return open;
}

bool is_watertight(const TriangleMesh& mesh) { return !mesh.empty() && open_edges(mesh).empty(); }

double mesh_volume(const TriangleMesh& mesh) {
  if (mesh.empty()) throw InputError("mesh_volume: empty mesh");
  const auto open = open_edges(mesh);
  if (!open.empty()) {
    std::ostringstream msg;
    msg << "mesh is not watertight: " << open.size() << " open edge(s):";
    const auto& v = mesh.vertices();
    for (std::size_t i = 0; i < std::min<std::size_t>(open.size(), 8); ++i) {
      const auto a = v[open[i].a], b = v[open[i].b];
      msg << " (" << a.x << "," << a.y << "," << a.z << ")-(" << b.x << "," << b.y << "," << b.z
          << ")";
    }
    throw InputError(msg.str());
  }
  const Point3 ref = mesh.vertices().front();
  double six_v = 0.0;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const auto t = mesh.triangle(i);
    six_v += dot(t[0] - ref, cross(t[1] - ref, t[2] - ref));
  }
  return std::abs(six_v) / 6.0;
}

void write_obj(std::ostream& os, const TriangleMesh& mesh) {
  for (const auto& p : mesh.vertices()) {
    os << "v " << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(p.z)
       << '\n';
  }
  for (const auto& t : mesh.triangles()) {
    os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
}

bool point_in_polygon_2d(Vec2 p, std::span<const Vec2> polygon) {
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = polygon[i], b = polygon[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

}  // namespace urban3d::geo
