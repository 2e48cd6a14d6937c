#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace urban3d::geo {

/// Point or direction in a local east-north-up frame, meters.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a * s; }
  friend constexpr Vec3 operator/(Vec3 a, double s) { return {a.x / s, a.y / s, a.z / s}; }
  constexpr Vec3& operator+=(Vec3 o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  friend constexpr bool operator==(Vec3, Vec3) = default;

  constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
};

using Point3 = Vec3;

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(Vec3 a) { return a / norm(a); }
inline bool is_finite(Vec3 a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

/// Opaque surface identifier; every triangle of a mesh carries its owner.
enum class SurfaceId : std::uint32_t {};

constexpr SurfaceId kNoSurface{0xFFFFFFFFu};
constexpr SurfaceId kTerrainSurface{0u};

constexpr std::uint32_t to_underlying(SurfaceId id) { return static_cast<std::uint32_t>(id); }

// Tolerances shared by validation and feature extraction.
inline constexpr double kCoplanarTolerance = 0.01;  // m
inline constexpr double kDegenerateArea = 1e-6;     // m^2
inline constexpr double kFlatTiltDeg = 0.5;

/// Planar polygon, counter-clockwise seen from its outward side.
struct Polygon3 {
  std::vector<Point3> vertices;
  SurfaceId surface_id{0};
};

/// Throws InputError if the polygon has <3 vertices, non-finite coordinates,
/// is degenerate, non-coplanar beyond 1 cm, or self-intersecting.
void validate_polygon(const Polygon3& poly);

/// Newell normal, not normalized; its length is twice the polygon area.
Vec3 newell_vector(std::span<const Point3> vertices);

Vec3 polygon_normal(const Polygon3& poly);
double polygon_area(const Polygon3& poly);
/// Area-weighted centroid of the polygon surface.
Point3 polygon_centroid(const Polygon3& poly);

struct TiltAzimuth {
  double tilt_deg = 0.0;     // [0, 90]
  double azimuth_deg = 0.0;  // [0, 360), 0 = north, clockwise
};

/// Orientation of an upward-facing surface. Throws for downward normals.
TiltAzimuth polygon_tilt_azimuth(const Polygon3& poly);
TiltAzimuth tilt_azimuth_of_normal(Vec3 unit_normal);
/// Outward unit normal of a plane with the given orientation.
Vec3 normal_from_tilt_azimuth(double tilt_deg, double azimuth_deg);

using TriangleIndices = std::array<std::uint32_t, 3>;

/// Ear-clipping triangulation. Indices refer to `poly.vertices` and keep the
/// polygon's winding.
std::vector<TriangleIndices> triangulate(const Polygon3& poly);

/// Indexed triangle mesh; every triangle has an owning surface.
class TriangleMesh {
 public:
  TriangleMesh() = default;
  /// Validates indices and coordinates; zero-area triangles are dropped.
  TriangleMesh(std::vector<Point3> vertices, std::vector<TriangleIndices> triangles,
               std::vector<SurfaceId> owners);

  const std::vector<Point3>& vertices() const { return vertices_; }
  const std::vector<TriangleIndices>& triangles() const { return triangles_; }
  const std::vector<SurfaceId>& owners() const { return owners_; }
  std::size_t size() const { return triangles_.size(); }
  bool empty() const { return triangles_.empty(); }

  std::array<Point3, 3> triangle(std::size_t i) const {
    const auto& t = triangles_[i];
    return {vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]};
  }

 private:
  std::vector<Point3> vertices_;
  std::vector<TriangleIndices> triangles_;
  std::vector<SurfaceId> owners_;
};

/// Accumulates polygons and triangles, welding coincident vertices (1 µm grid)
/// so that shared edges become topologically shared.
class MeshBuilder {
 public:
  void add_polygon(const Polygon3& poly);
  void add_triangle(Point3 a, Point3 b, Point3 c, SurfaceId owner);
  void append(const TriangleMesh& mesh);
  TriangleMesh build() &&;

 private:
  std::uint32_t vertex_index(Point3 p);

  std::vector<Point3> vertices_;
  std::vector<TriangleIndices> triangles_;
  std::vector<SurfaceId> owners_;
  std::map<std::array<long long, 3>, std::uint32_t> index_;
};

TriangleMesh mesh_from_polygons(std::span<const Polygon3> polygons);

struct Edge {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Edges not shared by exactly two oppositely oriented triangles.
std::vector<Edge> open_edges(const TriangleMesh& mesh);
bool is_watertight(const TriangleMesh& mesh);

/// Enclosed volume of a watertight mesh. Throws InputError naming open edges.
double mesh_volume(const TriangleMesh& mesh);

/// Wavefront OBJ text (vertex and face records only).
void write_obj(std::ostream& os, const TriangleMesh& mesh);

/// Crossing-number point-in-polygon test in the xy plane.
bool point_in_polygon_2d(Vec2 p, std::span<const Vec2> polygon);

}  // namespace urban3d::geo
