#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "urban3d/geometry.hpp"

namespace urban3d::geo {

/// Ray segment: origin + t * direction for t in (t_min, t_max).
struct Ray {
  Point3 origin;
  Vec3 direction;  // unit length
  double t_min = 0.0;
  double t_max = 0.0;
};

/// Throws InputError unless |direction| = 1 within 1e-9, 0 <= t_min < t_max.
void validate_ray(const Ray& ray);

struct Aabb {
  Point3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
  Point3 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()};

  void extend(Point3 p);
  void extend(const Aabb& b);
  bool contains(const Aabb& b) const;
  double diagonal() const { return norm(hi - lo); }
};

struct RayHit {
  double t = 0.0;
  std::uint32_t triangle = 0;  // index into the source mesh
  SurfaceId owner{0};
  Vec3 geometric_normal;  // unit, from triangle winding
};

/// Single-triangle test (Möller–Trumbore, edges inclusive). Returns t on hit
/// inside (t_min, t_max).
std::optional<double> intersect_triangle(const Ray& ray, Point3 a, Point3 b, Point3 c);

/// Axis-aligned bounding-volume hierarchy over the triangles of a mesh.
/// Immutable after construction and safe for concurrent queries.
class Bvh {
 public:
  static constexpr std::uint32_t kMaxLeafSize = 8;

  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // leaf: first primitive; inner: right child
    std::uint32_t count = 0;  // 0 for inner nodes (left child is node + 1)
  };

  explicit Bvh(const TriangleMesh& mesh);

  bool occluded(const Ray& ray, SurfaceId ignore) const;
  std::optional<RayHit> first_hit(const Ray& ray, SurfaceId ignore) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  /// Source-mesh triangle index for each primitive slot, in leaf order.
  const std::vector<std::uint32_t>& primitive_order() const { return order_; }
  std::size_t depth() const { return depth_; }
  std::size_t triangle_count() const { return order_.size(); }
  const Aabb& bounds() const { return nodes_.front().box; }

 private:
  struct Prim {
    Point3 a;
    Vec3 e1;
    Vec3 e2;
    SurfaceId owner;
  };

  std::uint32_t build(std::vector<std::uint32_t>& idx, std::vector<Point3>& centroids,
                      const TriangleMesh& mesh, std::uint32_t begin, std::uint32_t end,
                      std::size_t depth);

  std::vector<Node> nodes_;
  std::vector<Prim> prims_;
  std::vector<std::uint32_t> order_;
  std::size_t depth_ = 0;
};

/// Throws InputError for an empty mesh.
Bvh build_bvh(const TriangleMesh& mesh);

/// True iff a triangle not owned by `ignore` intersects the ray.
bool ray_occluded(const Bvh& bvh, const Ray& ray, SurfaceId ignore);

/// Exhaustive all-triangle occlusion test; the reference path for shading.
bool ray_occluded_brute_force(const TriangleMesh& mesh, const Ray& ray, SurfaceId ignore);

}  // namespace urban3d::geo
