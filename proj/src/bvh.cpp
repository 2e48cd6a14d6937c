#include "urban3d/bvh.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "urban3d/error.hpp"

namespace urban3d::geo {

namespace {

// Conservative slab-test widening (Ize, "Robust BVH ray traversal").
constexpr double kSlabGrowth = 1.0 + 4.0 * std::numeric_limits<double>::epsilon();

Aabb padded(Aabb box) {
  const Vec3 ext = box.hi - box.lo;
  const double pad = 1e-9 * std::max({ext.x, ext.y, ext.z, 1.0});
  box.lo = box.lo - Vec3{pad, pad, pad};
  box.hi = box.hi + Vec3{pad, pad, pad};
  return box;
}

struct RayPrecomp {
  Point3 origin;
  std::array<double, 3> inv;
  std::array<bool, 3> zero;
};

RayPrecomp precompute(const Ray& ray) {
  RayPrecomp r;
  r.origin = ray.origin;
  for (int a = 0; a < 3; ++a) {
    const double d = ray.direction[a];
    r.zero[a] = d == 0.0;
    r.inv[a] = r.zero[a] ? 0.0 : 1.0 / d;
  }
  return r;
}

bool slab_hit(const Aabb& box, const RayPrecomp& r, double t_min, double t_max) {
  double near = t_min, far = t_max;
  for (int a = 0; a < 3; ++a) {
    const double o = r.origin[a];
    if (r.zero[a]) {
      if (o < box.lo[a] || o > box.hi[a]) return false;
      continue;
    }
    const double inv = r.inv[a];
    double t0 = (box.lo[a] - o) * inv;
    double t1 = (box.hi[a] - o) * inv;
    if (t0 > t1) std::swap(t0, t1);
    t1 *= kSlabGrowth;
    near = t0 > near ? t0 : near;
    far = t1 < far ? t1 : far;
    if (near > far) return false;
  }
  return true;
}

// Möller–Trumbore on precomputed edges.
inline bool hit_prim(const Ray& ray, Point3 a, Vec3 e1, Vec3 e2, double t_max, double& t_out) {
  const Vec3 p = cross(ray.direction, e2);
  const double det = dot(e1, p);
  if (det == 0.0) return false;
  const double inv = 1.0 / det;
  const Vec3 s = ray.origin - a;
  const double u = dot(s, p) * inv;
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 q = cross(s, e1);
  const double v = dot(ray.direction, q) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  const double t = dot(e2, q) * inv;
  if (!(t > ray.t_min && t < t_max)) return false;
  t_out = t;
  return true;
}

}  // namespace

void validate_ray(const Ray& ray) {
  if (!is_finite(ray.origin) || !is_finite(ray.direction)) throw InputError("ray: non-finite");
  if (std::abs(norm(ray.direction) - 1.0) > 1e-9) throw InputError("ray: direction not unit length");
  if (!(ray.t_min >= 0.0) || !(ray.t_max > ray.t_min)) throw InputError("ray: invalid t range");
}

void Aabb::extend(Point3 p) {
  lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
  hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
}

void Aabb::extend(const Aabb& b) {
  extend(b.lo);
  extend(b.hi);
}

bool Aabb::contains(const Aabb& b) const {
  return lo.x <= b.lo.x && lo.y <= b.lo.y && lo.z <= b.lo.z && hi.x >= b.hi.x && hi.y >= b.hi.y &&
         hi.z >= b.hi.z;
}

std::optional<double> intersect_triangle(const Ray& ray, Point3 a, Point3 b, Point3 c) {
  double t = 0.0;
  if (hit_prim(ray, a, b - a, c - a, ray.t_max, t)) return t;
  return std::nullopt;
}

Bvh::Bvh(const TriangleMesh& mesh) {
  if (mesh.empty()) throw InputError("build_bvh: empty mesh");
  const auto n = static_cast<std::uint32_t>(mesh.size());
  std::vector<std::uint32_t> idx(n);
  std::vector<Point3> centroids(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    idx[i] = i;
    const auto t = mesh.triangle(i);
    centroids[i] = (t[0] + t[1] + t[2]) / 3.0;
  }
  nodes_.reserve(2 * (n / kMaxLeafSize + 1));
  build(idx, centroids, mesh, 0, n, 1);
  order_ = idx;
  prims_.reserve(n);
  for (auto i : order_) {
    const auto t = mesh.triangle(i);
    prims_.push_back({t[0], t[1] - t[0], t[2] - t[0], mesh.owners()[i]});
  }
}

std::uint32_t Bvh::build(std::vector<std::uint32_t>& idx, std::vector<Point3>& centroids,
                         const TriangleMesh& mesh, std::uint32_t begin, std::uint32_t end,
                         std::size_t depth) {
  depth_ = std::max(depth_, depth);
  const auto node_index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb box, cbox;
  for (std::uint32_t i = begin; i < end; ++i) {
    for (const auto& p : mesh.triangle(idx[i])) box.extend(p);
    cbox.extend(centroids[idx[i]]);
  }
  nodes_[node_index].box = padded(box);

  const std::uint32_t count = end - begin;
  const Vec3 ext = cbox.hi - cbox.lo;
  if (count <= kMaxLeafSize) {
    nodes_[node_index].first = begin;
    nodes_[node_index].count = count;
    return node_index;
  }
  const int axis = (ext.x >= ext.y && ext.x >= ext.z) ? 0 : (ext.y >= ext.z ? 1 : 2);
  const std::uint32_t mid = begin + count / 2;
  // Total order (centroid, index) keeps the split deterministic.
  std::nth_element(idx.begin() + begin, idx.begin() + mid, idx.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = centroids[a][axis], cb = centroids[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  build(idx, centroids, mesh, begin, mid, depth + 1);
  const auto right = build(idx, centroids, mesh, mid, end, depth + 1);
  nodes_[node_index].first = right;
  nodes_[node_index].count = 0;
  return node_index;
}

bool Bvh::occluded(const Ray& ray, SurfaceId ignore) const {
  const RayPrecomp rp = precompute(ray);
  std::uint32_t stack[96];
  int top = 0;
  stack[top++] = 0;
  double t = 0.0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!slab_hit(node.box, rp, ray.t_min, ray.t_max)) continue;
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const Prim& p = prims_[i];
        if (p.owner == ignore) continue;
        if (hit_prim(ray, p.a, p.e1, p.e2, ray.t_max, t)) return true;
      }
    } else {
      const auto self = static_cast<std::uint32_t>(&node - nodes_.data());
      stack[top++] = node.first;
      stack[top++] = self + 1;
    }
  }
  return false;
}

std::optional<RayHit> Bvh::first_hit(const Ray& ray, SurfaceId ignore) const {
  const RayPrecomp rp = precompute(ray);
  std::uint32_t stack[96];
  int top = 0;
  stack[top++] = 0;
  double best_t = ray.t_max;
  std::optional<std::uint32_t> best;
  double t = 0.0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!slab_hit(node.box, rp, ray.t_min, best_t)) continue;
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const Prim& p = prims_[i];
        if (p.owner == ignore) continue;
        if (!hit_prim(ray, p.a, p.e1, p.e2, ray.t_max, t)) continue;
        // Ties resolve to the lower source index for order independence.
        if (!best || t < best_t || (t == best_t && order_[i] < order_[*best])) {
          best_t = t;
          best = i;
        }
      }
    } else {
      const auto self = static_cast<std::uint32_t>(&node - nodes_.data());
      stack[top++] = node.first;
      stack[top++] = self + 1;
    }
  }
  if (!best) return std::nullopt;
  const Prim& p = prims_[*best];
  return RayHit{best_t, order_[*best], p.owner, normalized(cross(p.e1, p.e2))};
}

Bvh build_bvh(const TriangleMesh& mesh) { return Bvh(mesh); }

bool ray_occluded(const Bvh& bvh, const Ray& ray, SurfaceId ignore) {
  return bvh.occluded(ray, ignore);
}

bool ray_occluded_brute_force(const TriangleMesh& mesh, const Ray& ray, SurfaceId ignore) {
  double t = 0.0;
  const auto& owners = mesh.owners();
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    if (owners[i] == ignore) continue;
    const auto tri = mesh.triangle(i);
    if (hit_prim(ray, tri[0], tri[1] - tri[0], tri[2] - tri[0], ray.t_max, t)) return true;
  }
  return false;
}

}  // namespace urban3d::geo
