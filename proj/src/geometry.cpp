#include "tactile_recon/geometry.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <limits>
#include <numbers>
#include <string>

#include "tactile_recon/error.hpp"

namespace tactile {

Aabb::Aabb(Point3 min, Point3 max, bool allow_degenerate) : min_(min), max_(max) {
  if (!min.finite() || !max.finite()) throw Error(ErrorKind::InvalidArgument, "aabb: non-finite bound");
  const bool ordered = min.x <= max.x && min.y <= max.y && min.z <= max.z;
  const bool solid = min.x < max.x && min.y < max.y && min.z < max.z;
  if (!ordered || (!allow_degenerate && !solid)) {
    throw Error(ErrorKind::InvalidArgument, "aabb: bounds must satisfy min < max on every axis");
  }
}

bool Aabb::contains(const Point3& p) const {
  return p.x >= min_.x && p.x <= max_.x && p.y >= min_.y && p.y <= max_.y && p.z >= min_.z && p.z <= max_.z;
}

Point3 Aabb::clamp(const Point3& p) const {
  return {std::clamp(p.x, min_.x, max_.x), std::clamp(p.y, min_.y, max_.y), std::clamp(p.z, min_.z, max_.z)};
}

double normalize_angle(double radians) {
  double a = std::remainder(radians, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

RigidPose2D::RigidPose2D(double x, double y, double yaw) : x_(x), y_(y), yaw_(normalize_angle(yaw)) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(yaw)) {
    throw Error(ErrorKind::InvalidArgument, "pose: non-finite component");
  }
}

Pose3 Pose3::translate(const Point3& t) {
  Pose3 p;
  p.translation = t.vec();
  return p;
}

Pose3 Pose3::from_axis_angle(const Point3& t, const Eigen::Vector3d& axis, double angle) {
  Pose3 p;
  p.rotation = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  p.translation = t.vec();
  return p;
}

Primitive Primitive::box(const Eigen::Vector3d& half_extents, const Pose3& pose) {
  if (!(half_extents.array() > 0.0).all()) throw Error(ErrorKind::InvalidArgument, "box: half extents must be positive");
  Primitive p;
  p.kind = PrimitiveKind::Box;
  p.half_extents = half_extents;
  p.pose = pose;
  return p;
}

Primitive Primitive::sphere(double radius, const Point3& center) {
  if (!(radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "sphere: radius must be positive");
  Primitive p;
  p.kind = PrimitiveKind::Sphere;
  p.radius = radius;
  p.pose = Pose3::translate(center);
  return p;
}

Primitive Primitive::cylinder(double radius, double half_height, const Pose3& pose) {
  if (!(radius > 0.0) || !(half_height > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "cylinder: radius and height must be positive");
  }
  Primitive p;
  p.kind = PrimitiveKind::Cylinder;
  p.radius = radius;
  p.half_extents = {0.0, 0.0, half_height};
  p.pose = pose;
  return p;
}

double Primitive::sdf(const Point3& p) const {
  const Eigen::Vector3d q = pose.to_local(p);
  switch (kind) {
    case PrimitiveKind::Sphere:
      return q.norm() - radius;
    case PrimitiveKind::Box: {
      const Eigen::Vector3d excess = q.cwiseAbs() - half_extents;
      const double outside = excess.cwiseMax(0.0).norm();
      const double inside = std::min(excess.maxCoeff(), 0.0);
      return outside + inside;
    }
    case PrimitiveKind::Cylinder: {
      const double dr = std::hypot(q.x(), q.y()) - radius;
      const double dz = std::abs(q.z()) - half_extents.z();
      const double outside = std::hypot(std::max(dr, 0.0), std::max(dz, 0.0));
      return outside + std::min(std::max(dr, dz), 0.0);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double Primitive::surface_area() const {
  const double pi = std::numbers::pi;
  switch (kind) {
    case PrimitiveKind::Sphere:
      return 4.0 * pi * radius * radius;
    case PrimitiveKind::Box: {
      const Eigen::Vector3d e = 2.0 * half_extents;
      return 2.0 * (e.x() * e.y() + e.y() * e.z() + e.x() * e.z());
    }
    case PrimitiveKind::Cylinder:
      return 2.0 * pi * radius * 2.0 * half_extents.z() + 2.0 * pi * radius * radius;
  }
  return 0.0;
}

namespace {

struct LocalSample {
  Eigen::Vector3d position;
  Eigen::Vector3d normal;
  int face;
};

LocalSample sample_primitive_local(const Primitive& prim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  switch (prim.kind) {
    case PrimitiveKind::Sphere: {
      std::normal_distribution<double> gauss(0.0, 1.0);
      Eigen::Vector3d d;
      do {
        d = {gauss(rng), gauss(rng), gauss(rng)};
      } while (d.norm() < 1e-12);
      d.normalize();
      return {prim.radius * d, d, 0};
    }
    case PrimitiveKind::Box: {
      const Eigen::Vector3d h = prim.half_extents;
      // Face areas for the +/- pair of each axis.
      const double ax = 4.0 * h.y() * h.z();
      const double ay = 4.0 * h.x() * h.z();
      const double az = 4.0 * h.x() * h.y();
      const double pick = uni(rng) * 2.0 * (ax + ay + az);
      const int axis = pick < 2.0 * ax ? 0 : (pick < 2.0 * (ax + ay) ? 1 : 2);
      const double sign = uni(rng) < 0.5 ? 1.0 : -1.0;
      Eigen::Vector3d p;
      for (int i = 0; i < 3; ++i) p[i] = (2.0 * uni(rng) - 1.0) * h[i];
      p[axis] = sign * h[axis];
      Eigen::Vector3d n = Eigen::Vector3d::Zero();
      n[axis] = sign;
      return {p, n, 2 * axis + (sign > 0 ? 0 : 1)};
    }
    case PrimitiveKind::Cylinder: {
      const double r = prim.radius;
      const double hh = prim.half_extents.z();
      const double side = 2.0 * std::numbers::pi * r * 2.0 * hh;
      const double cap = std::numbers::pi * r * r;
      const double pick = uni(rng) * (side + 2.0 * cap);
      if (pick < side) {
        const double theta = 2.0 * std::numbers::pi * uni(rng);
        const Eigen::Vector3d n(std::cos(theta), std::sin(theta), 0.0);
        return {Eigen::Vector3d(r * n.x(), r * n.y(), (2.0 * uni(rng) - 1.0) * hh), n, 0};
      }
      const bool top = pick < side + cap;
      const double rho = r * std::sqrt(uni(rng));
      const double theta = 2.0 * std::numbers::pi * uni(rng);
      const double z = top ? hh : -hh;
      return {Eigen::Vector3d(rho * std::cos(theta), rho * std::sin(theta), z), Eigen::Vector3d(0, 0, top ? 1 : -1),
              top ? 1 : 2};
    }
  }
  return {};
}

}  // namespace

GroundTruthShape::GroundTruthShape(Primitive p) : members_{std::move(p)} {}

GroundTruthShape::GroundTruthShape(std::vector<Primitive> members) : members_(std::move(members)) {
  if (members_.empty()) throw Error(ErrorKind::InvalidArgument, "shape: union needs at least one member");
}

std::vector<SurfacePoint> GroundTruthShape::sample_surface(std::size_t count, std::mt19937_64& rng) const {
  std::vector<double> areas;
  areas.reserve(members_.size());
  for (const auto& m : members_) areas.push_back(m.surface_area());
  std::discrete_distribution<int> pick(areas.begin(), areas.end());

  std::vector<SurfacePoint> out;
  out.reserve(count);
  // Union members may bury parts of each other; those samples are rejected.
  std::size_t attempts = 0;
  const std::size_t max_attempts = 1000 * count + 1000;
  while (out.size() < count) {
    if (++attempts > max_attempts) throw Error(ErrorKind::InvalidArgument, "shape: outer surface has no area");
    const int idx = members_.size() == 1 ? 0 : pick(rng);
    const Primitive& prim = members_[static_cast<std::size_t>(idx)];
    const LocalSample s = sample_primitive_local(prim, rng);
    const Point3 world = prim.pose.to_world(s.position);
    bool buried = false;
    for (std::size_t j = 0; j < members_.size() && !buried; ++j) {
      if (static_cast<int>(j) != idx && members_[j].sdf(world) < -1e-9) buried = true;
    }
    if (buried) continue;
    out.push_back({world, Point3(prim.pose.rotation * s.normal), idx, s.face});
  }
  return out;
}

double sdf_eval(const GroundTruthShape& shape, const Point3& p) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& m : shape.members()) d = std::min(d, m.sdf(p));
  return d;
}

GroundTruthShape make_o1() {
  const Eigen::Vector3d h(kObjectLong / 2, kObjectShort / 2, kObjectMid / 2);
  return GroundTruthShape(Primitive::box(h, Pose3::translate({0.0, 0.0, h.z()})));
}

GroundTruthShape make_o2() {
  const Eigen::Vector3d h(kObjectLong / 2, kObjectMid / 2, kObjectShort / 2);
  return GroundTruthShape(Primitive::box(h, Pose3::translate({0.0, 0.0, h.z()})));
}

GroundTruthShape make_o3() {
  // O2's box tipped about y so its long edge points up.
  const Eigen::Vector3d h(kObjectLong / 2, kObjectMid / 2, kObjectShort / 2);
  const Pose3 pose = Pose3::from_axis_angle({0.0, 0.0, kObjectLong / 2}, Eigen::Vector3d::UnitY(), std::numbers::pi / 2);
  return GroundTruthShape(Primitive::box(h, pose));
}

}  // namespace tactile
