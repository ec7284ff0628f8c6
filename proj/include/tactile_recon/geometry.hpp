#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace tactile {

/// A position in the world frame, meters.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Point3() = default;
  constexpr Point3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}
  explicit Point3(const Eigen::Vector3d& v) : x(v.x()), y(v.y()), z(v.z()) {}

  Eigen::Vector3d vec() const { return {x, y, z}; }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

  constexpr Point3 operator+(const Point3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Point3 operator-(const Point3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Point3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr bool operator==(const Point3&) const = default;
};

inline double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Point3& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Point3& a, const Point3& b) { return norm(a - b); }

/// Axis-aligned box. Construction validates min <= max and, unless
/// `allow_degenerate` is set, strictly positive extent on every axis.
class Aabb {
 public:
  Aabb(Point3 min, Point3 max, bool allow_degenerate = false);

  const Point3& min() const { return min_; }
  const Point3& max() const { return max_; }
  Point3 center() const { return (min_ + max_) * 0.5; }
  Point3 extent() const { return max_ - min_; }
  double diagonal() const { return norm(extent()); }

  bool contains(const Point3& p) const;
  Point3 clamp(const Point3& p) const;

 private:
  Point3 min_;
  Point3 max_;
};

/// Planar pose on the table: position in meters, yaw in (-pi, pi].
class RigidPose2D {
 public:
  RigidPose2D() = default;
  RigidPose2D(double x, double y, double yaw);

  double x() const { return x_; }
  double y() const { return y_; }
  double yaw() const { return yaw_; }

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double yaw_ = 0.0;
};

double normalize_angle(double radians);

/// Rigid transform taking primitive-local coordinates to world.
struct Pose3 {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose3 translate(const Point3& t);
  static Pose3 from_axis_angle(const Point3& t, const Eigen::Vector3d& axis, double angle);

  Eigen::Vector3d to_local(const Point3& p) const { return rotation.transpose() * (p.vec() - translation); }
  Point3 to_world(const Eigen::Vector3d& local) const { return Point3(rotation * local + translation); }
};

enum class PrimitiveKind : std::uint8_t { Box, Sphere, Cylinder };

/// One analytic solid. Boxes use `half_extents`; spheres use `radius`;
/// cylinders use `radius` and `half_extents.z()` as half height along local z.
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::Sphere;
  Eigen::Vector3d half_extents = Eigen::Vector3d::Zero();
  double radius = 0.0;
  Pose3 pose;

  static Primitive box(const Eigen::Vector3d& half_extents, const Pose3& pose = {});
  static Primitive sphere(double radius, const Point3& center);
  static Primitive cylinder(double radius, double half_height, const Pose3& pose = {});

  double sdf(const Point3& p) const;
  double surface_area() const;
};

/// A sampled point on a shape's surface. `face` is primitive-specific:
/// boxes 0..5 = +x,-x,+y,-y,+z,-z (local); cylinders 0 side, 1 top, 2 bottom.
struct SurfacePoint {
  Point3 position;
  Point3 normal;
  int primitive = 0;
  int face = 0;
};

/// Ground-truth solid: a single primitive or the union of several.
class GroundTruthShape {
 public:
  explicit GroundTruthShape(Primitive p);
  explicit GroundTruthShape(std::vector<Primitive> members);

  const std::vector<Primitive>& members() const { return members_; }

  /// Area-weighted samples on the outer surface of the union.
  std::vector<SurfacePoint> sample_surface(std::size_t count, std::mt19937_64& rng) const;

 private:
  std::vector<Primitive> members_;
};

double sdf_eval(const GroundTruthShape& shape, const Point3& p);

// The pick-and-place object is a 15.5 x 8.25 x 5.5 cm cuboid resting on the
// table plane z = 0, centered at the origin with its long axis along x.
inline constexpr double kObjectLong = 0.155;
inline constexpr double kObjectMid = 0.0825;
inline constexpr double kObjectShort = 0.055;
/// Target marker distance from the object's center.
inline constexpr double kTargetOffset = 0.22;

/// Lying on its lateral face: 15.5 x 5.5 cm footprint, 8.25 cm tall.
GroundTruthShape make_o1();
/// On its larger base: 15.5 x 8.25 cm footprint, 5.5 cm tall.
GroundTruthShape make_o2();
/// O2 stood upright on its smaller base: 15.5 cm tall.
GroundTruthShape make_o3();

}  // namespace tactile
