#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <utility>

namespace turnkit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Infinite line through `point` along unit `direction`. Lengths in mm.
struct Axis {
  Vec3 point = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();

  /// Normalizes `direction`; throws turnkit::Error on a (near) zero vector.
  static Axis make(const Vec3& point, const Vec3& direction);

  /// Machine spindle axis: the z-axis through the origin.
  static Axis spindle() { return Axis{}; }

  /// Same line, direction flipped into the canonical hemisphere and the point
  /// moved to the foot of the perpendicular from the origin.
  Axis canonical() const;
};

/// Angle between two lines, in [0, pi/2]. Direction sign is ignored.
double line_angle(const Vec3& a, const Vec3& b);

/// Deterministic orthonormal pair (u, v) with u x v = d.
std::pair<Vec3, Vec3> orthonormal_basis(const Vec3& d);

/// Proper rigid motion x -> R x + t.
class RigidTransform {
 public:
  RigidTransform() = default;
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform translation(const Vec3& t);
  /// Rotation by `angle` about the line through `pivot` along `direction`.
  static RigidTransform rotation(const Vec3& direction, double angle,
                                 const Vec3& pivot = Vec3::Zero());
  /// Minimal rotation taking unit `from` onto unit `to` (about the origin).
  static RigidTransform align(const Vec3& from, const Vec3& to);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 apply_direction(const Vec3& d) const { return rotation_ * d; }
  Axis apply(const Axis& a) const;

  /// (this * other)(x) = this(other(x)).
  RigidTransform operator*(const RigidTransform& other) const;
  RigidTransform inverse() const;

  bool is_approx(const RigidTransform& other, double tol = 1e-9) const;

 private:
  Mat3 rotation_ = Mat3::Identity();
  Vec3 translation_ = Vec3::Zero();
};

}  // namespace turnkit
