#include "turnkit/geometry.hpp"

#include "turnkit/error.hpp"

#include <algorithm>
#include <cmath>

namespace turnkit {
namespace {

// Rotation factories snap near-exact entries so that quarter turns and
// half turns are exact signed permutations.
Mat3 snap(Mat3 m) {
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      double& x = m(r, c);
      if (std::abs(x) < 1e-14) x = 0.0;
      else if (std::abs(x - 1.0) < 1e-14) x = 1.0;
      else if (std::abs(x + 1.0) < 1e-14) x = -1.0;
    }
  }
  return m;
}

}  // namespace

Axis Axis::make(const Vec3& point, const Vec3& direction) {
  const double n = direction.norm();
  if (!(n > 1e-12)) throw Error("axis direction must be non-zero");
  return Axis{point, direction / n};
}

Axis Axis::canonical() const {
  Vec3 d = direction;
  const double eps = 1e-12;
  const bool flip = d.z() < -eps || (std::abs(d.z()) <= eps && d.y() < -eps) ||
                    (std::abs(d.z()) <= eps && std::abs(d.y()) <= eps && d.x() < 0);
  if (flip) d = -d;
  const Vec3 foot = point - point.dot(d) * d;
  return Axis{foot, d};
}

double line_angle(const Vec3& a, const Vec3& b) {
  const double c = std::abs(a.normalized().dot(b.normalized()));
  return std::acos(std::clamp(c, 0.0, 1.0));
}

std::pair<Vec3, Vec3> orthonormal_basis(const Vec3& d) {
  const Vec3 n = d.normalized();
  int smallest = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(n[i]) < std::abs(n[smallest])) smallest = i;
  }
  const Vec3 helper = Vec3::Unit(smallest);
  Vec3 u = (helper - helper.dot(n) * n).normalized();
  Vec3 v = n.cross(u);
  return {u, v};
}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (std::abs(rotation_.determinant() - 1.0) > 1e-9 ||
      !(rotation_ * rotation_.transpose()).isApprox(Mat3::Identity(), 1e-9)) {
    throw Error("rigid transform rotation must be orthonormal with determinant +1");
  }
}

RigidTransform RigidTransform::translation(const Vec3& t) {
  return RigidTransform(Mat3::Identity(), t);
}

RigidTransform RigidTransform::rotation(const Vec3& direction, double angle, const Vec3& pivot) {
  const Mat3 r = snap(Eigen::AngleAxisd(angle, direction.normalized()).toRotationMatrix());
  return RigidTransform(r, pivot - r * pivot);
}

RigidTransform RigidTransform::align(const Vec3& from, const Vec3& to) {
  const Vec3 a = from.normalized();
  const Vec3 b = to.normalized();
  if (a == b) return identity();
  if (a.dot(b) < -1.0 + 1e-15) {
    return rotation(orthonormal_basis(a).first, M_PI);
  }
  const Mat3 r = snap(Eigen::Quaterniond::FromTwoVectors(a, b).toRotationMatrix());
  return RigidTransform(r, Vec3::Zero());
}

Axis RigidTransform::apply(const Axis& a) const {
  return Axis{apply(a.point), apply_direction(a.direction)};
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
  RigidTransform out;
  out.rotation_ = rotation_ * other.rotation_;
  out.translation_ = rotation_ * other.translation_ + translation_;
  return out;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform out;
  out.rotation_ = rotation_.transpose();
  out.translation_ = -(out.rotation_ * translation_);
  return out;
}

bool RigidTransform::is_approx(const RigidTransform& other, double tol) const {
  return (rotation_ - other.rotation_).cwiseAbs().maxCoeff() <= tol &&
         (translation_ - other.translation_).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace turnkit
