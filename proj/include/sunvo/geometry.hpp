#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>
#include <numbers>

#include "sunvo/error.hpp"

namespace sunvo {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat36 = Eigen::Matrix<double, 3, 6>;

inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Skew-symmetric matrix such that hat(a) * b == a.cross(b).
inline Mat3 hat(const Vec3& a)
{
  Mat3 m;
  m << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
      -a.y(), a.x(), 0.0;
  return m;
}

inline Vec3 vee(const Mat3& m)
{
  return Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)) * 0.5;
}

/// Wraps an angle to [-pi, pi).
inline double wrap_pi(double a)
{
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

/// Wraps an angle to [0, 2pi).
inline double wrap_2pi(double a)
{
  a = std::fmod(a, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  if (a >= 2.0 * kPi) a = 0.0;
  return a;
}

/**
 * Element of SO(3), stored as an orthonormal 3x3 matrix.
 *
 * Construction from an arbitrary matrix goes through from_matrix(), which
 * checks orthonormality, or orthonormalized(), which projects onto SO(3).
 */
class Rotation
{
public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation identity() { return Rotation(); }

  /// Throws ValidationError unless m is orthonormal with det +1 (tol per entry).
  static Rotation from_matrix(const Mat3& m, double tol = 1e-9)
  {
    const Mat3 err = m * m.transpose() - Mat3::Identity();
    if (err.cwiseAbs().maxCoeff() > tol || std::abs(m.determinant() - 1.0) > tol) {
      throw ValidationError("matrix is not a proper rotation");
    }
    return Rotation(m);
  }

  /// Nearest rotation in the Frobenius sense.
  static Rotation orthonormalized(const Mat3& m)
  {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return Rotation(svd.matrixU() * d * svd.matrixV().transpose());
  }

  static Rotation from_quaternion(const Eigen::Quaterniond& q)
  {
    return orthonormalized(q.normalized().toRotationMatrix());
  }

  static Rotation about_x(double a) { return exp(Vec3(a, 0.0, 0.0)); }
  static Rotation about_y(double a) { return exp(Vec3(0.0, a, 0.0)); }
  static Rotation about_z(double a) { return exp(Vec3(0.0, 0.0, a)); }

  /// Rodrigues formula.
  static Rotation exp(const Vec3& w)
  {
    const double theta2 = w.squaredNorm();
    const Mat3 W = hat(w);
    if (theta2 < 1e-16) {
      return orthonormalized(Mat3::Identity() + W + 0.5 * W * W);
    }
    const double theta = std::sqrt(theta2);
    const double a = std::sin(theta) / theta;
    const double b = (1.0 - std::cos(theta)) / theta2;
    return Rotation(Mat3::Identity() + a * W + b * W * W);
  }

  /// Rotation vector with angle in [0, pi]. Handles angles near pi.
  Vec3 log() const
  {
    const double c = std::clamp((m_.trace() - 1.0) * 0.5, -1.0, 1.0);
    const Vec3 v = vee(m_);
    const double s = v.norm();
    const double theta = std::atan2(s, c);
    if (theta < 1e-8) {
      return v * (1.0 + theta * theta / 6.0);
    }
    if (kPi - theta > 1e-4) {
      return v * (theta / s);
    }
    // Near pi: axis from the symmetric part, sign from the skew part.
    const Mat3 B = (m_ + m_.transpose()) * 0.5 - c * Mat3::Identity();
    Eigen::Index col = 0;
    B.diagonal().maxCoeff(&col);
    Vec3 axis = B.col(col).normalized();
    if (axis.dot(v) < 0.0) axis = -axis;
    return axis * theta;
  }

  /// Rotation angle in [0, pi].
  double angle() const
  {
    const double c = std::clamp((m_.trace() - 1.0) * 0.5, -1.0, 1.0);
    return std::atan2(vee(m_).norm(), c);
  }

  const Mat3& matrix() const { return m_; }

  Rotation inverse() const { return Rotation(m_.transpose()); }

  /// Composition. One Newton-Schulz step keeps long products orthonormal.
  Rotation operator*(const Rotation& other) const
  {
    const Mat3 m = m_ * other.m_;
    return Rotation(0.5 * m * (3.0 * Mat3::Identity() - m.transpose() * m));
  }

  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(m_).normalized(); }

  Rotation renormalized() const { return orthonormalized(m_); }

private:
  explicit Rotation(const Mat3& m) : m_(m) {}

  Mat3 m_;
};

/// Rigid transform x -> R x + t. Naming follows T_{a,b}: maps frame b coordinates into frame a.
struct Pose
{
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  Pose inverse() const
  {
    const Rotation rt = rotation.inverse();
    return {rt, -(rt * translation)};
  }

  Pose operator*(const Pose& other) const
  {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
};

inline Vec3 transform_point(const Pose& T, const Vec3& p) { return T * p; }

inline Pose compose(const Pose& a, const Pose& b) { return a * b; }

inline Pose inverse(const Pose& T) { return T.inverse(); }

namespace detail {

// V(theta) = I + b W + c W^2 and its inverse, shared by exp and log.
inline Mat3 se3_left_jacobian(const Vec3& w)
{
  const double theta2 = w.squaredNorm();
  const Mat3 W = hat(w);
  if (theta2 < 1e-12) {
    return Mat3::Identity() + 0.5 * W + W * W / 6.0;
  }
  const double theta = std::sqrt(theta2);
  const double b = (1.0 - std::cos(theta)) / theta2;
  const double c = (theta - std::sin(theta)) / (theta2 * theta);
  return Mat3::Identity() + b * W + c * W * W;
}

inline Mat3 se3_left_jacobian_inverse(const Vec3& w)
{
  const double theta2 = w.squaredNorm();
  const Mat3 W = hat(w);
  if (theta2 < 1e-12) {
    return Mat3::Identity() - 0.5 * W + W * W / 12.0;
  }
  const double theta = std::sqrt(theta2);
  const double k = (1.0 - theta * std::sin(theta) / (2.0 * (1.0 - std::cos(theta)))) / theta2;
  return Mat3::Identity() - 0.5 * W + k * W * W;
}

}  // namespace detail

/// Tangent ordering is (rotation, translation): xi = (w, rho).
inline Pose se3_exp(const Vec6& xi)
{
  const Vec3 w = xi.head<3>();
  const Vec3 rho = xi.tail<3>();
  return {Rotation::exp(w), detail::se3_left_jacobian(w) * rho};
}

/// Inverse of se3_exp. Throws SingularityError when the angle is within 1e-6 of pi.
inline Vec6 se3_log(const Pose& T)
{
  const double angle = T.rotation.angle();
  if (angle >= kPi - 1e-6) {
    throw SingularityError("se3_log: rotation angle too close to pi");
  }
  const Vec3 w = T.rotation.log();
  Vec6 xi;
  xi.head<3>() = w;
  xi.tail<3>() = detail::se3_left_jacobian_inverse(w) * T.translation;
  return xi;
}

/// Unit 3-vector. Constructed only through the checked factories.
class UnitVec3
{
public:
  UnitVec3() : v_(0.0, 0.0, 1.0) {}

  /// Rescales v to unit length; throws ValidationError on a (near) zero vector.
  static UnitVec3 normalize(const Vec3& v)
  {
    const double n = v.norm();
    if (!(n > 1e-300) || !std::isfinite(n)) {
      throw ValidationError("cannot normalize a zero or non-finite vector");
    }
    return UnitVec3(v / n);
  }

  /// Accepts v if its norm is within tol of one, then renormalizes.
  static UnitVec3 checked(const Vec3& v, double tol = 1e-3)
  {
    const double n = v.norm();
    if (!std::isfinite(n) || std::abs(n - 1.0) > tol) {
      throw ValidationError("vector norm " + std::to_string(n) + " is not unit");
    }
    return UnitVec3(v / n);
  }

  const Vec3& vec() const { return v_; }
  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }
  double dot(const UnitVec3& o) const { return v_.dot(o.v_); }

  friend UnitVec3 operator*(const Rotation& r, const UnitVec3& u) { return UnitVec3(r * u.v_); }

private:
  explicit UnitVec3(const Vec3& v) : v_(v) {}

  Vec3 v_;
};

/// Compass azimuth (clockwise from North, East = pi/2) and zenith from Up.
struct AzZen
{
  double azimuth = 0.0;
  double zenith = 0.0;
};

struct AzZenResult
{
  AzZen value;
  bool degenerate_azimuth = false;
};

/// ENU direction (sin az sin zen, cos az sin zen, cos zen).
inline UnitVec3 unitvec_from_azzen(const AzZen& a)
{
  const double sz = std::sin(a.zenith);
  return UnitVec3::normalize(
      Vec3(std::sin(a.azimuth) * sz, std::cos(a.azimuth) * sz, std::cos(a.zenith)));
}

/// At the poles the azimuth is undefined; it is reported as 0 and flagged.
inline AzZenResult azzen_from_unitvec(const UnitVec3& u)
{
  const Vec3& v = u.vec();
  const double horizontal = std::hypot(v.x(), v.y());
  AzZenResult out;
  out.value.zenith = std::atan2(horizontal, v.z());
  if (horizontal < 1e-12) {
    out.value.azimuth = 0.0;
    out.degenerate_azimuth = true;
  } else {
    out.value.azimuth = wrap_2pi(std::atan2(v.x(), v.y()));
  }
  return out;
}

/**
 * Camera axes are x right, y down, z forward. For azimuth/zenith work in a
 * camera frame we use a local "ENU-like" frame: x right as East, z forward as
 * North, -y as Up. Azimuth 0 is therefore straight ahead.
 */
inline Vec3 camera_to_local_enu(const Vec3& c) { return Vec3(c.x(), c.z(), -c.y()); }

inline Vec3 local_enu_to_camera(const Vec3& l) { return Vec3(l.x(), -l.z(), l.y()); }

inline AzZenResult camera_azzen(const UnitVec3& c)
{
  return azzen_from_unitvec(UnitVec3::normalize(camera_to_local_enu(c.vec())));
}

inline UnitVec3 camera_unitvec(const AzZen& a)
{
  return UnitVec3::normalize(local_enu_to_camera(unitvec_from_azzen(a).vec()));
}

}  // namespace sunvo
