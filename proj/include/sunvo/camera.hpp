#pragma once

#include <Eigen/Cholesky>

#include "sunvo/error.hpp"
#include "sunvo/geometry.hpp"

namespace sunvo {

/// Rectified stereo pair: identical pinholes separated along x by the baseline.
struct StereoIntrinsics
{
  double fu = 718.856;
  double fv = 718.856;
  double cu = 607.1928;
  double cv = 185.2157;
  double baseline = 0.5372;  // meters
  int width = 1241;
  int height = 376;

  void validate() const
  {
    if (!(fu > 0.0 && fv > 0.0 && baseline > 0.0) || width <= 0 || height <= 0) {
      throw ConfigError("stereo intrinsics must have positive focal lengths, baseline and size");
    }
  }

  bool in_image(double u, double v) const
  {
    return u >= 0.0 && v >= 0.0 && u < static_cast<double>(width) && v < static_cast<double>(height);
  }
};

/// Left-image pixel (u, v) and disparity d, with its covariance in pixels^2.
struct StereoObservation
{
  double u = 0.0;
  double v = 0.0;
  double d = 0.0;
  Mat3 covariance = Mat3::Identity();

  Vec3 vec() const { return Vec3(u, v, d); }

  bool operator==(const StereoObservation& o) const
  {
    return u == o.u && v == o.v && d == o.d && covariance == o.covariance;
  }
};

inline constexpr double kDefaultMinDepth = 1e-6;     // meters
inline constexpr double kDefaultMinDisparity = 0.1;  // pixels

inline Vec3 project_vec(const StereoIntrinsics& K, const Vec3& p, double min_depth = kDefaultMinDepth)
{
  if (!(p.z() > min_depth)) {
    throw BehindCameraError("point at depth " + std::to_string(p.z()) + " is behind the camera");
  }
  const double iz = 1.0 / p.z();
  return Vec3(K.fu * p.x() * iz + K.cu, K.fv * p.y() * iz + K.cv, K.fu * K.baseline * iz);
}

inline StereoObservation project(const StereoIntrinsics& K, const Vec3& p_cam,
                                 double min_depth = kDefaultMinDepth)
{
  const Vec3 y = project_vec(K, p_cam, min_depth);
  return {y.x(), y.y(), y.z(), Mat3::Identity()};
}

inline Vec3 triangulate(const StereoIntrinsics& K, const StereoObservation& y,
                        double min_disparity = kDefaultMinDisparity)
{
  if (!(y.d > min_disparity)) {
    throw DepthError("disparity " + std::to_string(y.d) + " too small to triangulate");
  }
  const double z = K.fu * K.baseline / y.d;
  return Vec3((y.u - K.cu) * z / K.fu, (y.v - K.cv) * z / K.fv, z);
}

/// d(u, v, d) / d(x, y, z).
inline Mat3 project_jacobian(const StereoIntrinsics& K, const Vec3& p,
                             double min_depth = kDefaultMinDepth)
{
  if (!(p.z() > min_depth)) {
    throw BehindCameraError("point at depth " + std::to_string(p.z()) + " is behind the camera");
  }
  const double iz = 1.0 / p.z();
  const double iz2 = iz * iz;
  Mat3 J;
  J << K.fu * iz, 0.0, -K.fu * p.x() * iz2,
       0.0, K.fv * iz, -K.fv * p.y() * iz2,
       0.0, 0.0, -K.fu * K.baseline * iz2;
  return J;
}

/// Upper-triangular W with W^T W = cov^-1. Throws ConfigError unless cov is SPD.
inline Mat3 sqrt_information(const Mat3& cov)
{
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + cov.cwiseAbs().maxCoeff())) {
    throw ConfigError("covariance is not symmetric");
  }
  Eigen::LLT<Mat3> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("covariance is not positive definite");
  }
  const Mat3 L = llt.matrixL();
  return L.triangularView<Eigen::Lower>().solve(Mat3::Identity());
}

}  // namespace sunvo
