#include <gtest/gtest.h>

#include <random>

#include "sunvo/camera.hpp"
#include "sunvo/error.hpp"

using namespace sunvo;

namespace {

StereoIntrinsics small_camera()
{
  StereoIntrinsics K;
  K.fu = K.fv = 100.0;
  K.cu = K.cv = 50.0;
  K.baseline = 0.5;
  K.width = K.height = 100;
  return K;
}

}  // namespace

TEST(Camera, ProjectByHand)
{
  const auto y = project(small_camera(), Vec3(1, 1, 2));
  EXPECT_DOUBLE_EQ(y.u, 100.0);
  EXPECT_DOUBLE_EQ(y.v, 100.0);
  EXPECT_DOUBLE_EQ(y.d, 25.0);
}

TEST(Camera, OpticalAxis)
{
  const auto K = small_camera();
  const auto y = project(K, Vec3(0, 0, 4));
  EXPECT_EQ(y.u, K.cu);
  EXPECT_EQ(y.v, K.cv);
  EXPECT_DOUBLE_EQ(y.d, K.fu * K.baseline / 4.0);
  EXPECT_THROW(project(K, Vec3(0, 0, -1)), BehindCameraError);
}

TEST(Camera, Triangulate)
{
  const auto K = small_camera();
  const Vec3 p = triangulate(K, {100.0, 100.0, 25.0});
  EXPECT_LT((p - Vec3(1, 1, 2)).norm(), 1e-15);
  const Vec3 axis = triangulate(K, {K.cu, K.cv, 10.0});
  EXPECT_EQ(axis.x(), 0.0);
  EXPECT_EQ(axis.y(), 0.0);
  EXPECT_DOUBLE_EQ(axis.z(), 5.0);
  EXPECT_THROW(triangulate(K, {50.0, 50.0, 0.0}), DepthError);
}

TEST(Camera, RoundTripAndPositiveDisparity)
{
  const StereoIntrinsics K;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> xy(-20.0, 20.0), z(1.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p(xy(rng), xy(rng), z(rng));
    const auto y = project(K, p);
    EXPECT_GT(y.d, 0.0);
    EXPECT_LT((triangulate(K, y) - p).norm(), 1e-9);
  }
}

TEST(Camera, JacobianMatchesFiniteDifferences)
{
  const StereoIntrinsics K;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> xy(-20.0, 20.0), z(1.0, 50.0);
  const double h = 1e-6;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p(xy(rng), xy(rng), z(rng));
    const Mat3 J = project_jacobian(K, p);
    Mat3 fd;
    for (int c = 0; c < 3; ++c) {
      Vec3 dp = Vec3::Zero();
      dp(c) = h;
      fd.col(c) = (project_vec(K, p + dp) - project_vec(K, p - dp)) / (2.0 * h);
    }
    EXPECT_LT((J - fd).norm() / J.norm(), 1e-5) << i;
    EXPECT_EQ(J(2, 0), 0.0);
    EXPECT_EQ(J(2, 1), 0.0);
  }
  const Mat3 Ja = project_jacobian(K, Vec3(0, 0, 3));
  EXPECT_EQ(Ja(0, 1), 0.0);
  EXPECT_EQ(Ja(1, 0), 0.0);
}

TEST(Camera, SqrtInformationWhitens)
{
  Mat3 cov;
  cov << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  const Mat3 W = sqrt_information(cov);
  EXPECT_LT((W * cov * W.transpose() - Mat3::Identity()).norm(), 1e-12);
  Mat3 bad = Mat3::Identity();
  bad(2, 2) = -1.0;
  EXPECT_THROW(sqrt_information(bad), ConfigError);
}
