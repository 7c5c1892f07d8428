#include <gtest/gtest.h>

#include <random>

#include "sunvo/error.hpp"
#include "sunvo/geometry.hpp"

using namespace sunvo;

namespace {

Vec3 random_axis_angle(std::mt19937_64& rng, double max_angle)
{
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> a(0.0, max_angle);
  return Vec3(n(rng), n(rng), n(rng)).normalized() * a(rng);
}

Pose random_pose(std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> t(-10.0, 10.0);
  return {Rotation::exp(random_axis_angle(rng, 3.0)), Vec3(t(rng), t(rng), t(rng))};
}

double pose_distance(const Pose& a, const Pose& b)
{
  return (a.rotation.matrix() - b.rotation.matrix()).norm() + (a.translation - b.translation).norm();
}

}  // namespace

TEST(Geometry, ExpZeroIsIdentity)
{
  const Pose T = se3_exp(Vec6::Zero());
  EXPECT_EQ(T.rotation.matrix(), Mat3::Identity());
  EXPECT_EQ(T.translation, Vec3::Zero());
}

TEST(Geometry, QuarterTurnAboutZ)
{
  Vec6 xi = Vec6::Zero();
  xi(2) = kPi / 2.0;
  const Pose T = se3_exp(xi);
  Mat3 expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LT((T.rotation.matrix() - expected).norm(), 1e-15);
  EXPECT_LT(T.translation.norm(), 1e-15);
}

TEST(Geometry, LogExpRoundTrip)
{
  Vec6 xi;
  xi << 0.1, -0.2, 0.3, 1.0, 2.0, 3.0;
  EXPECT_LT((se3_log(se3_exp(xi)) - xi).norm(), 1e-10);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    Vec6 x;
    x.head<3>() = random_axis_angle(rng, 3.0);
    x.tail<3>() = Vec3(n(rng), n(rng), n(rng));
    EXPECT_LT((se3_log(se3_exp(x)) - x).norm(), 1e-9) << i;
  }
}

TEST(Geometry, LogNearPiIsSingular)
{
  Vec6 xi = Vec6::Zero();
  xi(0) = kPi - 1e-8;
  EXPECT_THROW(se3_log(se3_exp(xi)), SingularityError);
}

TEST(Geometry, ComposeAssociativeAndInverse)
{
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    EXPECT_LT(pose_distance((a * b) * c, a * (b * c)), 1e-9);
    EXPECT_LT(pose_distance(a.inverse().inverse(), a), 1e-12);
    EXPECT_LT(pose_distance(a * a.inverse(), Pose::identity()), 1e-12);
  }
}

TEST(Geometry, LongProductsStayOrthonormal)
{
  std::mt19937_64 rng(3);
  Rotation r;
  for (int i = 0; i < 10000; ++i) r = r * Rotation::exp(random_axis_angle(rng, 0.1));
  EXPECT_LT((r.matrix().transpose() * r.matrix() - Mat3::Identity()).norm(), 1e-13);
}

TEST(Geometry, FromMatrixRejectsReflection)
{
  EXPECT_THROW(Rotation::from_matrix(-Mat3::Identity()), ValidationError);
}

TEST(Geometry, AzZenAnchors)
{
  const UnitVec3 north = unitvec_from_azzen({0.0, kPi / 2.0});
  EXPECT_LT((north.vec() - Vec3(0, 1, 0)).norm(), 1e-15);
  const UnitVec3 up = unitvec_from_azzen({1.0, 0.0});
  EXPECT_LT((up.vec() - Vec3(0, 0, 1)).norm(), 1e-15);
  const UnitVec3 east = unitvec_from_azzen({kPi / 2.0, kPi / 2.0});
  EXPECT_LT((east.vec() - Vec3(1, 0, 0)).norm(), 1e-15);

  const AzZenResult r = azzen_from_unitvec(UnitVec3::normalize(Vec3(0, 0, 1)));
  EXPECT_TRUE(r.degenerate_azimuth);
  EXPECT_EQ(r.value.azimuth, 0.0);
  EXPECT_EQ(r.value.zenith, 0.0);
}

TEST(Geometry, AzZenRoundTrip)
{
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> az(0.0, 2.0 * kPi), zen(0.01, kPi - 0.01);
  for (int i = 0; i < 1000; ++i) {
    const AzZen a{az(rng), zen(rng)};
    const AzZenResult b = azzen_from_unitvec(unitvec_from_azzen(a));
    EXPECT_FALSE(b.degenerate_azimuth);
    EXPECT_LT(std::abs(wrap_pi(b.value.azimuth - a.azimuth)), 1e-9);
    EXPECT_LT(std::abs(b.value.zenith - a.zenith), 1e-9);
  }
}

TEST(Geometry, CameraAzimuthZeroIsForward)
{
  const UnitVec3 fwd = camera_unitvec({0.0, kPi / 2.0});
  EXPECT_LT((fwd.vec() - Vec3(0, 0, 1)).norm(), 1e-15);
  const UnitVec3 up = camera_unitvec({0.0, 0.0});
  EXPECT_LT((up.vec() - Vec3(0, -1, 0)).norm(), 1e-15);
}

TEST(Geometry, UnitVecChecked)
{
  EXPECT_NO_THROW(UnitVec3::checked(Vec3(0, 0, 1.0005)));
  EXPECT_THROW(UnitVec3::checked(Vec3(0, 0, 2)), ValidationError);
  EXPECT_THROW(UnitVec3::normalize(Vec3::Zero()), ValidationError);
}
