#pragma once

#include <random>

#include "sunvo/solver.hpp"

namespace sunvo::fixtures {

/// Noiseless window of `n` poses driving forward, initialized at truth.
inline WindowProblem truth_window(int n = 3, int landmarks = 60, std::uint64_t seed = 3)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> xy(-8.0, 8.0), z(6.0, 30.0);
  WindowProblem p;
  for (int k = 0; k < n; ++k) {
    p.poses.push_back({Rotation::exp(Vec3(0.0, 0.01 * k, 0.002 * k)), Vec3(0.02 * k, 0.0, -1.0 * k)});
  }
  p.poses[0] = Pose::identity();
  while (static_cast<int>(p.landmarks.size()) < landmarks) {
    const Vec3 l(xy(rng), 0.3 * xy(rng), z(rng));
    const int id = static_cast<int>(p.landmarks.size());
    p.landmarks.push_back(l);
    for (int k = 0; k < n; ++k) {
      const Vec3 y = project_vec(p.camera, p.poses[static_cast<std::size_t>(k)] * l);
      p.observations.push_back({k, id, {y.x(), y.y(), y.z(), Mat3::Identity()}});
    }
  }
  p.base_to_world = {Rotation::exp(Vec3(0.1, -0.4, 0.05)), Vec3(3, 1, -2)};
  p.sun_world = UnitVec3::normalize(Vec3(0.3, -0.5, 0.8));
  return p;
}

/// Exact sun measurement for pose k of the window.
inline SunMeasurement exact_sun(const WindowProblem& p, int k, double sigma_rad)
{
  SunMeasurement m;
  m.frame = k;
  m.direction = predict_sun(p.poses[static_cast<std::size_t>(k)], p.base_to_world, p.sun_world);
  m.covariance = Mat3::Identity() * sigma_rad * sigma_rad;
  return m;
}

}  // namespace sunvo::fixtures
