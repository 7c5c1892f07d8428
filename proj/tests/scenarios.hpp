#pragma once

// Synthetic scenarios shared by the unit tests and the acceptance run.

#include "sunvo/eval.hpp"
#include "sunvo/pipeline.hpp"
#include "sunvo/tracks.hpp"

namespace sunvo::scenarios {

/// Straight drive, no noise.
inline SyntheticWorldConfig noiseless_world(int frames = 50, std::uint64_t seed = 11)
{
  SyntheticWorldConfig w;
  w.trajectory.frames = frames;
  w.landmark_count = 200;
  w.pixel_sigma = 0.0;
  w.seed = seed;
  return w;
}

/// 300 frames with two 90 degree left turns, per-frame yaw noise and pixel noise.
inline SyntheticWorldConfig drift_world()
{
  SyntheticWorldConfig w;
  w.trajectory.frames = 300;
  w.trajectory.step_m = 1.0;
  w.trajectory.turns = {{90, 20, 90.0}, {200, 20, 90.0}};
  w.landmark_count = 200;
  w.pixel_sigma = 0.5;
  w.yaw_noise_deg = 0.05;
  return w;
}

// R_s used in the drift experiments: the oracle noise is 5 degrees, but the
// fixed window base makes a faithful R_s too weak to move the newest pose.
inline constexpr double kDriftCovarianceSigmaDeg = 0.1;

inline ExperimentConfig drift_experiment(std::uint64_t seed = 7)
{
  ExperimentConfig e;
  e.world = drift_world();
  e.run.obs_sigma_px = 0.5;
  e.run.sun.sigma_deg = 5.0;
  e.run.sun.cadence = 5;
  e.run.sun.covariance_sigma_deg = kDriftCovarianceSigmaDeg;
  e.trials = 20;
  e.seed = seed;
  e.modes = {experiment_mode_from_string("off"), experiment_mode_from_string("oracle")};
  return e;
}

/// Drift scenario with an additional systematic yaw bias for the bimodal comparison.
inline ExperimentConfig bimodal_experiment(std::uint64_t seed = 7)
{
  ExperimentConfig e = drift_experiment(seed);
  e.world.yaw_bias_deg = 0.05;
  e.modes = {experiment_mode_from_string("bimodal"), experiment_mode_from_string("bimodal_prior")};
  return e;
}

}  // namespace sunvo::scenarios
