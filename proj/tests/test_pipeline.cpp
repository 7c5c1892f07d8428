#include <gtest/gtest.h>

#include "sunvo/eval.hpp"
#include "sunvo/pipeline.hpp"

#include "scenarios.hpp"

using namespace sunvo;

namespace {

double final_error(const RunResult& r, const TrackTable& t)
{
  return (camera_center(r.trajectory.poses.back()) - camera_center(t.truth_poses.back())).norm();
}

}  // namespace

TEST(Pipeline, NoiselessReproducesTruth)
{
  RunConfig cfg;
  const TrackTable t = generate_synthetic(scenarios::noiseless_world(30), cfg.camera);
  const RunResult r = run(cfg, t);
  ASSERT_EQ(r.trajectory.size(), 30u);
  EXPECT_EQ(r.stats.windows_solved, 29);
  const auto m = evaluate(r.trajectory, truth_trajectory(t, cfg));
  EXPECT_LT(m.armse.trans, 1e-6);
  EXPECT_LT(m.armse.rot, 1e-8);
}

TEST(Pipeline, LongerWindows)
{
  for (int n : {3, 5}) {
    RunConfig cfg;
    cfg.window_size = n;
    const TrackTable t = generate_synthetic(scenarios::noiseless_world(20), cfg.camera);
    const RunResult r = run(cfg, t);
    EXPECT_EQ(r.stats.windows_solved, 20 - n + 1);
    EXPECT_LT(evaluate(r.trajectory, truth_trajectory(t, cfg)).armse.trans, 1e-6);
  }
}

TEST(Pipeline, AnchoredAndDeterministic)
{
  RunConfig cfg;
  cfg.initial_pose = Pose{Rotation::exp(Vec3(0.1, 0.2, 0.3)), Vec3(4, 5, 6)};
  cfg.sun.mode = SunMode::oracle;
  auto w = scenarios::noiseless_world(25);
  w.pixel_sigma = 0.5;
  const TrackTable t = generate_synthetic(w, cfg.camera);
  const RunResult a = run(cfg, t);
  const RunResult b = run(cfg, t);
  EXPECT_EQ(a.trajectory.poses[0].rotation.matrix(), cfg.initial_pose->rotation.matrix());
  EXPECT_EQ(a.trajectory.poses[0].translation, cfg.initial_pose->translation);
  for (std::size_t k = 0; k < a.trajectory.size(); ++k) {
    EXPECT_EQ(a.trajectory.poses[k].rotation.matrix(), b.trajectory.poses[k].rotation.matrix());
    EXPECT_EQ(a.trajectory.poses[k].translation, b.trajectory.poses[k].translation);
  }
}

TEST(Pipeline, SunReducesYawBiasDrift)
{
  RunConfig cfg;
  auto w = scenarios::noiseless_world(80);
  w.yaw_bias_deg = 0.1;
  w.sun_direction = world_sun_direction(cfg);
  const TrackTable t = generate_synthetic(w, cfg.camera);
  const RunResult off = run(cfg, t);
  cfg.sun.mode = SunMode::oracle;
  cfg.sun.sigma_deg = 1.0;
  cfg.sun.cadence = 5;
  const RunResult on = run(cfg, t);
  EXPECT_GT(on.stats.sun_accepted, 0);
  EXPECT_LT(final_error(on, t), final_error(off, t));
}

TEST(Pipeline, GatingAudit)
{
  RunConfig cfg;
  cfg.sun.mode = SunMode::oracle;
  cfg.sun.sigma_deg = 40.0;
  cfg.sun.cadence = 1;
  auto w = scenarios::noiseless_world(40);
  w.sun_direction = world_sun_direction(cfg);
  const TrackTable t = generate_synthetic(w, cfg.camera);
  const RunStats s = run(cfg, t).stats;
  EXPECT_EQ(s.sun_generated, 39);  // every frame after the anchor
  EXPECT_EQ(s.sun_accepted + s.sun_rejected(), s.sun_generated);
  EXPECT_GT(s.sun_rejected(), 0);
}

TEST(Pipeline, FileModeUsesDetections)
{
  RunConfig cfg;
  cfg.sun.mode = SunMode::file;
  const TrackTable t = generate_synthetic(scenarios::noiseless_world(12), cfg.camera);
  const UnitVec3 sw = world_sun_direction(cfg);
  std::vector<SunMeasurement> ms;
  for (int k : {2, 7}) ms.push_back(oracle_measurement(t.truth_poses[static_cast<std::size_t>(k)], sw, 0.0, 1, k));
  const RunStats s = run(cfg, t, ms).stats;
  EXPECT_EQ(s.sun_generated, 2);
  EXPECT_EQ(s.sun_accepted, 2);
}

TEST(Pipeline, FrontendFailureAborts)
{
  RunConfig cfg;
  TrackTable t = generate_synthetic(scenarios::noiseless_world(6), cfg.camera);
  TrackTable gap(t.frame_count());
  for (const auto& [id, obs] : t.tracks()) {
    for (const auto& o : obs) {
      if (o.frame <= 2) gap.add(id, o.frame, o.y);
      else gap.add(id + 100000, o.frame, o.y);  // no track survives from frame 2 to 3
    }
  }
  gap.truth_poses = t.truth_poses;
  try {
    run(cfg, gap);
    FAIL();
  } catch (const PipelineAbort& e) {
    EXPECT_EQ(e.stage(), PipelineAbort::Stage::frontend);
    EXPECT_EQ(e.index(), 2);
  }
}

TEST(Pipeline, RejectsBadConfig)
{
  RunConfig cfg;
  cfg.window_size = 1;
  const TrackTable t = generate_synthetic(scenarios::noiseless_world(5), cfg.camera);
  EXPECT_THROW(run(cfg, t), ConfigError);
}
