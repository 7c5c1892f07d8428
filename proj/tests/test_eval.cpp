#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "sunvo/eval.hpp"

using namespace sunvo;

namespace {

Trajectory line_trajectory(int n)
{
  Trajectory t;
  for (int k = 0; k < n; ++k) {
    t.poses.push_back(camera_pose_in_world(Vec3(0.0, 10.0 * k, 1.5), deg2rad(3.0 * k)));
    t.timestamps.push_back(0.1 * k);
  }
  return t;
}

Trajectory offset_centers(const Trajectory& t, const Vec3& offset)
{
  Trajectory out = t;
  for (auto& p : out.poses) {
    // Move the camera centre, keep the orientation.
    p.translation -= p.rotation * offset;
  }
  return out;
}

}  // namespace

TEST(Eval, IdenticalIsZero)
{
  const Trajectory t = line_trajectory(20);
  const auto m = evaluate(t, t);
  EXPECT_EQ(m.armse.trans, 0.0);
  EXPECT_EQ(m.armse.rot, 0.0);
  EXPECT_EQ(m.drift.meters, 0.0);
  EXPECT_EQ(m.drift.en_percent, 0.0);
}

TEST(Eval, ConstantOffsets)
{
  const Trajectory t = line_trajectory(20);
  const auto a = armse(offset_centers(t, Vec3(3, 4, 0)), t);
  EXPECT_NEAR(a.trans, 5.0, 1e-9);
  EXPECT_NEAR(a.trans_en, 5.0, 1e-9);
  EXPECT_NEAR(a.rot, 0.0, 1e-12);
  const auto b = armse(offset_centers(t, Vec3(0, 0, 2)), t);
  EXPECT_NEAR(b.trans, 2.0, 1e-9);
  EXPECT_NEAR(b.trans_en, 0.0, 1e-9);
}

TEST(Eval, FinalDrift)
{
  const auto d = final_drift(Vec3(13.44, 0.0, 0.0), 2200.0);
  EXPECT_NEAR(d.percent, 0.61, 0.005);
  const auto z = final_drift(Vec3(0, 0, 5), 1000.0);
  EXPECT_DOUBLE_EQ(z.meters, 5.0);
  EXPECT_DOUBLE_EQ(z.percent, 0.5);
  EXPECT_EQ(z.en_meters, 0.0);
  EXPECT_EQ(z.en_percent, 0.0);
  EXPECT_THROW(final_drift(Vec3(1, 0, 0), 0.0), Error);
  EXPECT_NEAR(path_length(line_trajectory(11)), 100.0, 1e-9);
}

TEST(Eval, RotationInvariantUnderCommonRotation)
{
  const Trajectory t = line_trajectory(15);
  Trajectory est = t;
  for (auto& p : est.poses) p.rotation = Rotation::about_x(0.01) * p.rotation;
  const auto a = armse(est, t);
  EXPECT_NEAR(a.rot, 0.01, 1e-9);
  EXPECT_LE(a.trans_en, a.trans + 1e-12);
}

TEST(Eval, LengthMismatch)
{
  EXPECT_THROW(armse(line_trajectory(5), line_trajectory(6)), AlignmentError);
}

TEST(Eval, TrajectoryRoundTrip)
{
  const Trajectory t = line_trajectory(10);
  std::stringstream s;
  write_trajectory(s, t);
  const Trajectory back = parse_trajectory(s);
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    EXPECT_LT((back.poses[k].translation - t.poses[k].translation).norm(), 1e-12);
    EXPECT_LT((back.poses[k].rotation.matrix() - t.poses[k].rotation.matrix()).norm(), 1e-12);
    EXPECT_EQ(back.timestamps[k], t.timestamps[k]);
  }
  std::istringstream bad("0 0 1 2 3 1 0 0 0\n2 0 1 2 3 1 0 0 0\n");
  EXPECT_THROW(parse_trajectory(bad), ParseError);
}

TEST(Eval, Quantiles)
{
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4, 5}, 0.25), 2.0);
  EXPECT_DOUBLE_EQ(quantile({7}, 0.75), 7.0);
}

namespace {

ExperimentConfig small_experiment()
{
  ExperimentConfig e;
  e.world.trajectory.frames = 12;
  e.world.pixel_sigma = 0.5;
  e.trials = 3;
  e.seed = 4;
  e.workers = 2;
  e.modes = {experiment_mode_from_string("off"), experiment_mode_from_string("oracle"),
             experiment_mode_from_string("bimodal_prior")};
  return e;
}

}  // namespace

TEST(Eval, MonteCarloPairedAndCsv)
{
  const ExperimentConfig e = small_experiment();
  const ExperimentResult r = monte_carlo(e);
  EXPECT_EQ(r.trials.size(), 9u);
  EXPECT_EQ(r.aggregates.size(), 6u);
  for (const auto& row : r.trials) EXPECT_TRUE(row.ok) << row.status;

  std::stringstream csv;
  write_experiment_csv(csv, r);
  int lines = 0;
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, kExperimentCsvHeader);
  for (std::string line; std::getline(csv, line);) ++lines;
  EXPECT_EQ(lines, e.trials * 3 + 6);

  // Values survive a text round trip to 12 significant digits.
  std::stringstream again;
  write_experiment_csv(again, r);
  std::getline(again, header);
  std::string line;
  std::getline(again, line);
  std::vector<std::string> cells;
  std::stringstream ls(line);
  for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
  const double v = std::strtod(cells[4].c_str(), nullptr);
  EXPECT_NEAR(v, r.trials[0].metrics.armse.trans, 1e-12 * std::max(1.0, std::abs(v)));

  const ExperimentResult r2 = monte_carlo(e);
  std::stringstream csv2, csv1;
  write_experiment_csv(csv1, r);
  write_experiment_csv(csv2, r2);
  EXPECT_EQ(csv1.str(), csv2.str());
}

TEST(Eval, NoiselessModesAgree)
{
  ExperimentConfig e = small_experiment();
  e.world.pixel_sigma = 0.0;
  e.trials = 1;
  e.modes = {experiment_mode_from_string("off"), experiment_mode_from_string("oracle")};
  e.run.sun.sigma_deg = 0.0;
  e.run.sun.covariance_sigma_deg = 1.0;
  const ExperimentResult r = monte_carlo(e);
  for (const auto& row : r.trials) {
    EXPECT_LT(row.metrics.armse.trans, 1e-6);
    EXPECT_LT(row.metrics.drift.meters, 1e-6);
  }
}

TEST(Eval, UnknownMode)
{
  EXPECT_THROW(experiment_mode_from_string("sometimes"), ConfigError);
}
