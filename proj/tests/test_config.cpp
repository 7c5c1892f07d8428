#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <unistd.h>

#include "sunvo/config.hpp"

using namespace sunvo;

namespace fs = std::filesystem;

TEST(Config, EmptyIsDefaults)
{
  const RunConfig cfg = run_config_from_json(json::object());
  EXPECT_EQ(cfg.window_size, 2);
  EXPECT_EQ(cfg.sun.cadence, 5);
  EXPECT_EQ(cfg.sun.cos_gate, 0.3);
  EXPECT_EQ(cfg.sun.prior_sigma_azimuth_deg, 60.0);
  EXPECT_EQ(cfg.sun.prior_sigma_zenith_deg, 15.0);
  EXPECT_EQ(cfg.ransac.iterations, 200);
  EXPECT_EQ(cfg.solver.max_iters, 50);
  EXPECT_FALSE(cfg.initial_pose.has_value());
}

TEST(Config, ReadsSections)
{
  const json j = json::parse(R"({
    "window_size": 3,
    "camera": {"fu": 500, "obs_sigma_px": 0.5},
    "sun": {"source": "bimodal", "vo_prior": false, "cadence": 2,
            "bimodal": {"wrong_mode_probability": 0.25}},
    "ephemeris": {"lat": 10, "lon": 20, "t0": "2011-09-30T12:00:00Z"},
    "initial_pose": {"position": [1, 2, 3], "quaternion": [1, 0, 0, 0]}
  })");
  const RunConfig cfg = run_config_from_json(j);
  EXPECT_EQ(cfg.window_size, 3);
  EXPECT_EQ(cfg.camera.fu, 500.0);
  EXPECT_EQ(cfg.obs_sigma_px, 0.5);
  EXPECT_EQ(cfg.sun.mode, SunMode::bimodal);
  EXPECT_FALSE(cfg.sun.vo_prior);
  EXPECT_EQ(cfg.sun.bimodal.wrong_mode_probability, 0.25);
  EXPECT_EQ(cfg.ephemeris.unix_seconds, 1317384000.0);
  ASSERT_TRUE(cfg.initial_pose.has_value());
  EXPECT_LT((camera_center(*cfg.initial_pose) - Vec3(1, 2, 3)).norm(), 1e-15);
}

TEST(Config, UnknownKeysAreErrors)
{
  EXPECT_THROW(run_config_from_json(json::parse(R"({"windowsize": 3})")), ConfigError);
  EXPECT_THROW(run_config_from_json(json::parse(R"({"sun": {"cadance": 3}})")), ConfigError);
  EXPECT_THROW(synthetic_config_from_json(json::parse(R"({"synthetic": {"frame": 3}})")), ConfigError);
  try {
    run_config_from_json(json::parse(R"({"ransac": {"treshold_px": 1}})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("ransac.treshold_px"), std::string::npos);
  }
}

TEST(Config, InvalidValues)
{
  EXPECT_THROW(run_config_from_json(json::parse(R"({"window_size": 1})")), ConfigError);
  EXPECT_THROW(run_config_from_json(json::parse(R"({"window_size": "two"})")), ConfigError);
  EXPECT_THROW(run_config_from_json(json::parse(R"({"sun": {"source": "moon"}})")), ConfigError);
  EXPECT_THROW(run_config_from_json(json::parse(R"({"ephemeris": {"t0": "yesterday"}})")), ConfigError);
  EXPECT_THROW(run_config_from_json(json::parse(R"({"ephemeris": {"lat": 95}})")), ConfigError);
}

TEST(Config, Timestamps)
{
  EXPECT_EQ(detail::days_from_civil(1970, 1, 1), 0);
  EXPECT_EQ(detail::days_from_civil(2000, 3, 1), 11017);
  EXPECT_EQ(detail::parse_timestamp(json("1970-01-02T00:00:01Z"), "t"), 86401.0);
  EXPECT_EQ(detail::parse_timestamp(json(12.5), "t"), 12.5);
}

TEST(Config, ShippedConfigParses)
{
  const json root = load_json(SUNVO_CONFIG_DIR "/drift.json");
  const ExperimentConfig e = experiment_config_from_json(root);
  EXPECT_EQ(e.trials, 20);
  EXPECT_EQ(e.world.trajectory.frames, 300);
  ASSERT_EQ(e.world.trajectory.turns.size(), 2u);
  EXPECT_EQ(e.world.trajectory.turns[1].start_frame, 200);
  EXPECT_EQ(e.run.sun.mode, SunMode::oracle);
  ASSERT_EQ(e.modes.size(), 2u);
  EXPECT_EQ(e.modes[1].name, "oracle");
}

namespace {

int run_cli(const std::string& args)
{
  const std::string cmd = std::string(SUNVO_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Cli, ExitCodes)
{
  const fs::path dir = fs::temp_directory_path() / ("sunvo_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  {
    std::ofstream(dir / "small.json") << R"({"synthetic": {"frames": 15}, "sun": {"source": "oracle"}})";
    std::ofstream(dir / "anchored.json") << R"({"initial_pose": {"position": [0, 0, 0], "quaternion": [1, 0, 0, 0]}})";
    std::ofstream(dir / "bad.json") << R"({"sun": {"colour": "yellow"}})";
  }
  const std::string d = dir.string();
  EXPECT_EQ(run_cli("simulate --config " + d + "/small.json --out " + d), 0);
  EXPECT_TRUE(fs::exists(dir / "tracks.txt"));
  EXPECT_EQ(run_cli("run --config " + d + "/small.json --tracks " + d + "/tracks.txt --truth " + d +
                    "/truth.txt --out " + d),
            0);
  EXPECT_TRUE(fs::exists(dir / "metrics.csv"));
  EXPECT_EQ(run_cli("eval " + d + "/trajectory.txt " + d + "/truth.txt"), 0);
  EXPECT_EQ(run_cli("run --config " + d + "/bad.json --tracks " + d + "/tracks.txt"), 2);
  EXPECT_EQ(run_cli("run --tracks " + d + "/missing.txt"), 2);
  EXPECT_EQ(run_cli("fly"), 2);

  // A track file whose frames share no landmarks aborts in the frontend.
  {
    std::ofstream f(dir / "broken.txt");
    f << "0 1 600 180 20\n0 2 500 100 10\n0 3 700 200 15\n1 4 600 180 20\n";
  }
  EXPECT_EQ(run_cli("run --config " + d + "/anchored.json --tracks " + d + "/broken.txt --out " + d), 3);
  fs::remove_all(dir);
}
