#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "sunvo/config.hpp"
#include "sunvo/eval.hpp"
#include "sunvo/pipeline.hpp"
#include "sunvo/tracks.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitAbort = 3;

struct Options
{
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string sun_mode;
  std::optional<int> trials;
  std::string tracks;
  std::string truth;
  std::string est_path;
  std::string truth_path;
};

sunvo::json load_root(const Options& o)
{
  return o.config.empty() ? sunvo::json::object() : sunvo::load_json(o.config);
}

void apply_overrides(const Options& o, sunvo::RunConfig& cfg)
{
  if (o.seed) cfg.seed = *o.seed;
  if (!o.sun_mode.empty()) cfg.sun.mode = sunvo::sun_mode_from_string(o.sun_mode);
  if (!o.tracks.empty()) cfg.tracks_path = o.tracks;
  if (!o.truth.empty()) cfg.truth_path = o.truth;
}

std::ofstream open_out(const Options& o, const std::string& name)
{
  fs::create_directories(o.out);
  const fs::path p = fs::path(o.out) / name;
  std::ofstream f(p);
  if (!f) throw sunvo::ConfigError("cannot write " + p.string());
  return f;
}

int cmd_simulate(const Options& o)
{
  const auto root = load_root(o);
  sunvo::RunConfig cfg = sunvo::run_config_from_json(root);
  apply_overrides(o, cfg);
  sunvo::SyntheticWorldConfig world = sunvo::synthetic_config_from_json(root);
  if (o.seed) world.seed = *o.seed;
  world.sun_direction = sunvo::world_sun_direction(cfg);

  const sunvo::TrackTable tracks = sunvo::generate_synthetic(world, cfg.camera);
  auto tf = open_out(o, "tracks.txt");
  sunvo::write_tracks(tf, tracks);
  auto gf = open_out(o, "truth.txt");
  sunvo::write_trajectory(gf, sunvo::truth_trajectory(tracks, cfg));

  // Oracle detections for every frame, usable with --sun-mode file.
  std::vector<sunvo::SunMeasurement> ms;
  const double sigma = sunvo::deg2rad(cfg.sun.sigma_deg);
  for (int k = 0; k < tracks.frame_count(); ++k) {
    const auto seed = sunvo::derive_seed(cfg.seed, 0x73756e, static_cast<std::uint64_t>(k));
    ms.push_back(sunvo::oracle_measurement(tracks.truth_poses[static_cast<std::size_t>(k)], world.sun_direction,
                                           sigma, seed, k));
  }
  auto sf = open_out(o, "sun.txt");
  sunvo::write_sun_detections(sf, ms);
  std::cout << "frames " << tracks.frame_count() << " landmarks " << tracks.landmark_count() << " observations "
            << tracks.observation_count() << '\n';
  return 0;
}

int cmd_run(const Options& o)
{
  sunvo::RunConfig cfg = sunvo::run_config_from_json(load_root(o));
  apply_overrides(o, cfg);
  if (cfg.tracks_path.empty()) throw sunvo::ConfigError("run needs paths.tracks or --tracks");
  sunvo::TrackTable tracks = sunvo::load_tracks(cfg.tracks_path);
  std::vector<sunvo::SunMeasurement> detections;
  if (cfg.sun.mode == sunvo::SunMode::file) {
    if (cfg.sun.detections_path.empty()) throw sunvo::ConfigError("sun mode 'file' needs sun.detections");
    detections = sunvo::load_sun_detections(cfg.sun.detections_path);
  }
  if (!cfg.truth_path.empty()) {
    // Ground truth anchors the first pose and drives the simulated sun modes.
    const auto truth = sunvo::load_trajectory(cfg.truth_path);
    if (static_cast<int>(truth.size()) != tracks.frame_count()) {
      throw sunvo::ConfigError("truth has " + std::to_string(truth.size()) + " poses, tracks have " +
                               std::to_string(tracks.frame_count()) + " frames");
    }
    tracks.truth_poses = truth.poses;
    if (!cfg.initial_pose) cfg.initial_pose = truth.poses.front();
  }

  const sunvo::RunResult res = sunvo::run(cfg, tracks, detections);
  for (const auto& w : res.stats.warnings) std::cerr << "warning: " << w << '\n';
  auto tf = open_out(o, "trajectory.txt");
  sunvo::write_trajectory(tf, res.trajectory);
  const auto& s = res.stats;
  std::cout << "windows " << s.windows_solved << " iterations " << s.solver_iterations << " sun_generated "
            << s.sun_generated << " sun_accepted " << s.sun_accepted << " rejected_cosine " << s.sun_rejected_cosine
            << " rejected_zenith " << s.sun_rejected_zenith << '\n';
  if (!cfg.truth_path.empty()) {
    const auto m = sunvo::evaluate(res.trajectory, sunvo::load_trajectory(cfg.truth_path));
    auto mf = open_out(o, "metrics.csv");
    sunvo::write_metrics_csv(mf, m);
    sunvo::write_metrics_csv(std::cout, m);
  }
  return 0;
}

int cmd_eval(const Options& o)
{
  const auto m = sunvo::evaluate(sunvo::load_trajectory(o.est_path), sunvo::load_trajectory(o.truth_path));
  sunvo::write_metrics_csv(std::cout, m);
  return 0;
}

int cmd_montecarlo(const Options& o)
{
  sunvo::ExperimentConfig cfg = sunvo::experiment_config_from_json(load_root(o));
  apply_overrides(o, cfg.run);
  if (o.seed) cfg.seed = *o.seed;
  if (o.trials) cfg.trials = *o.trials;
  if (!o.sun_mode.empty()) {
    // Paired run of the baseline against the chosen mode.
    cfg.modes = {sunvo::experiment_mode_from_string("off")};
    if (o.sun_mode != "off") cfg.modes.push_back(sunvo::experiment_mode_from_string(o.sun_mode));
  }
  if (cfg.trials < 1) throw sunvo::ConfigError("--trials must be >= 1");
  const auto res = sunvo::monte_carlo(cfg);
  auto f = open_out(o, "montecarlo.csv");
  sunvo::write_experiment_csv(f, res);
  for (const auto& a : res.aggregates) {
    if (a.statistic != "median") continue;
    std::printf("%-14s ok %d/%d  drift %.3f m (%.3f%%)  rot ARMSE %.3e rad\n", a.mode.c_str(), a.trials_ok,
                cfg.trials, a.metrics.drift.meters, a.metrics.drift.percent, a.metrics.armse.rot);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Stereo visual odometry with sun-direction constraints"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sc) {
    sc->add_option("--config", o.config, "JSON configuration file");
    sc->add_option("--seed", o.seed, "Master seed");
    sc->add_option("--out", o.out, "Output directory");
    sc->add_option("--sun-mode", o.sun_mode, "Sun source")->check(CLI::IsMember({"off", "oracle", "bimodal", "file"}));
  };

  auto* sim = app.add_subcommand("simulate", "Generate synthetic tracks, truth and sun detections");
  common(sim);
  auto* run = app.add_subcommand("run", "Run the pipeline on a track file");
  common(run);
  run->add_option("--tracks", o.tracks, "Track file (overrides paths.tracks)");
  run->add_option("--truth", o.truth, "Ground-truth trajectory for metrics and the initial pose");
  auto* ev = app.add_subcommand("eval", "Metrics between an estimated and a ground-truth trajectory");
  ev->add_option("est", o.est_path, "Estimated trajectory")->required();
  ev->add_option("truth", o.truth_path, "Ground-truth trajectory")->required();
  auto* mc = app.add_subcommand("montecarlo", "Paired Monte Carlo experiment");
  common(mc);
  mc->add_option("--trials", o.trials, "Number of trials");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*run) return cmd_run(o);
    if (*ev) return cmd_eval(o);
    if (*mc) return cmd_montecarlo(o);
  } catch (const sunvo::PipelineAbort& e) {
    std::cerr << "pipeline abort: " << e.what() << '\n';
    return kExitAbort;
  } catch (const sunvo::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
