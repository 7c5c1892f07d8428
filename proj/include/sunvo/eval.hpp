#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sunvo/error.hpp"
#include "sunvo/geometry.hpp"
#include "sunvo/pipeline.hpp"
#include "sunvo/random.hpp"
#include "sunvo/tracks.hpp"

namespace sunvo {

// ---------------------------------------------------------------------------
// Metrics

struct ArmseResult
{
  double trans = 0.0;     // m
  double trans_en = 0.0;  // m, East-North components only
  double rot = 0.0;       // rad, axis-angle magnitude
};

struct DriftResult
{
  double meters = 0.0;
  double percent = 0.0;
  double en_meters = 0.0;
  double en_percent = 0.0;
};

struct TrajectoryMetrics
{
  ArmseResult armse;
  DriftResult drift;
};

namespace detail {

inline void check_aligned(const Trajectory& est, const Trajectory& truth)
{
  if (est.size() != truth.size() || est.size() == 0) {
    throw AlignmentError("trajectories have " + std::to_string(est.size()) + " and " +
                         std::to_string(truth.size()) + " frames");
  }
  if (est.timestamps.size() != est.size() || truth.timestamps.size() != truth.size()) {
    throw AlignmentError("trajectory timestamps missing");
  }
  for (std::size_t k = 0; k < est.size(); ++k) {
    if (std::abs(est.timestamps[k] - truth.timestamps[k]) > 1e-6) {
      throw AlignmentError("timestamp mismatch at frame " + std::to_string(k));
    }
  }
}

}  // namespace detail

/// Root mean square over frames of camera-centre error and of the angle of R_est R_true^T.
inline ArmseResult armse(const Trajectory& est, const Trajectory& truth)
{
  detail::check_aligned(est, truth);
  double t2 = 0.0;
  double en2 = 0.0;
  double r2 = 0.0;
  for (std::size_t k = 0; k < est.size(); ++k) {
    const Vec3 e = camera_center(est.poses[k]) - camera_center(truth.poses[k]);
    t2 += e.squaredNorm();
    en2 += e.head<2>().squaredNorm();
    const double a = (est.poses[k].rotation * truth.poses[k].rotation.inverse()).angle();
    r2 += a * a;
  }
  const double n = static_cast<double>(est.size());
  return {std::sqrt(t2 / n), std::sqrt(en2 / n), std::sqrt(r2 / n)};
}

/// Sum of consecutive camera-centre distances.
inline double path_length(const Trajectory& truth)
{
  double len = 0.0;
  for (std::size_t k = 1; k < truth.size(); ++k) {
    len += (camera_center(truth.poses[k]) - camera_center(truth.poses[k - 1])).norm();
  }
  return len;
}

/// Drift from a final-frame position error vector (ENU).
inline DriftResult final_drift(const Vec3& final_error, double path_length_m)
{
  if (!(path_length_m > 0.0)) throw ValidationError("path length must be positive");
  DriftResult d;
  d.meters = final_error.norm();
  d.en_meters = final_error.head<2>().norm();
  d.percent = 100.0 * d.meters / path_length_m;
  d.en_percent = 100.0 * d.en_meters / path_length_m;
  return d;
}

inline DriftResult final_drift(const Trajectory& est, const Trajectory& truth, double path_length_m)
{
  detail::check_aligned(est, truth);
  return final_drift(camera_center(est.poses.back()) - camera_center(truth.poses.back()), path_length_m);
}

inline TrajectoryMetrics evaluate(const Trajectory& est, const Trajectory& truth)
{
  return {armse(est, truth), final_drift(est, truth, path_length(truth))};
}

// ---------------------------------------------------------------------------
// Trajectory files: `frame t x y z qw qx qy qz`, camera centre and camera-to-world rotation.

inline void write_trajectory(std::ostream& out, const Trajectory& traj)
{
  out << "# frame t x y z qw qx qy qz\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Vec3 c = camera_center(traj.poses[k]);
    const Eigen::Quaterniond q = traj.poses[k].rotation.inverse().quaternion();
    out << k << ' ' << detail::format_double(traj.timestamps[k]);
    for (double v : {c.x(), c.y(), c.z(), q.w(), q.x(), q.y(), q.z()}) out << ' ' << detail::format_double(v);
    out << '\n';
  }
}

inline Trajectory parse_trajectory(std::istream& in, const std::string& name = "<trajectory>")
{
  Trajectory traj;
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    const auto f = detail::fields_of(line);
    if (f.empty()) continue;
    if (f.size() != 9) {
      throw ParseError(name, lineno, "expected 9 fields 'frame t x y z qw qx qy qz', got " +
                                         std::to_string(f.size()));
    }
    const long long frame = detail::parse_int(f[0], name, lineno);
    if (frame != static_cast<long long>(traj.size())) {
      throw ParseError(name, lineno, "frames must be consecutive from 0");
    }
    double v[8];
    for (int i = 0; i < 8; ++i) v[i] = detail::parse_double(f[static_cast<std::size_t>(i + 1)], name, lineno);
    const Eigen::Quaterniond q(v[4], v[5], v[6], v[7]);
    if (std::abs(q.norm() - 1.0) > 1e-6) throw ParseError(name, lineno, "quaternion is not unit");
    const Rotation r_wc = Rotation::from_quaternion(q);
    const Rotation r_cw = r_wc.inverse();
    traj.poses.push_back({r_cw, -(r_cw * Vec3(v[1], v[2], v[3]))});
    traj.timestamps.push_back(v[0]);
  }
  return traj;
}

inline Trajectory load_trajectory(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return parse_trajectory(in, path);
}

/// Ground-truth trajectory of a synthetic table, timestamped like a pipeline run.
inline Trajectory truth_trajectory(const TrackTable& tracks, const RunConfig& cfg)
{
  if (!tracks.has_truth_poses()) throw ConfigError("tracks carry no ground-truth poses");
  Trajectory t;
  t.poses = tracks.truth_poses;
  for (int k = 0; k < tracks.frame_count(); ++k) t.timestamps.push_back(cfg.ephemeris.unix_seconds + k * cfg.frame_dt);
  return t;
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct ExperimentMode
{
  std::string name;
  SunMode sun = SunMode::off;
  bool vo_prior = true;
};

inline ExperimentMode experiment_mode_from_string(const std::string& name)
{
  if (name == "off") return {name, SunMode::off, false};
  if (name == "oracle") return {name, SunMode::oracle, false};
  if (name == "bimodal") return {name, SunMode::bimodal, false};
  if (name == "bimodal_prior") return {name, SunMode::bimodal, true};
  throw ConfigError("unknown experiment mode '" + name + "' (off, oracle, bimodal, bimodal_prior)");
}

struct ExperimentConfig
{
  RunConfig run;
  SyntheticWorldConfig world;
  int trials = 20;
  std::uint64_t seed = 1;
  std::vector<ExperimentMode> modes{experiment_mode_from_string("off"), experiment_mode_from_string("oracle")};
  int workers = 0;  // 0: hardware concurrency
  // The synthetic sun follows the ephemeris at the run's anchor time.
  bool sun_from_ephemeris = true;
};

struct TrialRow
{
  int trial = 0;
  std::string mode;
  bool ok = false;
  std::string status;  // "ok", "abort:frontend", "abort:solver", "abort:scene"
  TrajectoryMetrics metrics;
  int sun_generated = 0;
  int sun_accepted = 0;
  int sun_rejected = 0;
};

struct AggregateRow
{
  std::string mode;
  std::string statistic;  // "median" or "iqr"
  int trials_ok = 0;
  bool complete = false;
  TrajectoryMetrics metrics;
};

struct ExperimentResult
{
  std::vector<TrialRow> trials;  // trial-major, modes in configured order
  std::vector<AggregateRow> aggregates;

  const TrialRow& row(int trial, const std::string& mode) const
  {
    for (const auto& r : trials) {
      if (r.trial == trial && r.mode == mode) return r;
    }
    throw ValidationError("no row for trial " + std::to_string(trial) + " mode " + mode);
  }
};

/// Type-7 (linear interpolation) quantile; v must be non-empty.
inline double quantile(std::vector<double> v, double q)
{
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

namespace detail {

inline std::vector<double> flatten(const TrajectoryMetrics& m)
{
  return {m.armse.trans,  m.armse.trans_en,     m.armse.rot,         m.drift.meters,
          m.drift.percent, m.drift.en_meters, m.drift.en_percent};
}

inline TrajectoryMetrics unflatten(const std::vector<double>& v)
{
  TrajectoryMetrics m;
  m.armse = {v[0], v[1], v[2]};
  m.drift = {v[3], v[4], v[5], v[6]};
  return m;
}

inline std::vector<TrialRow> run_trial(const ExperimentConfig& cfg, int trial)
{
  std::vector<TrialRow> rows;
  SyntheticWorldConfig world = cfg.world;
  world.seed = derive_seed(cfg.seed, 0x776f726c64, static_cast<std::uint64_t>(trial));
  RunConfig base = cfg.run;
  base.seed = derive_seed(cfg.seed, 0x72756e, static_cast<std::uint64_t>(trial));

  std::optional<TrackTable> tracks;
  std::string scene_status;
  try {
    if (cfg.sun_from_ephemeris) world.sun_direction = world_sun_direction(base);
    tracks = generate_synthetic(world, base.camera);
  } catch (const Error&) {
    scene_status = "abort:scene";
  }

  for (const auto& mode : cfg.modes) {
    TrialRow row;
    row.trial = trial;
    row.mode = mode.name;
    if (!tracks) {
      row.status = scene_status;
      rows.push_back(row);
      continue;
    }
    RunConfig rc = base;
    rc.sun.mode = mode.sun;
    rc.sun.vo_prior = mode.vo_prior;
    if (mode.sun != SunMode::off) rc.sun.world_direction = world.sun_direction;
    try {
      const RunResult res = run(rc, *tracks);
      row.metrics = evaluate(res.trajectory, truth_trajectory(*tracks, rc));
      row.ok = true;
      row.status = "ok";
      row.sun_generated = res.stats.sun_generated;
      row.sun_accepted = res.stats.sun_accepted;
      row.sun_rejected = res.stats.sun_rejected();
    } catch (const PipelineAbort& e) {
      row.status = e.stage() == PipelineAbort::Stage::frontend ? "abort:frontend" : "abort:solver";
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

/**
 * Paired experiment: every trial draws one synthetic scene and runs every
 * mode on the same tracks with the same run seed. Trials run on worker
 * threads; rows are assembled in trial order.
 */
inline ExperimentResult monte_carlo(const ExperimentConfig& cfg)
{
  if (cfg.trials < 1) throw ConfigError("experiment needs at least one trial");
  if (cfg.modes.empty()) throw ConfigError("experiment needs at least one mode");
  cfg.run.validate();
  cfg.world.validate();

  std::vector<std::vector<TrialRow>> per_trial(static_cast<std::size_t>(cfg.trials));
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = std::clamp(cfg.workers > 0 ? cfg.workers : static_cast<int>(hw), 1, cfg.trials);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int t = next++; t < cfg.trials; t = next++) {
      per_trial[static_cast<std::size_t>(t)] = detail::run_trial(cfg, t);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
  }

  ExperimentResult out;
  for (auto& rows : per_trial) {
    for (auto& r : rows) out.trials.push_back(std::move(r));
  }
  for (const auto& mode : cfg.modes) {
    std::vector<std::vector<double>> columns(7);
    int ok = 0;
    for (const auto& r : out.trials) {
      if (r.mode != mode.name || !r.ok) continue;
      ++ok;
      const auto v = detail::flatten(r.metrics);
      for (std::size_t i = 0; i < v.size(); ++i) columns[i].push_back(v[i]);
    }
    std::vector<double> med;
    std::vector<double> iqr;
    for (const auto& c : columns) {
      med.push_back(quantile(c, 0.5));
      iqr.push_back(quantile(c, 0.75) - quantile(c, 0.25));
    }
    out.aggregates.push_back({mode.name, "median", ok, ok == cfg.trials, detail::unflatten(med)});
    out.aggregates.push_back({mode.name, "iqr", ok, ok == cfg.trials, detail::unflatten(iqr)});
  }
  return out;
}

inline constexpr const char* kExperimentCsvHeader =
    "row_type,trial,mode,status,trans_armse_m,trans_armse_en_m,rot_armse_rad,final_drift_m,"
    "final_drift_pct,final_drift_en_m,final_drift_en_pct,sun_generated,sun_accepted,sun_rejected,trials_ok";

/// One row per (trial, mode), then median and IQR rows per mode.
inline void write_experiment_csv(std::ostream& out, const ExperimentResult& res)
{
  auto metrics = [&](const TrajectoryMetrics& m, bool ok) {
    for (double v : detail::flatten(m)) out << ',' << (ok ? detail::format_double(v) : std::string("nan"));
  };
  out << kExperimentCsvHeader << '\n';
  for (const auto& r : res.trials) {
    out << "trial," << r.trial << ',' << r.mode << ',' << r.status;
    metrics(r.metrics, r.ok);
    out << ',' << r.sun_generated << ',' << r.sun_accepted << ',' << r.sun_rejected << ",\n";
  }
  for (const auto& a : res.aggregates) {
    out << a.statistic << ",," << a.mode << ',' << (a.complete ? "complete" : "incomplete");
    metrics(a.metrics, a.trials_ok > 0);
    out << ",,,," << a.trials_ok << '\n';
  }
}

inline void write_metrics_csv(std::ostream& out, const TrajectoryMetrics& m)
{
  out << "trans_armse_m,trans_armse_en_m,rot_armse_rad,final_drift_m,final_drift_pct,final_drift_en_m,"
         "final_drift_en_pct\n";
  bool first = true;
  for (double v : detail::flatten(m)) {
    out << (first ? "" : ",") << detail::format_double(v);
    first = false;
  }
  out << '\n';
}

}  // namespace sunvo
