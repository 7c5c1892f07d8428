#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sunvo/camera.hpp"
#include "sunvo/error.hpp"
#include "sunvo/frontend.hpp"
#include "sunvo/geometry.hpp"
#include "sunvo/solver.hpp"
#include "sunvo/sun.hpp"
#include "sunvo/tracks.hpp"

namespace sunvo {

enum class SunMode { off, oracle, bimodal, file };

inline std::string_view to_string(SunMode m)
{
  switch (m) {
    case SunMode::off: return "off";
    case SunMode::oracle: return "oracle";
    case SunMode::bimodal: return "bimodal";
    case SunMode::file: return "file";
  }
  return "unknown";
}

inline SunMode sun_mode_from_string(std::string_view s)
{
  if (s == "off") return SunMode::off;
  if (s == "oracle") return SunMode::oracle;
  if (s == "bimodal") return SunMode::bimodal;
  if (s == "file") return SunMode::file;
  throw ConfigError("unknown sun mode '" + std::string(s) + "'");
}

struct SunSettings
{
  SunMode mode = SunMode::off;
  bool vo_prior = true;  // bimodal only: resolve the two modes with the VO-informed prior
  int cadence = 5;       // oracle/bimodal: measure frames with index % cadence == 0
  double cos_gate = kDefaultCosineGate;
  double y_gate = kDefaultYGate;
  double sigma_deg = 5.0;  // oracle angular noise
  // Standard deviation behind R_s for simulated measurements; sigma_deg when unset.
  std::optional<double> covariance_sigma_deg;
  BimodalConfig bimodal;
  double prior_sigma_azimuth_deg = 60.0;
  double prior_sigma_zenith_deg = 15.0;
  std::string detections_path;
  double max_static_duration_s = 600.0;
  std::optional<UnitVec3> world_direction;  // overrides the ephemeris

  double covariance_sigma_rad() const { return deg2rad(covariance_sigma_deg.value_or(sigma_deg)); }
};

struct RunConfig
{
  int window_size = 2;
  double frame_dt = 0.1;
  std::uint64_t seed = 1;
  StereoIntrinsics camera;
  double obs_sigma_px = 1.0;  // R_y = obs_sigma_px^2 I
  RansacConfig ransac;
  SolveOptions solver;
  SunSettings sun;
  EphemerisQuery ephemeris{49.0, 8.4, 1317384000.0};  // 2011-09-30T12:00:00Z, Karlsruhe
  std::optional<Pose> initial_pose;                   // T_{1,w}; ground truth pose 0 when unset
  std::string tracks_path;
  std::string truth_path;

  void validate() const
  {
    if (window_size < 2) throw ConfigError("window_size must be >= 2");
    if (!(frame_dt > 0.0)) throw ConfigError("frame_dt must be > 0");
    if (!(obs_sigma_px > 0.0)) throw ConfigError("camera.obs_sigma_px must be > 0");
    if (sun.cadence < 1) throw ConfigError("sun.cadence must be >= 1");
    if (!(sun.cos_gate > 0.0) || !(sun.y_gate > 0.0)) throw ConfigError("sun gates must be > 0");
    if (!(sun.sigma_deg >= 0.0)) throw ConfigError("sun.sigma_deg must be >= 0");
    if (!(sun.covariance_sigma_rad() > 0.0)) throw ConfigError("sun covariance sigma must be > 0");
    if (solver.max_iters < 0 || !(solver.lambda0 > 0.0)) throw ConfigError("invalid solver options");
    camera.validate();
    ransac.validate();
    sun.bimodal.validate();
    ephemeris.validate();
  }
};

/// World-to-camera poses T_{k,w} with timestamps.
struct Trajectory
{
  std::vector<Pose> poses;
  std::vector<double> timestamps;

  std::size_t size() const { return poses.size(); }
};

struct RunStats
{
  int windows_solved = 0;
  int solver_iterations = 0;
  int dropped_observations = 0;
  int sun_generated = 0;
  int sun_accepted = 0;
  int sun_rejected_cosine = 0;
  int sun_rejected_zenith = 0;
  int sun_terms_used = 0;         // summed over windows
  int bimodal_wrong_selected = 0; // bimodal mode: the 180-degree twin was chosen
  std::vector<std::string> warnings;

  int sun_rejected() const { return sun_rejected_cosine + sun_rejected_zenith; }
};

struct RunResult
{
  Trajectory trajectory;
  RunStats stats;
};

/// Resolves s_w: explicit override or the ephemeris at the first timestamp.
inline UnitVec3 world_sun_direction(const RunConfig& cfg)
{
  if (cfg.sun.world_direction) return *cfg.sun.world_direction;
  return solar_ephemeris(cfg.ephemeris);
}

namespace detail {

inline bool contains_sorted(const std::vector<LandmarkId>& v, LandmarkId id)
{
  return std::binary_search(v.begin(), v.end(), id);
}

}  // namespace detail

/**
 * Sliding-window stereo VO. Each window of N frames has its first frame as
 * base b; its initial guess compounds RANSAC interframe motions (or reuses
 * already committed poses), landmarks are RANSAC inliers triangulated from
 * their first window frame, and sun measurements on the cadence are gated
 * once against the initial guess. After the solve, T_{k,w} = T_{k,b} T_{b,w}
 * is committed for the newest frame (all frames in the first window), where
 * T_{b,w} is the committed pose of the base frame.
 *
 * `detections` supplies measurements for SunMode::file; it is indexed by
 * frame and cadence does not apply to it.
 */
inline RunResult run(const RunConfig& cfg, const TrackTable& tracks,
                     const std::vector<SunMeasurement>& detections = {})
{
  cfg.validate();
  const int F = tracks.frame_count();
  const int N = cfg.window_size;
  if (F < N) {
    throw ConfigError("tracks cover " + std::to_string(F) + " frames, window needs " + std::to_string(N));
  }

  RunResult result;
  RunStats& stats = result.stats;

  Pose anchor;
  if (cfg.initial_pose) {
    anchor = *cfg.initial_pose;
  } else if (!tracks.truth_poses.empty()) {
    anchor = tracks.truth_poses.front();
  } else {
    throw ConfigError("no initial pose configured and the tracks carry no ground truth");
  }

  const SunMode mode = cfg.sun.mode;
  UnitVec3 s_w;
  if (mode != SunMode::off) {
    s_w = world_sun_direction(cfg);
    const double duration = (F - 1) * cfg.frame_dt;
    if (duration > cfg.sun.max_static_duration_s) {
      stats.warnings.push_back("trajectory spans " + std::to_string(duration) +
                               " s; the static-sun assumption may not hold");
    }
  }
  if ((mode == SunMode::oracle || mode == SunMode::bimodal) && !tracks.has_truth_poses()) {
    throw ConfigError("simulated sun measurements need ground-truth poses");
  }
  std::map<int, SunMeasurement> file_detections;
  if (mode == SunMode::file) {
    for (const auto& d : detections) {
      d.validate();
      if (!file_detections.emplace(d.frame, d).second) {
        throw ValidationError("duplicate sun detection for frame " + std::to_string(d.frame));
      }
    }
  }

  const double cov_sigma = cfg.sun.covariance_sigma_rad();
  const Mat3 obs_cov = Mat3::Identity() * (cfg.obs_sigma_px * cfg.obs_sigma_px);
  RansacConfig ransac = cfg.ransac;
  ransac.seed = derive_seed(cfg.seed, 0x72616e73, cfg.ransac.seed);

  std::vector<std::optional<Pose>> committed(static_cast<std::size_t>(F));
  committed[0] = anchor;
  std::map<int, RansacResult> motions;
  std::map<int, std::optional<SunMeasurement>> sun_decisions;

  auto motion = [&](int k) -> const RansacResult& {
    auto it = motions.find(k);
    if (it == motions.end()) {
      try {
        it = motions.emplace(k, ransac_interframe(tracks, k, cfg.camera, ransac)).first;
      } catch (const InitializationError& e) {
        throw PipelineAbort(PipelineAbort::Stage::frontend, e.frame(), e.what());
      }
    }
    return it->second;
  };

  auto sun_for_frame = [&](int f, const UnitVec3& predicted) -> std::optional<SunMeasurement> {
    if (auto it = sun_decisions.find(f); it != sun_decisions.end()) return it->second;
    std::optional<SunMeasurement> m;
    const auto fu = static_cast<std::size_t>(f);
    const std::uint64_t seed = derive_seed(cfg.seed, 0x73756e, static_cast<std::uint64_t>(f));
    switch (mode) {
      case SunMode::off: break;
      case SunMode::oracle:
        if (f % cfg.sun.cadence == 0) {
          m = oracle_measurement(tracks.truth_poses[fu], s_w, deg2rad(cfg.sun.sigma_deg), seed, f);
          m->covariance = Mat3::Identity() * (cov_sigma * cov_sigma / 2.0);
        }
        break;
      case SunMode::bimodal:
        if (f % cfg.sun.cadence == 0) {
          const auto det = bimodal_measurement(tracks.truth_poses[fu], s_w, cfg.sun.bimodal, seed);
          const auto cands = det.candidates();
          const AzZen chosen =
              cfg.sun.vo_prior
                  ? vo_prior_disambiguate(cands, vo_prior(predicted, deg2rad(cfg.sun.prior_sigma_azimuth_deg),
                                                          deg2rad(cfg.sun.prior_sigma_zenith_deg)))
                  : select_max_weight(cands);
          if (chosen.azimuth == det.b.direction.azimuth) ++stats.bimodal_wrong_selected;
          m = measurement_from_azzen(chosen, cov_sigma, f, SunSource::bimodal);
        }
        break;
      case SunMode::file:
        if (auto it = file_detections.find(f); it != file_detections.end()) m = it->second;
        break;
    }
    if (m) {
      ++stats.sun_generated;
      const GateResult g = gate_measurement(*m, predicted, cfg.sun.cos_gate, cfg.sun.y_gate);
      if (g.accepted) {
        ++stats.sun_accepted;
      } else {
        if (g.reason == GateReason::cosine) ++stats.sun_rejected_cosine;
        if (g.reason == GateReason::zenith) ++stats.sun_rejected_zenith;
        m.reset();
      }
    }
    sun_decisions.emplace(f, m);
    return m;
  };

  const int windows = F - N + 1;
  for (int wi = 0; wi < windows; ++wi) {
    const int s = wi;
    const Pose T_bw = *committed[static_cast<std::size_t>(s)];
    const Pose T_wb = T_bw.inverse();

    WindowProblem problem;
    problem.camera = cfg.camera;
    problem.base_to_world = T_bw;
    problem.sun_world = s_w;
    problem.window_index = wi;
    problem.poses.push_back(Pose::identity());
    for (int j = 1; j < N; ++j) {
      const int f = s + j;
      const auto& c = committed[static_cast<std::size_t>(f)];
      problem.poses.push_back(c ? (*c * T_wb) : (motion(f - 1).motion * problem.poses.back()));
    }

    // Landmarks: RANSAC inliers of at least one frame pair in the window.
    std::vector<LandmarkId> ids;
    for (int k = s; k < s + N - 1; ++k) {
      const auto& inl = motion(k).inliers;
      ids.insert(ids.end(), inl.begin(), inl.end());
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (LandmarkId id : ids) {
      std::vector<int> frames;
      for (int f = s; f < s + N; ++f) {
        const bool left = f > s && detail::contains_sorted(motion(f - 1).inliers, id);
        const bool right = f < s + N - 1 && detail::contains_sorted(motion(f).inliers, id);
        if (left || right) frames.push_back(f);
      }
      if (frames.size() < 2) continue;
      const StereoObservation& first = *tracks.find(id, frames.front());
      const Pose& T_fb = problem.poses[static_cast<std::size_t>(frames.front() - s)];
      const int li = static_cast<int>(problem.landmarks.size());
      problem.landmarks.push_back(T_fb.inverse() * triangulate(cfg.camera, first));
      for (int f : frames) {
        StereoObservation y = *tracks.find(id, f);
        y.covariance = obs_cov;
        problem.observations.push_back({f - s, li, y});
      }
    }

    if (mode != SunMode::off) {
      for (int j = 1; j < N; ++j) {
        const int f = s + j;
        const UnitVec3 predicted = predict_sun(problem.poses[static_cast<std::size_t>(j)], T_bw, s_w);
        if (auto m = sun_for_frame(f, predicted)) {
          problem.sun.push_back({j, *m});
        }
      }
    }
    stats.sun_terms_used += static_cast<int>(problem.sun.size());

    WindowSolution sol;
    try {
      sol = solve_window(problem, cfg.solver);
    } catch (const SolverSingularError& e) {
      throw PipelineAbort(PipelineAbort::Stage::solver, wi, e.what());
    } catch (const ValidationError& e) {
      throw PipelineAbort(PipelineAbort::Stage::solver, wi,
                          "window " + std::to_string(wi) + ": " + e.what());
    }
    ++stats.windows_solved;
    stats.solver_iterations += sol.report.iterations;
    stats.dropped_observations += sol.report.dropped_observations;

    const int first_commit = wi == 0 ? 1 : N - 1;
    for (int j = first_commit; j < N; ++j) {
      committed[static_cast<std::size_t>(s + j)] = sol.estimate.poses[static_cast<std::size_t>(j)] * T_bw;
    }
  }

  result.trajectory.poses.reserve(static_cast<std::size_t>(F));
  for (int k = 0; k < F; ++k) {
    result.trajectory.poses.push_back(*committed[static_cast<std::size_t>(k)]);
    result.trajectory.timestamps.push_back(cfg.ephemeris.unix_seconds + k * cfg.frame_dt);
  }
  return result;
}

}  // namespace sunvo
