#pragma once

#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include "json.hpp"

#include "sunvo/eval.hpp"
#include "sunvo/pipeline.hpp"
#include "sunvo/tracks.hpp"

// JSON run configuration. Every section is optional; unknown keys are errors.
//
//   window_size, frame_dt, seed
//   initial_pose   {position: [x,y,z], quaternion: [w,x,y,z]}   camera-to-world, ENU
//   camera         {fu, fv, cu, cv, baseline, width, height, obs_sigma_px}
//   ransac         {iterations, threshold_px, min_inliers, seed}
//   solver         {max_iters, lambda0, update_tol, cost_tol}
//   sun            {source, vo_prior, cadence, cos_gate, y_gate, sigma_deg,
//                   covariance_sigma_deg, detections, max_static_duration_s,
//                   world_direction, prior_sigma_azimuth_deg, prior_sigma_zenith_deg,
//                   bimodal {sigma_azimuth_deg, sigma_zenith_deg, wrong_mode_probability, dominant_weight}}
//   ephemeris      {lat, lon, t0}        t0: unix seconds or "YYYY-MM-DDThh:mm:ssZ"
//   paths          {tracks, truth}
//   synthetic      {frames, step_m, initial_heading_deg, camera_height_m, turns, landmark_count,
//                   min_depth_m, max_depth_m, min_track_length, max_track_length, pixel_sigma,
//                   outlier_fraction, yaw_noise_deg, yaw_bias_deg, seed}
//   experiment     {trials, modes, workers}

namespace sunvo {

using json = nlohmann::json;

namespace detail {

/// Typed access to one JSON object that remembers which keys were consumed.
class Section
{
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path))
  {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }

  ~Section() noexcept(false)
  {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown configuration key '" + qualified(key) + "'");
    }
  }

  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  bool has(const std::string& key)
  {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <typename T>
  void read(const std::string& key, T& out)
  {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("configuration key '" + qualified(key) + "' has the wrong type");
    }
  }

  const json& at(const std::string& key)
  {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

/// Days since 1970-01-01 of a proleptic Gregorian date.
inline long long days_from_civil(long long y, unsigned m, unsigned d)
{
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

inline double parse_timestamp(const json& j, const std::string& key)
{
  if (j.is_number()) return j.get<double>();
  if (!j.is_string()) throw ConfigError(key + " must be unix seconds or an ISO-8601 UTC string");
  const std::string s = j.get<std::string>();
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  double sec = 0.0;
  char tail = 0;
  if (std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%lf%c", &y, &mo, &d, &h, &mi, &sec, &tail) != 7 || tail != 'Z' ||
      mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0.0 || sec >= 61.0) {
    throw ConfigError(key + ": cannot parse '" + s + "' as YYYY-MM-DDThh:mm:ssZ");
  }
  return static_cast<double>(days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d))) * 86400.0 +
         h * 3600.0 + mi * 60.0 + sec;
}

inline Vec3 read_vec3(const json& j, const std::string& key)
{
  if (!j.is_array() || j.size() != 3) throw ConfigError(key + " must be an array of 3 numbers");
  try {
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  } catch (const json::exception&) {
    throw ConfigError(key + " must be an array of 3 numbers");
  }
}

inline void read_sun(const json& j, SunSettings& sun)
{
  Section s(j, "sun");
  if (s.has("source")) {
    std::string src;
    s.read("source", src);
    sun.mode = sun_mode_from_string(src);
  }
  s.read("vo_prior", sun.vo_prior);
  s.read("cadence", sun.cadence);
  s.read("cos_gate", sun.cos_gate);
  s.read("y_gate", sun.y_gate);
  s.read("sigma_deg", sun.sigma_deg);
  if (s.has("covariance_sigma_deg")) {
    double v = 0.0;
    s.read("covariance_sigma_deg", v);
    sun.covariance_sigma_deg = v;
  }
  s.read("detections", sun.detections_path);
  s.read("max_static_duration_s", sun.max_static_duration_s);
  s.read("prior_sigma_azimuth_deg", sun.prior_sigma_azimuth_deg);
  s.read("prior_sigma_zenith_deg", sun.prior_sigma_zenith_deg);
  if (s.has("world_direction")) {
    try {
      sun.world_direction = UnitVec3::normalize(read_vec3(s.at("world_direction"), "sun.world_direction"));
    } catch (const ValidationError& e) {
      throw ConfigError(std::string("sun.world_direction: ") + e.what());
    }
  }
  if (s.has("bimodal")) {
    Section b(s.at("bimodal"), "sun.bimodal");
    double az = rad2deg(sun.bimodal.sigma_azimuth_rad);
    double zen = rad2deg(sun.bimodal.sigma_zenith_rad);
    b.read("sigma_azimuth_deg", az);
    b.read("sigma_zenith_deg", zen);
    b.read("wrong_mode_probability", sun.bimodal.wrong_mode_probability);
    b.read("dominant_weight", sun.bimodal.dominant_weight);
    sun.bimodal.sigma_azimuth_rad = deg2rad(az);
    sun.bimodal.sigma_zenith_rad = deg2rad(zen);
  }
}

}  // namespace detail

/// Run configuration from a parsed JSON document (experiment/synthetic sections ignored here).
inline RunConfig run_config_from_json(const json& root)
{
  RunConfig cfg;
  if (!root.is_object()) throw ConfigError("configuration root must be an object");
  detail::Section r(root, "");
  r.read("window_size", cfg.window_size);
  r.read("frame_dt", cfg.frame_dt);
  r.read("seed", cfg.seed);
  r.has("synthetic");
  r.has("experiment");

  if (r.has("initial_pose")) {
    detail::Section p(r.at("initial_pose"), "initial_pose");
    const Vec3 c = detail::read_vec3(p.at("position"), "initial_pose.position");
    const json& q = p.at("quaternion");
    if (!q.is_array() || q.size() != 4) throw ConfigError("initial_pose.quaternion must have 4 numbers");
    const Eigen::Quaterniond quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
    if (std::abs(quat.norm() - 1.0) > 1e-6) throw ConfigError("initial_pose.quaternion must be unit");
    const Rotation r_cw = Rotation::from_quaternion(quat).inverse();
    cfg.initial_pose = Pose{r_cw, -(r_cw * c)};
  }
  if (r.has("camera")) {
    detail::Section c(r.at("camera"), "camera");
    c.read("fu", cfg.camera.fu);
    c.read("fv", cfg.camera.fv);
    c.read("cu", cfg.camera.cu);
    c.read("cv", cfg.camera.cv);
    c.read("baseline", cfg.camera.baseline);
    c.read("width", cfg.camera.width);
    c.read("height", cfg.camera.height);
    c.read("obs_sigma_px", cfg.obs_sigma_px);
  }
  if (r.has("ransac")) {
    detail::Section s(r.at("ransac"), "ransac");
    s.read("iterations", cfg.ransac.iterations);
    s.read("threshold_px", cfg.ransac.threshold_px);
    s.read("min_inliers", cfg.ransac.min_inliers);
    s.read("seed", cfg.ransac.seed);
  }
  if (r.has("solver")) {
    detail::Section s(r.at("solver"), "solver");
    s.read("max_iters", cfg.solver.max_iters);
    s.read("lambda0", cfg.solver.lambda0);
    s.read("update_tol", cfg.solver.update_tol);
    s.read("cost_tol", cfg.solver.cost_tol);
  }
  if (r.has("sun")) detail::read_sun(r.at("sun"), cfg.sun);
  if (r.has("ephemeris")) {
    detail::Section e(r.at("ephemeris"), "ephemeris");
    e.read("lat", cfg.ephemeris.latitude_deg);
    e.read("lon", cfg.ephemeris.longitude_deg);
    if (e.has("t0")) cfg.ephemeris.unix_seconds = detail::parse_timestamp(e.at("t0"), "ephemeris.t0");
  }
  if (r.has("paths")) {
    detail::Section p(r.at("paths"), "paths");
    p.read("tracks", cfg.tracks_path);
    p.read("truth", cfg.truth_path);
  }
  try {
    cfg.validate();
  } catch (const RangeError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline SyntheticWorldConfig synthetic_config_from_json(const json& root)
{
  SyntheticWorldConfig w;
  if (!root.is_object() || !root.contains("synthetic")) return w;
  detail::Section s(root.at("synthetic"), "synthetic");
  s.read("frames", w.trajectory.frames);
  s.read("step_m", w.trajectory.step_m);
  s.read("initial_heading_deg", w.trajectory.initial_heading_deg);
  s.read("camera_height_m", w.trajectory.camera_height_m);
  if (s.has("turns")) {
    const json& turns = s.at("turns");
    if (!turns.is_array()) throw ConfigError("synthetic.turns must be an array");
    for (const auto& t : turns) {
      detail::Section ts(t, "synthetic.turns[]");
      TurnSpec turn;
      ts.read("start_frame", turn.start_frame);
      ts.read("frames", turn.frames);
      ts.read("angle_deg", turn.angle_deg);
      w.trajectory.turns.push_back(turn);
    }
  }
  s.read("landmark_count", w.landmark_count);
  s.read("min_depth_m", w.min_depth_m);
  s.read("max_depth_m", w.max_depth_m);
  s.read("min_track_length", w.min_track_length);
  s.read("max_track_length", w.max_track_length);
  s.read("pixel_sigma", w.pixel_sigma);
  s.read("outlier_fraction", w.outlier_fraction);
  s.read("yaw_noise_deg", w.yaw_noise_deg);
  s.read("yaw_bias_deg", w.yaw_bias_deg);
  s.read("seed", w.seed);
  w.validate();
  return w;
}

inline ExperimentConfig experiment_config_from_json(const json& root)
{
  ExperimentConfig e;
  e.run = run_config_from_json(root);
  e.world = synthetic_config_from_json(root);
  e.seed = e.run.seed;
  if (root.contains("experiment")) {
    detail::Section s(root.at("experiment"), "experiment");
    s.read("trials", e.trials);
    s.read("workers", e.workers);
    if (s.has("modes")) {
      std::vector<std::string> names;
      s.read("modes", names);
      e.modes.clear();
      for (const auto& n : names) e.modes.push_back(experiment_mode_from_string(n));
    }
  }
  if (e.trials < 1) throw ConfigError("experiment.trials must be >= 1");
  return e;
}

inline json load_json(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace sunvo
