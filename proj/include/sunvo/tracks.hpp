#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sunvo/camera.hpp"
#include "sunvo/error.hpp"
#include "sunvo/geometry.hpp"
#include "sunvo/random.hpp"
#include "sunvo/sun_measurement.hpp"

namespace sunvo {

using LandmarkId = std::int64_t;

struct TrackObservation
{
  int frame = 0;
  StereoObservation y;
};

/**
 * Keypoint tracks indexed by landmark id. Each landmark appears at most once
 * per frame, and every frame index is below frame_count().
 *
 * Synthetic tables also carry ground truth: landmark positions in the world
 * frame and the world-to-camera pose T_{k,w} of every frame.
 */
class TrackTable
{
public:
  TrackTable() = default;

  explicit TrackTable(int frame_count) { set_frame_count(frame_count); }

  int frame_count() const { return static_cast<int>(by_frame_.size()); }

  /// Grows the table; shrinking is not allowed.
  void set_frame_count(int n)
  {
    if (n < frame_count()) {
      throw ValidationError("frame count cannot shrink");
    }
    by_frame_.resize(static_cast<std::size_t>(n));
  }

  void add(LandmarkId id, int frame, const StereoObservation& y)
  {
    if (frame < 0 || frame >= frame_count()) {
      throw ValidationError("frame index " + std::to_string(frame) + " out of range");
    }
    auto& track = tracks_[id];
    auto pos = std::lower_bound(track.begin(), track.end(), frame,
                                [](const TrackObservation& o, int f) { return o.frame < f; });
    if (pos != track.end() && pos->frame == frame) {
      throw ValidationError("landmark " + std::to_string(id) + " observed twice in frame " +
                            std::to_string(frame));
    }
    track.insert(pos, TrackObservation{frame, y});
    auto& ids = by_frame_[static_cast<std::size_t>(frame)];
    ids.insert(std::upper_bound(ids.begin(), ids.end(), id), id);
  }

  const std::map<LandmarkId, std::vector<TrackObservation>>& tracks() const { return tracks_; }

  const std::vector<LandmarkId>& landmarks_in_frame(int frame) const
  {
    return by_frame_.at(static_cast<std::size_t>(frame));
  }

  const StereoObservation* find(LandmarkId id, int frame) const
  {
    const auto it = tracks_.find(id);
    if (it == tracks_.end()) return nullptr;
    const auto& track = it->second;
    auto pos = std::lower_bound(track.begin(), track.end(), frame,
                                [](const TrackObservation& o, int f) { return o.frame < f; });
    return (pos != track.end() && pos->frame == frame) ? &pos->y : nullptr;
  }

  /// Sorted ids of landmarks observed in both frames.
  std::vector<LandmarkId> common_landmarks(int a, int b) const
  {
    const auto& la = landmarks_in_frame(a);
    const auto& lb = landmarks_in_frame(b);
    std::vector<LandmarkId> out;
    std::set_intersection(la.begin(), la.end(), lb.begin(), lb.end(), std::back_inserter(out));
    return out;
  }

  std::size_t landmark_count() const { return tracks_.size(); }

  std::size_t observation_count() const
  {
    std::size_t n = 0;
    for (const auto& ids : by_frame_) n += ids.size();
    return n;
  }

  bool has_truth_poses() const { return truth_poses.size() == by_frame_.size() && !by_frame_.empty(); }

  /// Observations and frame count only; ground truth is not compared.
  bool operator==(const TrackTable& o) const
  {
    if (frame_count() != o.frame_count() || tracks_.size() != o.tracks_.size()) return false;
    for (auto a = tracks_.begin(), b = o.tracks_.begin(); a != tracks_.end(); ++a, ++b) {
      if (a->first != b->first || a->second.size() != b->second.size()) return false;
      for (std::size_t i = 0; i < a->second.size(); ++i) {
        if (a->second[i].frame != b->second[i].frame || !(a->second[i].y == b->second[i].y)) {
          return false;
        }
      }
    }
    return true;
  }

  std::map<LandmarkId, Vec3> truth_landmarks;  // world frame
  std::vector<Pose> truth_poses;               // T_{k,w}

private:
  std::map<LandmarkId, std::vector<TrackObservation>> tracks_;
  std::vector<std::vector<LandmarkId>> by_frame_;
};

// ---------------------------------------------------------------------------
// Synthetic scenes

/// A constant-rate heading change spread over `frames` frames starting at `start_frame`.
struct TurnSpec
{
  int start_frame = 0;
  int frames = 1;
  double angle_deg = 0.0;  // positive turns clockwise seen from above
};

/// Planar constant-speed path in the ENU world frame.
struct TrajectorySpec
{
  int frames = 50;
  double step_m = 1.0;
  double initial_heading_deg = 0.0;  // compass: 0 North, 90 East
  double camera_height_m = 1.65;
  std::vector<TurnSpec> turns;
};

struct SyntheticWorldConfig
{
  TrajectorySpec trajectory;
  int landmark_count = 200;  // landmarks kept in view per frame
  double min_depth_m = 5.0;
  double max_depth_m = 40.0;
  int min_track_length = 2;
  int max_track_length = 8;
  double pixel_sigma = 0.0;
  double outlier_fraction = 0.0;
  // Unmodelled VO rotation error injected into the tracks (see generate_synthetic).
  double yaw_noise_deg = 0.0;
  double yaw_bias_deg = 0.0;
  UnitVec3 sun_direction = UnitVec3::normalize(Vec3(0.3, -0.5, 0.8));  // ENU
  std::uint64_t seed = 1;

  void validate() const
  {
    if (trajectory.frames < 2) throw ConfigError("trajectory needs at least 2 frames");
    if (landmark_count < 10) throw ConfigError("landmark count must be at least 10");
    if (!(pixel_sigma >= 0.0)) throw ConfigError("pixel noise must be non-negative");
    if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) {
      throw ConfigError("outlier fraction must lie in [0, 1)");
    }
    if (!(yaw_noise_deg >= 0.0)) throw ConfigError("yaw noise must be non-negative");
    if (!(min_depth_m > 0.5 && max_depth_m > min_depth_m)) {
      throw ConfigError("landmark depth range must satisfy 0.5 < min < max");
    }
    if (min_track_length < 2 || max_track_length < min_track_length) {
      throw ConfigError("track lengths must satisfy 2 <= min <= max");
    }
    for (const auto& t : trajectory.turns) {
      if (t.frames < 1 || t.start_frame < 0) throw ConfigError("invalid turn specification");
    }
  }
};

/// Camera orientation for a compass heading: z forward, x right, y down, level.
inline Pose camera_pose_in_world(const Vec3& center, double heading)
{
  const Vec3 forward(std::sin(heading), std::cos(heading), 0.0);
  const Vec3 right(std::cos(heading), -std::sin(heading), 0.0);
  const Vec3 down(0.0, 0.0, -1.0);
  Mat3 r_wc;
  r_wc.col(0) = right;
  r_wc.col(1) = down;
  r_wc.col(2) = forward;
  const Rotation r_cw = Rotation::from_matrix(r_wc.transpose());
  return {r_cw, -(r_cw * center)};
}

/// Camera centre in the world frame of a world-to-camera pose T_{k,w}.
inline Vec3 camera_center(const Pose& T_kw) { return -(T_kw.rotation.inverse() * T_kw.translation); }

/// Ground-truth world-to-camera poses T_{k,w} along the path.
inline std::vector<Pose> synthetic_trajectory(const TrajectorySpec& spec)
{
  std::vector<Pose> poses;
  poses.reserve(static_cast<std::size_t>(spec.frames));
  double heading = deg2rad(spec.initial_heading_deg);
  Vec3 center(0.0, 0.0, spec.camera_height_m);
  for (int k = 0; k < spec.frames; ++k) {
    if (k > 0) {
      for (const auto& turn : spec.turns) {
        if (k > turn.start_frame && k <= turn.start_frame + turn.frames) {
          heading += deg2rad(turn.angle_deg) / turn.frames;
        }
      }
      center += spec.step_m * Vec3(std::sin(heading), std::cos(heading), 0.0);
    }
    poses.push_back(camera_pose_in_world(center, heading));
  }
  return poses;
}

/**
 * Generates stereo tracks of a random static scene seen along the configured
 * path. New landmarks are spawned inside the current view whenever fewer than
 * landmark_count are active; each lives for a uniform number of frames or
 * until it leaves the image.
 *
 * Outlier tracks observe their own landmark in the first frame and a fixed
 * decoy point afterwards. Yaw noise models an unmodelled VO rotation error:
 * a landmark first seen in frame b is observed in frame k from the true
 * camera rotated about its y axis by the yaw error accumulated between b and
 * k, so VO on frames (k, k+1) recovers the true motion composed with that
 * frame pair's yaw error.
 */
inline TrackTable generate_synthetic(const SyntheticWorldConfig& cfg, const StereoIntrinsics& K)
{
  cfg.validate();
  K.validate();

  Rng rng(derive_seed(cfg.seed, 0x7472616b));
  const int frames = cfg.trajectory.frames;
  TrackTable table(frames);
  table.truth_poses = synthetic_trajectory(cfg.trajectory);

  std::vector<double> yaw_error(static_cast<std::size_t>(frames), 0.0);
  for (int k = 1; k < frames; ++k) {
    const double step = deg2rad(cfg.yaw_bias_deg) + gaussian(rng, deg2rad(cfg.yaw_noise_deg));
    yaw_error[static_cast<std::size_t>(k)] = yaw_error[static_cast<std::size_t>(k - 1)] + step;
  }

  struct Active
  {
    LandmarkId id;
    int birth;
    int last;
    Vec3 world;
    std::optional<Vec3> decoy;
  };
  std::vector<Active> active;
  LandmarkId next_id = 0;

  auto sample_in_view = [&](const Pose& T_kw) {
    const double z = uniform(rng, cfg.min_depth_m, cfg.max_depth_m);
    const double u = uniform(rng, 0.0, static_cast<double>(K.width));
    const double v = uniform(rng, 0.0, static_cast<double>(K.height));
    const Vec3 p_cam((u - K.cu) * z / K.fu, (v - K.cv) * z / K.fv, z);
    return T_kw.inverse() * p_cam;
  };

  auto observe = [&](const Active& a, int k) -> std::optional<StereoObservation> {
    const Pose& T_kw = table.truth_poses[static_cast<std::size_t>(k)];
    const Vec3& target = (a.decoy && k > a.birth) ? *a.decoy : a.world;
    const double yaw = yaw_error[static_cast<std::size_t>(k)] - yaw_error[static_cast<std::size_t>(a.birth)];
    Vec3 p_cam = T_kw * target;
    if (yaw != 0.0) p_cam = Rotation::about_y(yaw) * p_cam;
    if (!(p_cam.z() > 0.5)) return std::nullopt;
    Vec3 y = project_vec(K, p_cam);
    if (!K.in_image(y.x(), y.y())) return std::nullopt;
    if (cfg.pixel_sigma > 0.0) {
      y += Vec3(gaussian(rng, cfg.pixel_sigma), gaussian(rng, cfg.pixel_sigma),
                gaussian(rng, cfg.pixel_sigma));
    }
    if (!(y.z() > kDefaultMinDisparity)) return std::nullopt;
    return StereoObservation{y.x(), y.y(), y.z(), Mat3::Identity()};
  };

  for (int k = 0; k < frames; ++k) {
    std::vector<Active> kept;
    kept.reserve(active.size());
    for (const auto& a : active) {
      if (a.last < k) continue;
      if (auto y = observe(a, k)) {
        table.add(a.id, k, *y);
        kept.push_back(a);
      }
    }
    active.swap(kept);

    const Pose& T_kw = table.truth_poses[static_cast<std::size_t>(k)];
    int attempts = 0;
    while (static_cast<int>(active.size()) < cfg.landmark_count && attempts < 100 * cfg.landmark_count) {
      ++attempts;
      const int length = cfg.min_track_length +
                         static_cast<int>(uniform_index(
                             rng, static_cast<std::size_t>(cfg.max_track_length - cfg.min_track_length + 1)));
      Active a{next_id, k, k + length - 1, sample_in_view(T_kw), std::nullopt};
      if (cfg.outlier_fraction > 0.0 && uniform01(rng) < cfg.outlier_fraction) {
        a.decoy = sample_in_view(T_kw);
      }
      if (auto y = observe(a, k)) {
        table.add(a.id, k, *y);
        table.truth_landmarks[a.id] = a.world;
        active.push_back(a);
        ++next_id;
      }
    }
    if (table.landmarks_in_frame(k).empty()) {
      throw InfeasibleSceneError("no landmark visible in frame " + std::to_string(k));
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Text interchange: `frame_id landmark_id u v d` and `frame_id sx sy sz r11 r22 r33`.

namespace detail {

/// Splits a line into whitespace-separated fields, dropping `#` comments.
inline std::vector<std::string> fields_of(const std::string& line)
{
  const auto hash = line.find('#');
  std::istringstream in(hash == std::string::npos ? line : line.substr(0, hash));
  std::vector<std::string> out;
  for (std::string f; in >> f;) out.push_back(f);
  return out;
}

inline double parse_double(const std::string& s, const std::string& file, int line)
{
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(file, line, "invalid number '" + s + "'");
  }
}

inline long long parse_int(const std::string& s, const std::string& file, int line)
{
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(file, line, "invalid integer '" + s + "'");
  }
}

inline std::string format_double(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline TrackTable parse_tracks(std::istream& in, const std::string& name = "<tracks>")
{
  struct Row
  {
    int frame;
    LandmarkId id;
    StereoObservation y;
    int line;
  };
  std::vector<Row> rows;
  int max_frame = -1;
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    const auto f = detail::fields_of(line);
    if (f.empty()) continue;
    if (f.size() != 5) {
      throw ParseError(name, lineno, "expected 5 fields 'frame_id landmark_id u v d', got " +
                                         std::to_string(f.size()));
    }
    const long long frame = detail::parse_int(f[0], name, lineno);
    if (frame < 0 || frame > 100000000) throw ParseError(name, lineno, "frame id out of range");
    Row r{static_cast<int>(frame), detail::parse_int(f[1], name, lineno),
          StereoObservation{detail::parse_double(f[2], name, lineno),
                            detail::parse_double(f[3], name, lineno),
                            detail::parse_double(f[4], name, lineno), Mat3::Identity()},
          lineno};
    max_frame = std::max(max_frame, r.frame);
    rows.push_back(r);
  }
  TrackTable table(max_frame + 1);
  for (const auto& r : rows) {
    try {
      table.add(r.id, r.frame, r.y);
    } catch (const ValidationError& e) {
      throw ParseError(name, r.line, e.what());
    }
  }
  return table;
}

inline TrackTable load_tracks(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return parse_tracks(in, path);
}

inline void write_tracks(std::ostream& out, const TrackTable& table)
{
  out << "# frame_id landmark_id u v d\n";
  for (int k = 0; k < table.frame_count(); ++k) {
    for (LandmarkId id : table.landmarks_in_frame(k)) {
      const StereoObservation& y = *table.find(id, k);
      out << k << ' ' << id << ' ' << detail::format_double(y.u) << ' ' << detail::format_double(y.v)
          << ' ' << detail::format_double(y.d) << '\n';
    }
  }
}

/// A detection whose r22 is at least kMaskedVariance is treated as azimuth-only.
inline std::vector<SunMeasurement> parse_sun_detections(std::istream& in,
                                                        const std::string& name = "<detections>")
{
  std::vector<SunMeasurement> out;
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    const auto f = detail::fields_of(line);
    if (f.empty()) continue;
    if (f.size() != 7) {
      throw ParseError(name, lineno, "expected 7 fields 'frame_id sx sy sz r11 r22 r33', got " +
                                         std::to_string(f.size()));
    }
    const long long frame = detail::parse_int(f[0], name, lineno);
    if (frame < 0 || frame > 100000000) throw ParseError(name, lineno, "frame id out of range");
    double v[6];
    for (int i = 0; i < 6; ++i) v[i] = detail::parse_double(f[static_cast<std::size_t>(i + 1)], name, lineno);
    SunMeasurement m;
    m.frame = static_cast<int>(frame);
    try {
      m.direction = UnitVec3::checked(Vec3(v[0], v[1], v[2]), 1e-3);
    } catch (const ValidationError& e) {
      throw ValidationError(name + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!(v[3] > 0.0 && v[4] > 0.0 && v[5] > 0.0)) {
      throw ValidationError(name + ":" + std::to_string(lineno) + ": covariance must be positive");
    }
    m.covariance = Vec3(v[3], v[4], v[5]).asDiagonal();
    m.source = SunSource::file;
    if (v[4] >= kMaskedVariance) m.valid[1] = false;
    out.push_back(m);
  }
  return out;
}

inline std::vector<SunMeasurement> load_sun_detections(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return parse_sun_detections(in, path);
}

/// Only the covariance diagonal is written.
inline void write_sun_detections(std::ostream& out, const std::vector<SunMeasurement>& ms)
{
  out << "# frame_id sx sy sz r11 r22 r33\n";
  for (const auto& m : ms) {
    out << m.frame;
    for (int i = 0; i < 3; ++i) out << ' ' << detail::format_double(m.direction.vec()(i));
    for (int i = 0; i < 3; ++i) out << ' ' << detail::format_double(m.covariance(i, i));
    out << '\n';
  }
}

}  // namespace sunvo
