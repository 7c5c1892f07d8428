#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "sunvo/error.hpp"
#include "sunvo/geometry.hpp"
#include "sunvo/random.hpp"
#include "sunvo/sun_measurement.hpp"

namespace sunvo {

// ---------------------------------------------------------------------------
// Ephemeris

struct EphemerisQuery
{
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;  // east positive
  double unix_seconds = 0.0;   // UTC

  void validate() const
  {
    if (!(std::abs(latitude_deg) <= 90.0) || !(std::abs(longitude_deg) <= 180.0)) {
      throw RangeError("latitude/longitude out of range");
    }
  }
};

inline constexpr double kEphemerisMinUnix = -631152000.0;  // 1950-01-01T00:00:00Z
inline constexpr double kEphemerisMaxUnix = 2556144000.0;  // 2051-01-01T00:00:00Z

/**
 * Sun direction in the local ENU frame from the low-accuracy solar series
 * (mean anomaly, equation of centre, apparent longitude, obliquity, equation
 * of time). No atmospheric refraction. Accurate to a few hundredths of a
 * degree for 1950-2050.
 */
inline UnitVec3 solar_ephemeris(const EphemerisQuery& q)
{
  q.validate();
  if (!(q.unix_seconds >= kEphemerisMinUnix && q.unix_seconds < kEphemerisMaxUnix)) {
    throw RangeError("ephemeris timestamp outside 1950-2050");
  }
  const double jd = q.unix_seconds / 86400.0 + 2440587.5;
  const double T = (jd - 2451545.0) / 36525.0;

  const double L0 = std::fmod(280.46646 + T * (36000.76983 + T * 0.0003032), 360.0);
  const double M = 357.52911 + T * (35999.05029 - T * 0.0001537);
  const double e = 0.016708634 - T * (0.000042037 + T * 0.0000001267);
  const double Mr = deg2rad(M);
  const double C = std::sin(Mr) * (1.914602 - T * (0.004817 + T * 0.000014)) +
                   std::sin(2.0 * Mr) * (0.019993 - T * 0.000101) + std::sin(3.0 * Mr) * 0.000289;
  const double omega = deg2rad(125.04 - 1934.136 * T);
  const double lambda = deg2rad(L0 + C - 0.00569 - 0.00478 * std::sin(omega));
  const double eps0 = 23.0 + (26.0 + (21.448 - T * (46.815 + T * (0.00059 - T * 0.001813))) / 60.0) / 60.0;
  const double eps = deg2rad(eps0 + 0.00256 * std::cos(omega));
  const double decl = std::asin(std::sin(eps) * std::sin(lambda));

  const double y = std::pow(std::tan(eps / 2.0), 2);
  const double L0r = deg2rad(L0);
  const double eot_min = 4.0 * rad2deg(y * std::sin(2.0 * L0r) - 2.0 * e * std::sin(Mr) +
                                       4.0 * e * y * std::sin(Mr) * std::cos(2.0 * L0r) -
                                       0.5 * y * y * std::sin(4.0 * L0r) -
                                       1.25 * e * e * std::sin(2.0 * Mr));

  double day_seconds = std::fmod(q.unix_seconds, 86400.0);
  if (day_seconds < 0.0) day_seconds += 86400.0;
  const double true_solar_min = day_seconds / 60.0 + eot_min + 4.0 * q.longitude_deg;
  const double hour_angle = deg2rad(true_solar_min / 4.0 - 180.0);

  const double lat = deg2rad(q.latitude_deg);
  const Vec3 enu(-std::cos(decl) * std::sin(hour_angle),
                 std::sin(decl) * std::cos(lat) - std::cos(decl) * std::cos(hour_angle) * std::sin(lat),
                 std::sin(decl) * std::sin(lat) + std::cos(decl) * std::cos(hour_angle) * std::cos(lat));
  return UnitVec3::normalize(enu);
}

// ---------------------------------------------------------------------------
// Prediction

/// s_k = R_{k,b} R_{b,w} s_w; translation plays no role for directions.
inline UnitVec3 predict_sun(const Pose& T_kb, const Pose& T_bw, const UnitVec3& s_w)
{
  return UnitVec3::normalize(T_kb.rotation * (T_bw.rotation * s_w.vec()));
}

// ---------------------------------------------------------------------------
// Measurement sources

/**
 * Simulated sun sensor: the true camera-frame direction rotated by a
 * N(0, sigma) angle about a random axis perpendicular to it, so the angular
 * error is |N(0, sigma)|. Covariance is isotropic sigma^2 / 2 per axis (the
 * per-axis variance of the tangent-plane error), floored at 1e-12.
 */
inline SunMeasurement oracle_measurement(const Pose& T_kw, const UnitVec3& s_w, double sigma_rad,
                                         std::uint64_t seed, int frame = 0)
{
  if (!(sigma_rad >= 0.0)) throw ConfigError("oracle sigma must be non-negative");
  const Vec3 truth = T_kw.rotation * s_w.vec();
  SunMeasurement m;
  m.frame = frame;
  m.source = SunSource::oracle;
  m.covariance = Mat3::Identity() * std::max(sigma_rad * sigma_rad / 2.0, 1e-12);
  if (sigma_rad == 0.0) {
    m.direction = UnitVec3::normalize(truth);
    return m;
  }
  Rng rng(seed);
  Vec3 axis = random_unit_vector(rng);
  axis = (axis - axis.dot(truth) * truth);
  while (axis.norm() < 1e-9) {
    axis = random_unit_vector(rng);
    axis = (axis - axis.dot(truth) * truth);
  }
  axis.normalize();
  const double angle = gaussian(rng, sigma_rad);
  m.direction = UnitVec3::normalize(Rotation::exp(axis * angle) * truth);
  return m;
}

/// Camera-frame candidate direction (local azimuth/zenith, see camera_azzen) with its likelihood.
struct SunCandidate
{
  AzZen direction;
  double weight = 1.0;
};

struct BimodalConfig
{
  double sigma_azimuth_rad = deg2rad(10.0);
  double sigma_zenith_rad = deg2rad(5.0);
  double wrong_mode_probability = 0.5;
  double dominant_weight = 0.6;  // weight of the favoured mode; the other gets 1 - this

  void validate() const
  {
    if (!(sigma_azimuth_rad > 0.0)) throw ConfigError("bimodal azimuth sigma must be > 0");
    if (!(sigma_zenith_rad >= 0.0)) throw ConfigError("bimodal zenith sigma must be >= 0");
    if (!(wrong_mode_probability >= 0.0 && wrong_mode_probability <= 1.0)) {
      throw ConfigError("wrong-mode probability must lie in [0, 1]");
    }
    if (!(dominant_weight >= 0.5 && dominant_weight <= 1.0)) {
      throw ConfigError("dominant weight must lie in [0.5, 1]");
    }
  }
};

/// Two azimuth hypotheses 180 degrees apart; candidate A is the true mode.
struct BimodalDetection
{
  SunCandidate a;
  SunCandidate b;
  bool flipped = false;  // true when the wrong mode carries the larger weight

  std::array<SunCandidate, 2> candidates() const { return {a, b}; }
};

/**
 * Stand-in for a shadow-cue detector: the true camera-frame azimuth plus
 * noise, paired with its 180-degree twin. With probability
 * wrong_mode_probability the twin receives the dominant weight.
 */
inline BimodalDetection bimodal_measurement(const Pose& T_kw, const UnitVec3& s_w, const BimodalConfig& cfg,
                                            std::uint64_t seed)
{
  cfg.validate();
  Rng rng(seed);
  const AzZen truth = camera_azzen(T_kw.rotation * s_w).value;
  const double az = wrap_2pi(truth.azimuth + gaussian(rng, cfg.sigma_azimuth_rad));
  const double zen = std::clamp(truth.zenith + gaussian(rng, cfg.sigma_zenith_rad), 0.0, kPi);
  BimodalDetection det;
  det.flipped = uniform01(rng) < cfg.wrong_mode_probability;
  det.a = {{az, zen}, det.flipped ? 1.0 - cfg.dominant_weight : cfg.dominant_weight};
  det.b = {{wrap_2pi(az + kPi), zen}, det.flipped ? cfg.dominant_weight : 1.0 - cfg.dominant_weight};
  return det;
}

/// Prior over camera-frame azimuth/zenith. 3-sigma spans of 360 and 90 degrees.
struct SunPrior
{
  AzZen mean;
  double sigma_azimuth = deg2rad(60.0);
  double sigma_zenith = deg2rad(15.0);

  /// Unnormalized density with the azimuth difference wrapped to [-pi, pi).
  double density(const AzZen& x) const
  {
    const double da = wrap_pi(x.azimuth - mean.azimuth) / sigma_azimuth;
    const double dz = (x.zenith - mean.zenith) / sigma_zenith;
    return std::exp(-0.5 * (da * da + dz * dz));
  }
};

/// Prior centred on the predicted camera-frame sun direction.
inline SunPrior vo_prior(const UnitVec3& predicted_camera, double sigma_azimuth = deg2rad(60.0),
                         double sigma_zenith = deg2rad(15.0))
{
  if (!(sigma_azimuth > 0.0 && sigma_zenith > 0.0)) throw ConfigError("prior sigmas must be > 0");
  return {camera_azzen(predicted_camera).value, sigma_azimuth, sigma_zenith};
}

/// Maximum a-posteriori candidate: weight times prior density. Ties go to the earlier candidate.
inline AzZen vo_prior_disambiguate(std::span<const SunCandidate> candidates, const SunPrior& prior)
{
  if (candidates.empty()) throw ValidationError("no sun candidates");
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double score = candidates[i].weight * prior.density(candidates[i].direction);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return candidates[best].direction;
}

/// Maximum-likelihood candidate with no prior.
inline AzZen select_max_weight(std::span<const SunCandidate> candidates)
{
  if (candidates.empty()) throw ValidationError("no sun candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].weight > candidates[best].weight) best = i;
  }
  return candidates[best].direction;
}

/// Camera-frame measurement from a resolved azimuth/zenith with isotropic sigma.
inline SunMeasurement measurement_from_azzen(const AzZen& dir, double sigma_rad, int frame, SunSource source)
{
  SunMeasurement m;
  m.frame = frame;
  m.direction = camera_unitvec(dir);
  m.covariance = Mat3::Identity() * std::max(sigma_rad * sigma_rad / 2.0, 1e-12);
  m.source = source;
  return m;
}

/**
 * Azimuth-only detection (no elevation). The vertical camera component is
 * zero and the vector is unit in the horizontal plane. Only the tangential
 * horizontal direction carries information (variance sigma_az^2); the
 * vertical and radial directions get kMaskedVariance.
 */
inline SunMeasurement azimuth_only(double azimuth, double sigma_az, int frame)
{
  if (!(sigma_az > 0.0)) throw ConfigError("azimuth sigma must be > 0");
  const Vec3 s(std::sin(azimuth), 0.0, std::cos(azimuth));
  const Vec3 t(std::cos(azimuth), 0.0, -std::sin(azimuth));
  const Vec3 up(0.0, 1.0, 0.0);
  SunMeasurement m;
  m.frame = frame;
  m.direction = UnitVec3::normalize(s);
  m.covariance = sigma_az * sigma_az * t * t.transpose() + kMaskedVariance * (up * up.transpose() + s * s.transpose());
  m.source = SunSource::azimuth_only;
  m.valid[1] = false;
  return m;
}

// ---------------------------------------------------------------------------
// Gating

enum class GateReason { accepted, cosine, zenith };

inline std::string_view to_string(GateReason r)
{
  switch (r) {
    case GateReason::accepted: return "accepted";
    case GateReason::cosine: return "cosine-gate";
    case GateReason::zenith: return "zenith-gate";
  }
  return "unknown";
}

struct GateResult
{
  bool accepted = true;
  GateReason reason = GateReason::accepted;
  double cosine_distance = 0.0;
  double y_error = 0.0;
};

inline constexpr double kDefaultCosineGate = 0.3;
inline constexpr double kDefaultYGate = 0.3;

/**
 * Rejects a measurement whose cosine distance to the prediction exceeds
 * cos_thresh, then one whose camera-frame y (vertical) error exceeds
 * y_thresh. Azimuth-only measurements are compared with the prediction
 * projected onto the horizontal plane and skip the vertical gate.
 */
inline GateResult gate_measurement(const SunMeasurement& s, const UnitVec3& predicted,
                                   double cos_thresh = kDefaultCosineGate, double y_thresh = kDefaultYGate)
{
  UnitVec3 pred = predicted;
  if (s.vertical_masked()) {
    const Vec3 h(predicted.x(), 0.0, predicted.z());
    if (h.norm() < 1e-12) {
      return {false, GateReason::cosine, 1.0, 0.0};
    }
    pred = UnitVec3::normalize(h);
  }
  GateResult g;
  g.cosine_distance = 1.0 - pred.dot(s.direction);
  g.y_error = std::abs(pred.y() - s.direction.y());
  if (g.cosine_distance > cos_thresh) {
    g.accepted = false;
    g.reason = GateReason::cosine;
  } else if (!s.vertical_masked() && g.y_error > y_thresh) {
    g.accepted = false;
    g.reason = GateReason::zenith;
  }
  return g;
}

}  // namespace sunvo
