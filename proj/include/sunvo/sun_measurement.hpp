#pragma once

#include <array>
#include <string_view>

#include "sunvo/camera.hpp"
#include "sunvo/geometry.hpp"

namespace sunvo {

enum class SunSource { oracle, bimodal, file, azimuth_only };

inline std::string_view to_string(SunSource s)
{
  switch (s) {
    case SunSource::oracle: return "oracle";
    case SunSource::bimodal: return "bimodal";
    case SunSource::file: return "file";
    case SunSource::azimuth_only: return "azimuth_only";
  }
  return "unknown";
}

/// Variance used for components that carry no information.
inline constexpr double kMaskedVariance = 1e6;

/// Sun direction observed in camera frame `frame`.
struct SunMeasurement
{
  int frame = 0;
  UnitVec3 direction;
  Mat3 covariance = Mat3::Identity();
  SunSource source = SunSource::oracle;
  /// Per camera axis; azimuth-only detections invalidate y (vertical).
  std::array<bool, 3> valid{true, true, true};

  bool vertical_masked() const { return !valid[1]; }

  /// Unit norm within 1e-3 and SPD covariance.
  void validate() const
  {
    if (std::abs(direction.vec().norm() - 1.0) > 1e-3) {
      throw ValidationError("sun measurement is not a unit vector");
    }
    (void)sqrt_information(covariance);
  }
};

}  // namespace sunvo
