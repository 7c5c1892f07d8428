#pragma once

#include <Eigen/Cholesky>

#include <limits>
#include <span>
#include <vector>

#include "sunvo/camera.hpp"
#include "sunvo/error.hpp"
#include "sunvo/geometry.hpp"
#include "sunvo/random.hpp"
#include "sunvo/tracks.hpp"

namespace sunvo {

struct RansacConfig
{
  int iterations = 200;
  double threshold_px = 2.0;
  int min_inliers = 6;
  std::uint64_t seed = 1;

  void validate() const
  {
    if (iterations < 1) throw ConfigError("ransac.iterations must be >= 1");
    if (!(threshold_px > 0.0)) throw ConfigError("ransac.threshold_px must be > 0");
    if (min_inliers < 3) throw ConfigError("ransac.min_inliers must be >= 3");
  }
};

/**
 * Least-squares rigid transform T with dst_i ~ T * src_i (centroids plus
 * orthogonal Procrustes). The rotation always has det +1.
 */
inline Pose align_points(std::span<const Vec3> src, std::span<const Vec3> dst)
{
  if (src.size() != dst.size() || src.size() < 3) {
    throw DegenerateSampleError("alignment needs at least 3 point pairs");
  }
  Vec3 cs = Vec3::Zero();
  Vec3 cd = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cs += src[i];
    cd += dst[i];
  }
  cs /= static_cast<double>(src.size());
  cd /= static_cast<double>(dst.size());
  Mat3 H = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    H += (dst[i] - cd) * (src[i] - cs).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& U = svd.matrixU();
  const Mat3& V = svd.matrixV();
  Mat3 D = Mat3::Identity();
  if ((U * V.transpose()).determinant() < 0.0) D(2, 2) = -1.0;
  const Rotation R = Rotation::orthonormalized(U * D * V.transpose());
  return {R, cd - R * cs};
}

/// Minimal solver. Throws DegenerateSampleError when either triple is (nearly) collinear.
inline Pose align_three_points(std::span<const Vec3, 3> src, std::span<const Vec3, 3> dst)
{
  auto area = [](std::span<const Vec3, 3> p) { return 0.5 * (p[1] - p[0]).cross(p[2] - p[0]).norm(); };
  if (area(src) <= 1e-9 || area(dst) <= 1e-9) {
    throw DegenerateSampleError("collinear three-point sample");
  }
  return align_points(std::span<const Vec3>(src), std::span<const Vec3>(dst));
}

struct RansacResult
{
  Pose motion;                       // T_{k+1,k}
  std::vector<LandmarkId> inliers;   // sorted
  int correspondences = 0;
  int best_iteration = -1;
};

namespace detail {

struct Correspondence
{
  LandmarkId id;
  Vec3 point;                   // triangulated in frame k
  Vec3 point_next;              // triangulated in frame k+1
  Vec3 observation_next;        // (u, v, d) in frame k+1
};

inline double reprojection_error(const StereoIntrinsics& K, const Pose& T, const Correspondence& c)
{
  const Vec3 p = T * c.point;
  if (!(p.z() > kDefaultMinDepth)) return std::numeric_limits<double>::infinity();
  return (project_vec(K, p) - c.observation_next).norm();
}

/// Gauss-Newton on the (u, v, d) reprojection error in frame k+1, starting from `init`.
inline Pose refine_motion(const StereoIntrinsics& K, std::span<const Correspondence> corr, Pose T,
                          int iterations = 10)
{
  for (int it = 0; it < iterations; ++it) {
    Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
    Vec6 g = Vec6::Zero();
    for (const auto& c : corr) {
      const Vec3 p = T * c.point;
      if (!(p.z() > kDefaultMinDepth)) continue;
      const Vec3 r = project_vec(K, p) - c.observation_next;
      Mat36 dp;
      dp.leftCols<3>() = -hat(p);
      dp.rightCols<3>() = Mat3::Identity();
      const Mat36 J = project_jacobian(K, p) * dp;
      H += J.transpose() * J;
      g += J.transpose() * r;
    }
    const Eigen::LDLT<Eigen::Matrix<double, 6, 6>> ldlt(H);
    if (ldlt.info() != Eigen::Success) break;
    const Vec6 step = -ldlt.solve(g);
    if (!step.allFinite()) break;
    T = se3_exp(step) * T;
    if (step.norm() < 1e-12) break;
  }
  return T;
}

}  // namespace detail

/**
 * Interframe motion T_{k+1,k} between frames k and k+1 from triangulated
 * stereo points. Hypotheses come from three-point samples drawn from the
 * id-sorted correspondence list; a track is an inlier when the (u, v, d)
 * reprojection of its frame-k point into frame k+1 is below the threshold.
 * The best hypothesis (most inliers, earliest iteration on ties) is refit on
 * all its inliers.
 */
inline RansacResult ransac_interframe(const TrackTable& tracks, int k, const StereoIntrinsics& K,
                                      const RansacConfig& cfg)
{
  cfg.validate();
  if (k < 0 || k + 1 >= tracks.frame_count()) {
    throw InitializationError(k, "frame pair out of range");
  }
  std::vector<detail::Correspondence> corr;
  for (LandmarkId id : tracks.common_landmarks(k, k + 1)) {
    const StereoObservation& a = *tracks.find(id, k);
    const StereoObservation& b = *tracks.find(id, k + 1);
    if (!(a.d > kDefaultMinDisparity && b.d > kDefaultMinDisparity)) continue;
    corr.push_back({id, triangulate(K, a), triangulate(K, b), b.vec()});
  }
  if (static_cast<int>(corr.size()) < cfg.min_inliers) {
    throw InitializationError(k, "only " + std::to_string(corr.size()) + " correspondences");
  }

  Rng rng(derive_seed(cfg.seed, 0x72616e73, static_cast<std::uint64_t>(k)));
  const std::size_t n = corr.size();
  int best_count = -1;
  int best_iteration = -1;
  Pose best;
  for (int it = 0; it < cfg.iterations; ++it) {
    std::size_t idx[3];
    idx[0] = uniform_index(rng, n);
    do idx[1] = uniform_index(rng, n); while (idx[1] == idx[0]);
    do idx[2] = uniform_index(rng, n); while (idx[2] == idx[0] || idx[2] == idx[1]);
    const Vec3 src[3] = {corr[idx[0]].point, corr[idx[1]].point, corr[idx[2]].point};
    const Vec3 dst[3] = {corr[idx[0]].point_next, corr[idx[1]].point_next, corr[idx[2]].point_next};
    Pose model;
    try {
      model = align_three_points(std::span<const Vec3, 3>(src), std::span<const Vec3, 3>(dst));
    } catch (const DegenerateSampleError&) {
      continue;
    }
    int count = 0;
    for (const auto& c : corr) {
      if (detail::reprojection_error(K, model, c) < cfg.threshold_px) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_iteration = it;
      best = model;
    }
  }
  if (best_count < cfg.min_inliers) {
    throw InitializationError(k, "best hypothesis has " + std::to_string(std::max(best_count, 0)) +
                                     " inliers, need " + std::to_string(cfg.min_inliers));
  }

  // The minimal-sample model is noisy, so the consensus set is refit and
  // re-gated until it stops changing. Fitting is closed-form on all inliers,
  // then polished in pixel space where the noise is homogeneous
  // (triangulated depth noise grows with z^2).
  RansacResult out;
  Pose model = best;
  std::vector<LandmarkId> ids;
  for (int round = 0; round < 10; ++round) {
    std::vector<Vec3> src;
    std::vector<Vec3> dst;
    std::vector<detail::Correspondence> inliers;
    std::vector<LandmarkId> next_ids;
    for (const auto& c : corr) {
      if (detail::reprojection_error(K, model, c) < cfg.threshold_px) {
        src.push_back(c.point);
        dst.push_back(c.point_next);
        inliers.push_back(c);
        next_ids.push_back(c.id);
      }
    }
    if (static_cast<int>(inliers.size()) < cfg.min_inliers || next_ids == ids) break;
    ids = std::move(next_ids);
    out.motion = detail::refine_motion(K, inliers, align_points(src, dst));
    model = out.motion;
  }
  out.inliers = std::move(ids);
  out.correspondences = static_cast<int>(n);
  out.best_iteration = best_iteration;
  return out;
}

}  // namespace sunvo
