#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sunvo/camera.hpp"
#include "sunvo/error.hpp"
#include "sunvo/geometry.hpp"
#include "sunvo/sun.hpp"
#include "sunvo/sun_measurement.hpp"

namespace sunvo {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat63 = Eigen::Matrix<double, 6, 3>;

struct WindowObservation
{
  int pose = 0;
  int landmark = 0;
  StereoObservation y;
};

struct WindowSunTerm
{
  int pose = 0;
  SunMeasurement measurement;
};

/**
 * One sliding-window bundle adjustment problem. Poses are T_{k,b} with the
 * base (first) pose fixed at identity; landmarks are in the base frame.
 */
struct WindowProblem
{
  StereoIntrinsics camera;
  std::vector<Pose> poses;
  std::vector<Vec3> landmarks;
  std::vector<WindowObservation> observations;
  std::vector<WindowSunTerm> sun;
  Pose base_to_world;  // T_{b,w}, held fixed
  UnitVec3 sun_world;  // s_w in ENU
  int window_index = 0;

  void validate() const
  {
    if (poses.empty()) throw ValidationError("window has no poses");
    const Pose& base = poses.front();
    if (base.rotation.matrix() != Mat3::Identity() || base.translation != Vec3::Zero()) {
      throw ValidationError("first window pose must be identity");
    }
    std::vector<int> count(landmarks.size(), 0);
    for (const auto& o : observations) {
      if (o.pose < 0 || o.pose >= static_cast<int>(poses.size()) || o.landmark < 0 ||
          o.landmark >= static_cast<int>(landmarks.size())) {
        throw ValidationError("observation index out of range");
      }
      ++count[static_cast<std::size_t>(o.landmark)];
    }
    if (std::any_of(count.begin(), count.end(), [](int c) { return c < 2; })) {
      throw ValidationError("every landmark needs at least two observations");
    }
    for (const auto& s : sun) {
      if (s.pose < 0 || s.pose >= static_cast<int>(poses.size())) {
        throw ValidationError("sun term pose index out of range");
      }
    }
  }
};

struct SolveOptions
{
  int max_iters = 50;
  double lambda0 = 1e-4;
  double update_tol = 1e-10;
  double cost_tol = 1e-9;
  double lambda_max = 1e12;
};

struct SolveReport
{
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;
  double max_update_norm = 0.0;
  int dropped_observations = 0;  // invalid residuals at the final linearization
  std::vector<double> accepted_costs;
};

struct WindowEstimate
{
  std::vector<Pose> poses;
  std::vector<Vec3> landmarks;
};

struct WindowSolution
{
  WindowEstimate estimate;
  SolveReport report;
};

// ---------------------------------------------------------------------------
// Residuals

struct ReprojectionLinearization
{
  bool valid = false;
  Vec3 residual = Vec3::Zero();
  Mat36 d_pose = Mat36::Zero();     // left increment (rotation, translation)
  Mat3 d_landmark = Mat3::Zero();
};

/// e = g(T p) - y with Jacobians; invalid when the point is behind the camera.
inline ReprojectionLinearization linearize_reprojection(const Pose& T_kb, const Vec3& p_b,
                                                        const StereoObservation& y, const StereoIntrinsics& K)
{
  ReprojectionLinearization out;
  const Vec3 p = T_kb * p_b;
  if (!(p.z() > kDefaultMinDepth)) return out;
  out.valid = true;
  out.residual = project_vec(K, p) - y.vec();
  const Mat3 G = project_jacobian(K, p);
  out.d_pose.leftCols<3>() = -G * hat(p);
  out.d_pose.rightCols<3>() = G;
  out.d_landmark = G * T_kb.rotation.matrix();
  return out;
}

struct ResidualResult
{
  bool valid = false;
  Vec3 value = Vec3::Zero();
};

inline ResidualResult reprojection_residual(const Pose& T_kb, const Vec3& p_b, const StereoObservation& y,
                                            const StereoIntrinsics& K)
{
  const Vec3 p = T_kb * p_b;
  if (!(p.z() > kDefaultMinDepth)) return {};
  return {true, project_vec(K, p) - y.vec()};
}

/// e_s = R_{k,b} R_{b,w} s_w - s_k, plain Euclidean difference of unit vectors.
inline Vec3 sun_residual(const Pose& T_kb, const Pose& T_bw, const UnitVec3& s_w, const SunMeasurement& s_k)
{
  if (std::abs(s_k.direction.vec().norm() - 1.0) > 1e-3) {
    throw ValidationError("sun measurement is not a unit vector");
  }
  return T_kb.rotation * (T_bw.rotation * s_w.vec()) - s_k.direction.vec();
}

/// d e_s / d(left increment of T_{k,b}); translation columns are zero.
inline Mat36 sun_residual_jacobian(const Pose& T_kb, const Pose& T_bw, const UnitVec3& s_w)
{
  const Vec3 predicted = T_kb.rotation * (T_bw.rotation * s_w.vec());
  Mat36 J = Mat36::Zero();
  J.leftCols<3>() = -hat(predicted);
  return J;
}

/// e^T R^-1 e; throws ConfigError unless R is SPD.
inline double mahalanobis_squared(const Vec3& e, const Mat3& covariance)
{
  return (sqrt_information(covariance) * e).squaredNorm();
}

namespace detail {

struct WhitenedProblem
{
  std::vector<Mat3> obs_sqrt_info;
  std::vector<Mat3> sun_sqrt_info;
};

inline WhitenedProblem whiten(const WindowProblem& p)
{
  WhitenedProblem w;
  w.obs_sqrt_info.reserve(p.observations.size());
  for (const auto& o : p.observations) w.obs_sqrt_info.push_back(sqrt_information(o.y.covariance));
  w.sun_sqrt_info.reserve(p.sun.size());
  for (const auto& s : p.sun) w.sun_sqrt_info.push_back(sqrt_information(s.measurement.covariance));
  return w;
}

inline double evaluate_cost(const WindowProblem& p, const WhitenedProblem& w, const std::vector<Pose>& poses,
                            const std::vector<Vec3>& landmarks, int* invalid = nullptr)
{
  double cost = 0.0;
  int bad = 0;
  for (std::size_t i = 0; i < p.observations.size(); ++i) {
    const auto& o = p.observations[i];
    const auto r = reprojection_residual(poses[static_cast<std::size_t>(o.pose)],
                                         landmarks[static_cast<std::size_t>(o.landmark)], o.y, p.camera);
    if (!r.valid) {
      ++bad;
      continue;
    }
    cost += (w.obs_sqrt_info[i] * r.value).squaredNorm();
  }
  for (std::size_t i = 0; i < p.sun.size(); ++i) {
    const auto& s = p.sun[i];
    const Vec3 e = sun_residual(poses[static_cast<std::size_t>(s.pose)], p.base_to_world, p.sun_world, s.measurement);
    cost += (w.sun_sqrt_info[i] * e).squaredNorm();
  }
  if (invalid) *invalid = bad;
  return cost;
}

}  // namespace detail

/// Sum of squared Mahalanobis residuals at the problem's current state.
inline double total_cost(const WindowProblem& problem)
{
  const auto w = detail::whiten(problem);
  return detail::evaluate_cost(problem, w, problem.poses, problem.landmarks);
}

/**
 * Damped Gauss-Newton over left SE(3) increments of every non-base pose and
 * additive landmark increments. Landmarks are eliminated with a Schur
 * complement so only a 6(N-1) square system is factored. lambda is divided
 * by 10 on an accepted step and multiplied by 10 on a rejected one; a step is
 * accepted only if it does not raise the cost or the number of behind-camera
 * residuals.
 */
inline WindowSolution solve_window(const WindowProblem& problem, const SolveOptions& opts = {})
{
  problem.validate();
  const auto w = detail::whiten(problem);
  const int np = static_cast<int>(problem.poses.size()) - 1;
  const int nl = static_cast<int>(problem.landmarks.size());
  const int dim = 6 * np;

  std::vector<Pose> poses = problem.poses;
  std::vector<Vec3> landmarks = problem.landmarks;

  // Per landmark: (free pose index, observation index) pairs.
  std::vector<std::vector<std::pair<int, std::size_t>>> by_landmark(static_cast<std::size_t>(nl));
  for (std::size_t i = 0; i < problem.observations.size(); ++i) {
    const auto& o = problem.observations[i];
    by_landmark[static_cast<std::size_t>(o.landmark)].emplace_back(o.pose - 1, i);
  }

  SolveReport report;
  int invalid = 0;
  double cost = detail::evaluate_cost(problem, w, poses, landmarks, &invalid);
  report.initial_cost = cost;
  report.accepted_costs.push_back(cost);
  double lambda = opts.lambda0;

  while (report.iterations < opts.max_iters) {
    if (cost == 0.0) {
      report.converged = true;
      break;
    }

    // Linearize.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd gp = Eigen::VectorXd::Zero(dim);
    std::vector<Mat3> C(static_cast<std::size_t>(nl), Mat3::Zero());
    std::vector<Vec3> gl(static_cast<std::size_t>(nl), Vec3::Zero());
    std::vector<std::vector<std::pair<int, Mat63>>> B(static_cast<std::size_t>(nl));
    std::vector<bool> active(static_cast<std::size_t>(nl), false);

    for (int l = 0; l < nl; ++l) {
      const auto lu = static_cast<std::size_t>(l);
      for (const auto& [pi, oi] : by_landmark[lu]) {
        const auto& o = problem.observations[oi];
        const auto lin = linearize_reprojection(poses[static_cast<std::size_t>(o.pose)], landmarks[lu], o.y,
                                                problem.camera);
        if (!lin.valid) continue;
        active[lu] = true;
        const Mat3& W = w.obs_sqrt_info[oi];
        const Vec3 r = W * lin.residual;
        const Mat3 Jl = W * lin.d_landmark;
        C[lu] += Jl.transpose() * Jl;
        gl[lu] += Jl.transpose() * r;
        if (pi >= 0) {
          const Mat36 Jp = W * lin.d_pose;
          A.block<6, 6>(6 * pi, 6 * pi) += Jp.transpose() * Jp;
          gp.segment<6>(6 * pi) += Jp.transpose() * r;
          B[lu].emplace_back(pi, Jp.transpose() * Jl);
        }
      }
    }
    for (std::size_t i = 0; i < problem.sun.size(); ++i) {
      const auto& s = problem.sun[i];
      const int pi = s.pose - 1;
      if (pi < 0) continue;
      const Pose& T = poses[static_cast<std::size_t>(s.pose)];
      const Mat3& W = w.sun_sqrt_info[i];
      const Vec3 r = W * sun_residual(T, problem.base_to_world, problem.sun_world, s.measurement);
      const Mat36 J = W * sun_residual_jacobian(T, problem.base_to_world, problem.sun_world);
      A.block<6, 6>(6 * pi, 6 * pi) += J.transpose() * J;
      gp.segment<6>(6 * pi) += J.transpose() * r;
    }

    // Rank check on the undamped reduced system.
    if (dim > 0) {
      Eigen::MatrixXd S0 = A;
      for (int l = 0; l < nl; ++l) {
        const auto lu = static_cast<std::size_t>(l);
        if (!active[lu]) continue;
        const Eigen::LLT<Mat3> llt(C[lu]);
        if (llt.info() != Eigen::Success) {
          throw SolverSingularError(problem.window_index, "landmark " + std::to_string(l) + " is unconstrained");
        }
        const Mat3 Ci = llt.solve(Mat3::Identity());
        for (const auto& [i, Bi] : B[lu]) {
          for (const auto& [j, Bj] : B[lu]) {
            S0.block<6, 6>(6 * i, 6 * j) -= Bi * Ci * Bj.transpose();
          }
        }
      }
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S0, Eigen::EigenvaluesOnly);
      const double emax = eig.eigenvalues().cwiseAbs().maxCoeff();
      if (!(eig.eigenvalues().minCoeff() > 1e-12 * std::max(emax, 1e-300))) {
        throw SolverSingularError(problem.window_index, "reduced normal equations are rank deficient");
      }
    }

    // Damped steps until one is accepted or lambda saturates.
    bool accepted = false;
    while (!accepted && report.iterations < opts.max_iters) {
      ++report.iterations;
      Eigen::MatrixXd S = A;
      Eigen::VectorXd rhs = -gp;
      S.diagonal().array() += lambda;
      std::vector<Mat3> Ci(static_cast<std::size_t>(nl), Mat3::Zero());
      for (int l = 0; l < nl; ++l) {
        const auto lu = static_cast<std::size_t>(l);
        if (!active[lu]) continue;
        Ci[lu] = (C[lu] + lambda * Mat3::Identity()).llt().solve(Mat3::Identity());
        for (const auto& [i, Bi] : B[lu]) {
          rhs.segment<6>(6 * i) += Bi * (Ci[lu] * gl[lu]);
          for (const auto& [j, Bj] : B[lu]) {
            S.block<6, 6>(6 * i, 6 * j) -= Bi * Ci[lu] * Bj.transpose();
          }
        }
      }
      Eigen::VectorXd dp = Eigen::VectorXd::Zero(dim);
      if (dim > 0) {
        const Eigen::LLT<Eigen::MatrixXd> llt(S);
        if (llt.info() != Eigen::Success) {
          throw SolverSingularError(problem.window_index, "damped system is not positive definite");
        }
        dp = llt.solve(rhs);
      }
      double max_update = 0.0;
      std::vector<Pose> cand_poses = poses;
      std::vector<Vec3> cand_landmarks = landmarks;
      for (int i = 0; i < np; ++i) {
        const Vec6 d = dp.segment<6>(6 * i);
        max_update = std::max(max_update, d.norm());
        cand_poses[static_cast<std::size_t>(i + 1)] = se3_exp(d) * poses[static_cast<std::size_t>(i + 1)];
      }
      for (int l = 0; l < nl; ++l) {
        const auto lu = static_cast<std::size_t>(l);
        if (!active[lu]) continue;
        Vec3 rhs_l = -gl[lu];
        for (const auto& [i, Bi] : B[lu]) rhs_l -= Bi.transpose() * dp.segment<6>(6 * i);
        const Vec3 dl = Ci[lu] * rhs_l;
        max_update = std::max(max_update, dl.norm());
        cand_landmarks[lu] += dl;
      }
      report.max_update_norm = max_update;
      if (!std::isfinite(max_update)) {
        throw SolverSingularError(problem.window_index, "non-finite update");
      }

      int cand_invalid = 0;
      const double cand_cost = detail::evaluate_cost(problem, w, cand_poses, cand_landmarks, &cand_invalid);
      if (cand_cost <= cost && cand_invalid <= invalid) {
        accepted = true;
        const double decrease = (cost - cand_cost) / std::max(cost, std::numeric_limits<double>::min());
        poses.swap(cand_poses);
        landmarks.swap(cand_landmarks);
        cost = cand_cost;
        invalid = cand_invalid;
        report.accepted_costs.push_back(cost);
        lambda = std::max(lambda / 10.0, 1e-15);
        if (max_update < opts.update_tol || decrease < opts.cost_tol) {
          report.converged = true;
        }
      } else {
        lambda *= 10.0;
        if (max_update < opts.update_tol || lambda > opts.lambda_max) {
          // No representable improvement left around the current state.
          report.converged = true;
          break;
        }
      }
    }
    if (report.converged) break;
  }

  report.final_cost = cost;
  report.dropped_observations = invalid;
  return {{std::move(poses), std::move(landmarks)}, report};
}

}  // namespace sunvo
