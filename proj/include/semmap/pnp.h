#ifndef SEMMAP_PNP_H_
#define SEMMAP_PNP_H_

#include <span>
#include <vector>

#include <Eigen/Core>

#include "semmap/geom.h"

namespace semmap {

struct Correspondence {
  Vec2 observed_pixel = Vec2::Zero();
  Vec3 world_point = Vec3::Zero();
};

struct RefineConfig {
  int max_iterations = 50;
  // Stop once an iteration changes the cost by less than this (pixels^2).
  double convergence_tol = 1e-10;
  double initial_damping = 1e-3;

  void Validate() const;
};

struct RefineResult {
  // World-from-camera.
  Pose pose;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

using Residuals = Eigen::VectorXd;
// 2N x 6; columns are (rotation increment, translation increment).
using ResidualJacobian = Eigen::Matrix<double, Eigen::Dynamic, 6>;

// Stacked residuals p_i - pi(T_cw * P_i) for the camera-from-world
// transform T_cw. Throws kPointBehindCamera naming the first offending
// correspondence.
Residuals ReprojectionResiduals(const Pose& camera_from_world,
                                const CameraIntrinsics& k,
                                std::span<const Correspondence> corrs);

// Analytic Jacobian of ReprojectionResiduals with respect to a left
// increment T_cw <- (Exp(w), v) * T_cw, evaluated at zero increment.
ResidualJacobian ReprojectionJacobian(const Pose& camera_from_world,
                                      const CameraIntrinsics& k,
                                      std::span<const Correspondence> corrs);

// Applies the left increment delta = (w, v) used by the optimizer.
Pose ApplyLeftIncrement(const Pose& camera_from_world,
                        const Eigen::Matrix<double, 6, 1>& delta);

// Sum of squared reprojection residuals for a world-from-camera pose.
double ReprojectionCost(const Pose& world_from_camera,
                        const CameraIntrinsics& k,
                        std::span<const Correspondence> corrs);

// Levenberg-Marquardt over the camera pose. `initial` and the result are
// world-from-camera; residuals are evaluated with the inverse.
// Throws kInsufficientCorrespondences (< 3), kDegenerateNormalEquations
// (Jacobian rank < 6) and kPointBehindCamera for the initial pose.
RefineResult RefinePose(const Pose& initial, const CameraIntrinsics& k,
                        std::span<const Correspondence> corrs,
                        const RefineConfig& cfg = {});

}  // namespace semmap

#endif  // SEMMAP_PNP_H_
